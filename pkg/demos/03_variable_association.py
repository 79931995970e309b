"""LL variables that only matter to the upper level.

DS4 has LL variables that enter the UL objectives but not the LL ones. The LL
search cannot set them, so a small UL-driven search completes each LL solution.
"""

import numpy as np

from pspblemo.framework import Evaluator, RunConfig, ll_moea_search, vaa_check
from pspblemo.problems import make_problem

p = make_problem("DS4", "S1")
ev = Evaluator(p)
vaa = vaa_check(p, ev, np.random.default_rng(0))
print("LL variables:", p.n_ll, " UL-only flags:", vaa.v.tolist(), f" ({ev.ul_fe} UL + {ev.ll_fe} LL FE)")

# %% One LL search at x_u = 1.5; the UL-only block is filled in afterwards
cfg = RunConfig(vaa_first_gens=40)
L = ll_moea_search([1.5], p, ev, vaa, cfg, np.random.default_rng(1))
# the UL constraint involves only x1 and y1, so some LL members stay infeasible whatever y2 is
print("LL set size", len(L), " UL-feasible completions:", int((L.cv_ul <= 0).sum()))
print("UL-only block (optimum 0) of the first three members:")
print(L.X[:3, vaa.ul_only].round(4))
