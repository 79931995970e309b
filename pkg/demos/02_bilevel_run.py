"""Full bilevel runs: prediction-assisted search against the nested baseline.

The ``psp`` mode runs the real LL search every ``gamma`` generations and
replaces it with the trained predictor otherwise; ``ne`` searches every time.
"""

import numpy as np

from pspblemo.framework import RunConfig, run
from pspblemo.problems import generate_true_pf, spec_toy1

p = spec_toy1()
pf = generate_true_pf(p, 1025)

# %% Same seed, same generation budget, two modes
results = {}
for mode in ("psp", "ne"):
    results[mode] = run(p, RunConfig(mode=mode, seed=0, stop="none", max_ul_gen=30), true_pf=pf)
    L = results[mode].ledger
    print(f"{mode}: UL FE {L.ul_fe:7d}  LL FE {L.ll_fe:8d}  final IGD {L.final_igd:.4f}  "
          f"searched generations {len(L.search_generations)}, predicted {len(L.predict_generations)}")

# %% Convergence rows are logged every generation
psp = results["psp"].ledger.rows
for r in psp[::5]:
    print(f"gen {r.generation:3d}  LL FE {r.ll_fe:7d}  IGD {r.igd:.4f}  HV {r.hv:.4f}")

# %% The final front stays within the true front's box
F = results["psp"].final_F
print("final front size", len(F), "F range", F.min(axis=0).round(3), F.max(axis=0).round(3))
print("true front range", pf.min(axis=0).round(3), pf.max(axis=0).round(3))
