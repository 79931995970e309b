"""Predicting a whole lower-level Pareto set from one upper-level vector.

Each archived x_u maps to a set of LL solutions. Sorting the set by the first
LL objective and attaching r = linspace(0, 1, m) turns it into ordinary
regression rows (x_u, r) -> x_l. Run with ``python demos/01_pareto_set_prediction.py``.
"""

import numpy as np

from pspblemo.metrics import igd
from pspblemo.problems import spec_toy1
from pspblemo.psp import build_dataset, predict_ps, shuffle_helper, train

p = spec_toy1()
rng = np.random.default_rng(0)

# %% Ten UL vectors with their analytic 20-point LL Pareto sets
entries = []
for x in rng.random(10):
    X = p.ll_pareto_set([x], 20)
    f, _ = p.evaluate_ll([x], X)
    entries.append(([x], X, f))
data = build_dataset(entries, p.ul_lower, p.ul_upper, p.ll_lower, p.ll_upper)
print("dataset rows:", len(data), "first group r:", data.inputs[:5, -1].round(3))

# %% Train once with ordered r and once with r shuffled inside every group
model, report = train(data, np.random.default_rng(1), p.ul_lower, p.ul_upper, p.ll_lower, p.ll_upper)
print(f"ordered r: {report.epochs_run} epochs, test MSE {report.test_mse:.2e}")
shuffled, rep_s = train(shuffle_helper(data, rng), np.random.default_rng(1), p.ul_lower, p.ul_upper, p.ll_lower, p.ll_upper)
print(f"shuffled r: {rep_s.epochs_run} epochs, test MSE {rep_s.test_mse:.2e}")

# %% Held-out UL vectors: predicted sets against random LL samples
print(f"{'x_u':>6} {'predicted':>10} {'shuffled':>10} {'random':>10}")
for x in rng.random(5):
    ref = p.ll_pareto_front([x], 100)
    fp, _ = p.evaluate_ll([x], predict_ps(model, [x], 20))
    fs, _ = p.evaluate_ll([x], predict_ps(shuffled, [x], 20))
    fr, _ = p.evaluate_ll([x], rng.random((20, 2)))
    print(f"{x:6.3f} {igd(ref, fp):10.4f} {igd(ref, fs):10.4f} {igd(ref, fr):10.4f}")
