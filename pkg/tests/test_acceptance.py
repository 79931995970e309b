"""End-to-end acceptance checks; each prints one PASS/FAIL line."""

import itertools
import time

import numpy as np
import pytest

import pspblemo.framework as fw
from poc import poc_trial
from pspblemo import harness
from pspblemo.framework import Evaluator, LLResult, RunConfig, run, ul_vaa_search, vaa_check
from pspblemo.metrics import HvTerminationMonitor, IgdTerminationMonitor, hv2d, igd
from pspblemo.moea import rank_population
from pspblemo.problems import generate_true_pf, make_problem, spec_toy1
from pspblemo.stats import rank_sum_test
from synthetic import UlOnly


@pytest.fixture
def report(capsys):
    def emit(n, name, ok, detail, started):
        with capsys.disabled():
            print(f"\n[acceptance {n}] {'PASS' if ok else 'FAIL'} {name}: {detail} ({time.perf_counter() - started:.1f} s)")
        assert ok, detail

    return emit


def constrained_fronts(F, cv):
    """Peel fronts under feasibility-first dominance, one pair at a time."""
    def dominates(i, j):
        if cv[i] <= 0 and cv[j] > 0:
            return True
        if cv[i] > 0 or cv[j] > 0:
            return cv[i] > 0 and cv[j] > 0 and cv[i] < cv[j]
        return all(F[i] <= F[j]) and any(F[i] < F[j])

    left, front, k = set(range(len(F))), np.full(len(F), -1), 0
    while left:
        cur = [i for i in left if not any(dominates(j, i) for j in left if j != i)]
        front[cur] = k
        left -= set(cur)
        k += 1
    return front


def test_1_sorting_oracle(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    mismatches = 0
    for _ in range(100):
        F = rng.random((50, 2)).round(2)  # rounding forces ties
        cv = np.where(rng.random(50) < 0.2, rng.integers(1, 5, 50) / 4, 0.0)
        mismatches += not np.array_equal(rank_population(F, cv).front, constrained_fronts(F, cv))
    elapsed = time.perf_counter() - t0
    report(1, "non-dominated sorting", mismatches == 0 and elapsed < 10,
           f"{mismatches} mismatching populations of 100", t0)


def _mc_hv(F, ref, n, rng):
    lo = F.min(axis=0)
    S = rng.uniform(lo, ref, (n, 2))
    order = np.argsort(F[:, 0])
    f1, best_f2 = F[order, 0], np.minimum.accumulate(F[order, 1])
    k = np.searchsorted(f1, S[:, 0], side="right")
    hit = (k > 0) & (S[:, 1] >= best_f2[np.maximum(k - 1, 0)])
    return hit.mean() * np.prod(ref - lo)


def test_2_metric_oracles(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    worst_igd, worst_hv = 0.0, 0.0
    for i in range(20):
        t = np.sort(rng.random(rng.integers(10, 120)))
        F = np.column_stack([t, 1 - t ** (0.3 + 3 * rng.random())]) + rng.normal(0, 0.02, (len(t), 2))
        R = rng.random((60, 2))
        brute = np.mean([min(np.hypot(*(r - a)) for a in F) for r in R])
        worst_igd = max(worst_igd, abs(igd(R, F) - brute))
        ref = F.max(axis=0) * 1.1 + 0.05
        exact = hv2d(F, ref)
        worst_hv = max(worst_hv, abs(exact - _mc_hv(F, ref, 1_000_000, rng)) / exact)
    ok = worst_igd <= 1e-12 and worst_hv <= 1e-2 and time.perf_counter() - t0 < 30
    report(2, "IGD and HV", ok, f"max IGD deviation {worst_igd:.1e}, max HV relative error {worst_hv:.2e}", t0)


def test_3_proof_of_concept(report):
    t0 = time.perf_counter()
    ratios, wins = [], 0
    for seed in range(5):
        ordered = poc_trial(seed)
        shuffled = poc_trial(seed, shuffle=True)
        ratios.append(float(np.median(ordered[:, 1] / ordered[:, 0])))
        wins += ordered[:, 0].mean() < shuffled[:, 0].mean()
    ok = np.median(ratios) >= 5 and wins >= 4 and time.perf_counter() - t0 < 120
    report(3, "Pareto-set prediction on SPEC-TOY1", ok,
           f"median random/predicted IGD ratio {np.median(ratios):.2f} (per seed {np.round(ratios, 2).tolist()}), "
           f"ordered r better in {wins}/5 seeds", t0)


@pytest.mark.slow
def test_4_ds2_desk_run(report, tmp_path):
    t0 = time.perf_counter()
    p = make_problem("DS2")
    pf = generate_true_pf(p, 1025, tmp_path)
    finals = []
    for seed in range(5):
        res = run(p, RunConfig(mode="psp", seed=seed, stop="hv", epsilon=1e-3, omega=10), true_pf=pf)
        finals.append(res.ledger.final_igd)
    med = float(np.median(finals))
    report(4, "DS2 desk-scale run", med <= 0.10 and time.perf_counter() - t0 < 1800,
           f"median final IGD {med:.4f} over seeds 0-4, values {np.round(finals, 4).tolist()}", t0)


@pytest.mark.slow
def test_5_fe_economy(report):
    t0 = time.perf_counter()
    p = spec_toy1()
    pf = generate_true_pf(p, 1025)
    fe, finals = {}, {}
    for mode in ("psp", "ne"):
        runs = [run(p, RunConfig(mode=mode, seed=s, stop="none", max_ul_gen=50, final_reeval=True), true_pf=pf)
                for s in range(3)]
        fe[mode] = sum(r.ledger.ll_fe for r in runs)
        finals[mode] = float(np.median([r.ledger.final_igd for r in runs]))
    share = fe["psp"] / fe["ne"]
    ok = share <= 0.6 and finals["psp"] <= 1.5 * finals["ne"] and time.perf_counter() - t0 < 600
    report(5, "LL FE economy on SPEC-TOY1", ok,
           f"PSP uses {share:.1%} of NE LL FE; median final IGD PSP {finals['psp']:.4f} vs NE {finals['ne']:.4f}", t0)


def test_6_termination_monitors(report):
    t0 = time.perf_counter()
    t = np.linspace(0, 1, 20)
    frozen = np.column_stack([t, 1 - t])
    igd_m, hv_m = IgdTerminationMonitor(1e-2, 5), HvTerminationMonitor(1e-3, 10, ref_point=[1.1, 1.1])
    igd_stop = [igd_m.update(frozen) for _ in range(20)].index(True) + 1
    hv_stop = [hv_m.update(frozen) for _ in range(20)].index(True) + 1
    moving = IgdTerminationMonitor(1e-2, 5)
    never = not any(moving.update(frozen - 2e-2 * g) for g in range(50))
    ok = igd_stop == 6 and hv_stop == 11 and never
    report(6, "termination monitors", ok,
           f"IGD stop at generation {igd_stop} (omega 5), HV stop at {hv_stop} (omega 10), moving front stopped: {not never}", t0)


def test_7_vaa_and_transfer(report, monkeypatch):
    t0 = time.perf_counter()
    p = UlOnly()
    vaa = vaa_check(p, Evaluator(p), np.random.default_rng(0))
    starts = []
    real = fw._evolve

    def spy(pop, evaluate, lower, upper, cfg, rng, monitor, min_gens, max_gens):
        starts.append(min_gens)
        return real(pop, evaluate, lower, upper, cfg, rng, monitor, min_gens, max_gens)

    monkeypatch.setattr(fw, "_evolve", spy)
    X = np.column_stack([np.linspace(0, 1, 6), np.full(6, 0.05)])
    f, _ = p.evaluate_ll([0.5], X)
    out = ul_vaa_search([0.5], LLResult(X, f), p, Evaluator(p), vaa, RunConfig(), np.random.default_rng(1))
    transfers = sum(m == 0 for m in starts)
    ok = list(vaa.v) == [0, 1] and transfers == len(X) - 1 and bool(np.all(out.cv_ul <= 0))
    report(7, "variable association and UL-only search", ok,
           f"vector {vaa.v.tolist()}, {transfers} transferred starts of {len(X) - 1}, "
           f"{int((out.cv_ul <= 0).sum())}/{len(X)} UL-feasible completions", t0)


def test_8_determinism(report, tmp_path):
    t0 = time.perf_counter()
    same = []
    cases = [(spec_toy1(), RunConfig(seed=3, max_ul_gen=12, stop="none", ds=200)),
             (make_problem("DS4", "S1"), RunConfig(seed=4, pop_ul=8, pop_ll=8, ll_first_gens=30, max_ul_gen=5, ds=60,
                                                 vaa_first_gens=20, vaa_max_gen=40, pf_size=200))]
    for k, (p, cfg) in enumerate(cases):
        a = harness.write_run(run(p, cfg), tmp_path / f"{k}a", wall_clock=False)
        b = harness.write_run(run(p, cfg), tmp_path / f"{k}b", wall_clock=False)
        same.append((a / "convergence.csv").read_bytes() == (b / "convergence.csv").read_bytes())
    report(8, "deterministic replay", all(same), f"identical convergence.csv for {sum(same)}/{len(same)} runs", t0)


def _enumerated_p(a, b):
    pooled = np.concatenate([a, b])
    ranks = np.array([(pooled < x).sum() + ((pooled == x).sum() + 1) / 2 for x in pooled])
    n, N = len(a), len(pooled)
    mean = n * (N + 1) / 2
    obs = abs(ranks[:n].sum() - mean)
    sums = np.array([ranks[list(c)].sum() for c in itertools.combinations(range(N), n)])
    return float(np.mean(np.abs(sums - mean) >= obs - 1e-9))


def test_9_rank_sum_validity(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(11)
    worst = 0.0
    for n in range(3, 9):
        for m in range(3, 9):
            for shift in (0.0, 1.0, 3.0):
                a = rng.integers(0, 6, n).astype(float)
                b = rng.integers(0, 6, m) + shift
                worst = max(worst, abs(rank_sum_test(a, b)[1] - _enumerated_p(a, b)))
    report(9, "rank-sum p-values", worst <= 5e-3, f"max deviation from enumeration {worst:.1e} over sizes 3..8", t0)
