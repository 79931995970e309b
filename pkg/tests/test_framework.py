import numpy as np
import pytest

import pspblemo.framework as fw
from pspblemo.framework import (
    Evaluator,
    LLResult,
    RunConfig,
    VaaVector,
    ll_moea_search,
    psp_assisted_ll_search,
    run,
    ul_vaa_search,
    vaa_check,
)
from pspblemo.metrics import igd
from pspblemo.moea import Population, environmental_selection
from pspblemo.problems import generate_true_pf, make_problem, spec_toy1
from synthetic import EmptyBelowHalf, UlOnly


class Counting:
    """Wraps a problem and counts evaluated rows independently of the ledger."""

    def __init__(self, problem):
        self.calls = {"ul": 0, "ll": 0}
        for level in ("ul", "ll"):
            inner = getattr(problem, f"evaluate_{level}")

            def wrapped(xu, xl, inner=inner, level=level):
                out = inner(xu, xl)
                self.calls[level] += len(out[0])
                return out

            setattr(problem, f"evaluate_{level}", wrapped)
        self.problem = problem


SMALL = dict(pop_ul=8, pop_ll=8, ll_first_gens=20, max_ul_gen=6, stop="none", pf_size=100, ds=40)


@pytest.fixture(scope="module")
def toy_pf():
    return generate_true_pf(spec_toy1(), 100)


# --- VAA ---------------------------------------------------------------------


def test_vaa_toy_all_zero():
    p = spec_toy1()
    ev = Evaluator(p)
    v = vaa_check(p, ev, np.random.default_rng(0))
    assert list(v.v) == [0, 0] and not v.redundant.any()
    assert ev.ul_fe > 0 and ev.ll_fe > 0


def test_vaa_ds4_flags_ul_factor_variables():
    p = make_problem("DS4")
    v = vaa_check(p, Evaluator(p), np.random.default_rng(0))
    expected = np.zeros(p.n_ll, dtype=int)
    expected[1 : p.K] = 1
    assert np.array_equal(v.v, expected)


def test_vaa_synthetic_and_redundant():
    p = UlOnly()
    v = vaa_check(p, Evaluator(p), np.random.default_rng(0))
    assert list(v.v) == [0, 1]
    assert list(v.searched) == [0] and list(v.ul_only) == [1]
    p3 = UlOnly(extra=1)
    v3 = vaa_check(p3, Evaluator(p3), np.random.default_rng(0))
    assert list(v3.v) == [0, 1, 0] and list(v3.redundant) == [False, False, True]
    assert list(v3.searched) == [0]


# --- LL search ---------------------------------------------------------------


def test_ll_search_reaches_toy_front():
    p = spec_toy1()
    vaa = VaaVector(np.zeros(2, dtype=int), np.zeros(2, dtype=bool))
    L = ll_moea_search([1.0], p, Evaluator(p), vaa, RunConfig(), np.random.default_rng(0))
    assert igd(p.ll_pareto_front([1.0], 100), L.f) <= 0.05


def test_ll_search_converged_start_stops_quickly():
    p = spec_toy1()
    cfg = RunConfig()
    vaa = VaaVector(np.zeros(2, dtype=int), np.zeros(2, dtype=bool))
    X = p.ll_pareto_set([1.0], cfg.pop_ll)
    f, g = p.evaluate_ll([1.0], X)
    ev = Evaluator(p)
    ll_moea_search([1.0], p, ev, vaa, cfg, np.random.default_rng(0), initial=Population(X, f, g))
    # no padding, then at most omega + 1 generations of pop_ll children
    assert ev.ll_fe <= (cfg.ll_omega + 1) * cfg.pop_ll


def test_initial_population_fill_rule(monkeypatch):
    p = spec_toy1()
    cfg = RunConfig()
    vaa = VaaVector(np.zeros(2, dtype=int), np.zeros(2, dtype=bool))
    seen = {}
    real = fw._evolve

    def spy(pop, *a, **k):
        seen["X"] = pop.X.copy()
        return real(pop, *a, **k)

    monkeypatch.setattr(fw, "_evolve", spy)
    X = p.ll_pareto_set([1.0], 7)
    f, g = p.evaluate_ll([1.0], X)
    ev = Evaluator(p)
    ll_moea_search([1.0], p, ev, vaa, cfg, np.random.default_rng(0), initial=Population(X, f, g))
    assert len(seen["X"]) == 20
    assert np.array_equal(seen["X"][:7], X)
    # full initial population: no padding evaluations
    X20 = p.ll_pareto_set([1.0], 20)
    f20, g20 = p.evaluate_ll([1.0], X20)
    ev2 = Evaluator(p)
    cfg0 = RunConfig(ll_max_gen=0)
    ll_moea_search([1.0], p, ev2, vaa, cfg0, np.random.default_rng(0), initial=Population(X20, f20, g20))
    assert ev2.ll_fe == 0


def test_ll_search_holds_ul_only_block_and_completes_it():
    p = UlOnly()
    vaa = vaa_check(p, Evaluator(p), np.random.default_rng(0))
    L = ll_moea_search([0.5], p, Evaluator(p), vaa, RunConfig(), np.random.default_rng(1))
    assert len(L) > 0 and L.F_ul is not None
    assert np.all(L.cv_ul <= 0)
    # the UL search pushes y2 towards its UL optimum 0.5
    assert np.abs(L.X[:, 1] - 0.5).max() < 0.05


def _spy_vaa(monkeypatch):
    calls = []
    real = fw._evolve

    def spy(pop, evaluate, lower, upper, cfg, rng, monitor, min_gens, max_gens):
        calls.append((pop.X[0].copy(), min_gens))
        return real(pop, evaluate, lower, upper, cfg, rng, monitor, min_gens, max_gens)

    monkeypatch.setattr(fw, "_evolve", spy)
    return calls


def test_ul_vaa_search_transfer(monkeypatch):
    p = UlOnly()
    vaa = vaa_check(p, Evaluator(p), np.random.default_rng(0))
    cfg = RunConfig()
    X = np.array([[0.2, 0.9], [0.2, 0.1], [0.8, 0.1]])
    f, _ = p.evaluate_ll([0.5], X)
    calls = _spy_vaa(monkeypatch)
    out = ul_vaa_search([0.5], LLResult(X, f), p, Evaluator(p), vaa, cfg, np.random.default_rng(0))
    assert [c[1] for c in calls] == [cfg.vaa_first_gens, 0, 0]
    # second member shares the LL block of the first and starts from its completion
    assert calls[1][0][0] == out.X[0, 1]
    assert np.all(out.cv_ul <= 0)
    assert np.array_equal(out.X[:, 0], X[:, 0])
    F, cv = p.evaluate_ul([0.5], out.X)
    assert np.array_equal(F, out.F_ul) and np.array_equal(cv, out.cv_ul)


def test_ul_vaa_search_single_member_and_all_infeasible(monkeypatch):
    cfg = RunConfig()
    p = UlOnly()
    vaa = VaaVector(np.array([0, 1]), np.zeros(2, dtype=bool))
    calls = _spy_vaa(monkeypatch)
    X = np.array([[0.3, 0.5]])
    ul_vaa_search([0.5], LLResult(X, p.evaluate_ll([0.5], X)[0]), p, Evaluator(p), vaa, cfg, np.random.default_rng(0))
    assert [c[1] for c in calls] == [cfg.vaa_first_gens]
    calls.clear()
    hard = UlOnly(limit=2.0)  # y2 >= 2 is impossible inside [0, 1]
    X = np.array([[0.1, 0.5], [0.5, 0.5], [0.9, 0.5]])
    out = ul_vaa_search([0.5], LLResult(X, hard.evaluate_ll([0.5], X)[0]), hard, Evaluator(hard), vaa, cfg,
                        np.random.default_rng(0))
    assert [c[1] for c in calls] == [cfg.vaa_first_gens] * 3
    assert np.all(out.cv_ul > 0)


def test_psp_assisted_search_runs_on_trained_model(toy_pf):
    res = run(spec_toy1(), RunConfig(**SMALL), true_pf=toy_pf)
    p = spec_toy1()
    ev = Evaluator(p)
    L = psp_assisted_ll_search([0.6], res.model, p, ev, res.vaa, res.config, np.random.default_rng(0))
    assert len(L) > 0 and ev.ll_fe >= res.config.pop_ll
    assert igd(p.ll_pareto_front([0.6], 100), L.f) <= 0.05


# --- run ---------------------------------------------------------------------


def test_fe_conservation(toy_pf):
    c = Counting(spec_toy1())
    res = run(c.problem, RunConfig(**SMALL), true_pf=toy_pf)
    assert res.ledger.ul_fe == c.calls["ul"]
    assert res.ledger.ll_fe == c.calls["ll"]
    # the final re-evaluation is included
    assert res.ledger.rows[-1].ll_fe < res.ledger.ll_fe


def test_fe_conservation_with_ul_only_variables():
    c = Counting(UlOnly())
    res = run(c.problem, RunConfig(**{**SMALL, "max_ul_gen": 3}))
    assert (res.ledger.ul_fe, res.ledger.ll_fe) == (c.calls["ul"], c.calls["ll"])


def test_deterministic_replay(toy_pf):
    a = run(spec_toy1(), RunConfig(**SMALL), true_pf=toy_pf)
    b = run(spec_toy1(), RunConfig(**SMALL), true_pf=toy_pf)
    assert a.ledger.rows == b.ledger.rows
    assert np.array_equal(a.final_F, b.final_F) and np.array_equal(a.archive_xl, b.archive_xl)
    c = run(spec_toy1(), RunConfig(**{**SMALL, "seed": 1}), true_pf=toy_pf)
    assert c.ledger.rows != a.ledger.rows


def test_psp_schedule_and_archive_purity(toy_pf):
    cfg = RunConfig(**{**SMALL, "max_ul_gen": 12, "gamma": 5})
    res = run(spec_toy1(), cfg, true_pf=toy_pf)
    L = res.ledger
    # 64 rows after generation 1 exceed ds = 40, so only multiples of gamma search
    assert L.search_generations == [1, 5, 10]
    assert L.predict_generations == [g for g in range(2, 13) if g % 5]
    assert {e.generation for e in res.training} <= set(L.search_generations)
    assert all(e.source == "search" for e in res.training)
    assert [g for g, _ in L.trainings] == [1, 5, 10]


def test_ds_threshold_forces_search(toy_pf):
    res = run(spec_toy1(), RunConfig(**{**SMALL, "ds": 5000}), true_pf=toy_pf)
    assert res.ledger.predict_generations == []
    assert len(res.ledger.trainings) == SMALL["max_ul_gen"]


def test_os_mode_trains_once(toy_pf):
    res = run(spec_toy1(), RunConfig(**{**SMALL, "mode": "os"}), true_pf=toy_pf)
    assert len(res.ledger.trainings) == 1
    assert res.ledger.search_generations == [1]
    assert res.model is not None


def test_infinite_gamma_matches_one_shot(toy_pf):
    a = run(spec_toy1(), RunConfig(**{**SMALL, "mode": "os"}), true_pf=toy_pf)
    b = run(spec_toy1(), RunConfig(**{**SMALL, "gamma": "inf"}), true_pf=toy_pf)
    assert a.ledger.rows == b.ledger.rows
    assert np.array_equal(a.final_F, b.final_F)


def test_ne_mode_never_builds_a_model(toy_pf):
    res = run(spec_toy1(), RunConfig(**{**SMALL, "mode": "ne"}), true_pf=toy_pf)
    assert res.model is None and res.ledger.trainings == []
    assert res.ledger.search_generations == list(range(1, SMALL["max_ul_gen"] + 1))
    assert np.array_equal(res.final_F, res.archive_F)


def test_final_front_nondominated_and_rows_monotone(toy_pf):
    from pspblemo.moea import dominance_matrix

    res = run(spec_toy1(), RunConfig(**SMALL), true_pf=toy_pf)
    assert not dominance_matrix(res.final_F).any()
    assert not dominance_matrix(res.archive_F).any()
    fe = [(r.ul_fe, r.ll_fe) for r in res.ledger.rows]
    assert fe == sorted(fe)
    assert [r.generation for r in res.ledger.rows] == list(range(1, SMALL["max_ul_gen"] + 1))


def test_fe_cap_stops_cleanly(toy_pf):
    res = run(spec_toy1(), RunConfig(**{**SMALL, "max_ll_fe": 3000, "max_ul_gen": 100}), true_pf=toy_pf)
    assert res.ledger.stop_reason == "max_ll_fe"
    assert len(res.final_F) > 0


def test_empty_ll_sets_never_reach_archive():
    res = run(EmptyBelowHalf(), RunConfig(**{**SMALL, "max_ul_gen": 4}))
    assert len(res.archive_F) > 0
    assert np.all(np.isfinite(res.archive_F)) and np.all(res.archive_xu >= 0.5)
    # an empty set becomes one +inf pair that loses against any real pair
    p = EmptyBelowHalf()
    ev = Evaluator(p)
    bad = fw._ul_pairs([0.2], LLResult(np.empty((0, 1)), np.empty((0, 2))), p, ev)
    good = fw._ul_pairs([0.9], LLResult(np.array([[0.99]]), np.array([[0.99, 0.0]])), p, ev)
    both = fw._Pairs.concat(bad, good)
    assert list(environmental_selection(both.X, both.F, both.cv, 1)) == [1]
    assert fw._archive_update(None, bad) is None


def test_config_validation():
    with pytest.raises(ValueError):
        RunConfig(gamma=0)
    with pytest.raises(ValueError):
        RunConfig(ds=5)
    with pytest.raises(ValueError):
        RunConfig(mode="xx")
    assert RunConfig(stop="igd").epsilon == 1e-2 and RunConfig(stop="hv").omega == 10
    assert RunConfig(gamma="inf").to_dict()["gamma"] == "inf"
