"""Bilevel driver with Pareto-set prediction.

The UL population is a set of ``(x_u, x_l)`` pairs: each UL vector contributes
one pair per member of its LL Pareto-set approximation. One UL generation

1. breeds one child ``x_u`` per pair with DE and polynomial mutation,
   regenerating children that repeat an evaluated vector,
2. obtains an LL set for every child, either by an LL search seeded with
   predicted solutions, by pure prediction, or (baseline) by a plain LL search,
3. evaluates the pairs at UL, ranks parents plus children and keeps ``pop_ul``
   pairs by DSS-based environmental selection,
4. updates the non-dominated UL archive and the convergence ledger.

Three modes are available: ``psp`` (search every ``gamma`` generations and
while the training set is smaller than ``ds``, predict otherwise), ``os``
(train once after the first generation, predict afterwards) and ``ne`` (no
model, search every generation).
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import psp
from .metrics import MetricPoint, hv2d, igd, make_monitor, reference_point
from .moea import (
    Population,
    de_variation,
    environmental_selection,
    nondominated_mask,
    polynomial_mutation,
    rank_population,
    row_key,
    unique_mask,
)
from .problems import BilevelProblem, generate_true_pf

log = logging.getLogger(__name__)

__all__ = [
    "RunConfig",
    "Evaluator",
    "VaaVector",
    "LLResult",
    "RunLedger",
    "RunResult",
    "vaa_check",
    "ll_moea_search",
    "psp_assisted_ll_search",
    "predicted_ll_set",
    "ul_vaa_search",
    "final_reevaluation",
    "run",
]

MODES = ("psp", "os", "ne")
_STOP_DEFAULTS = {"igd": (1e-2, 5), "hv": (1e-3, 10), "none": (1.0, 1)}


@dataclass
class RunConfig:
    """Parameters of one run; defaults follow the reference experimental setup."""

    mode: str = "psp"
    seed: int = 0
    pop_ul: int = 20
    pop_ll: int = 20
    gamma: float = 10
    ds: int = 5000
    stop: str = "hv"
    epsilon: float | None = None
    omega: int | None = None
    max_ul_gen: int = 500
    max_ul_fe: int | None = None
    max_ll_fe: int | None = None
    ll_first_gens: int = 300
    ll_stop: str = "igd"
    ll_epsilon: float = 1e-2
    ll_omega: int = 5
    ll_max_gen: int = 200
    vaa_pop: int = 5
    vaa_first_gens: int = 80
    vaa_hv_threshold: float = 1e-3
    vaa_omega: int = 10
    vaa_max_gen: int = 200
    de_f: float = 0.5
    de_cr: float = 1.0
    pm_eta: float = 20.0
    duplicate_attempts: int = 10
    dss_space: str = "objective"
    pf_size: int = 1025
    pf_cache: str | None = None
    final_reeval: bool = True
    train_max_epochs: int = 1000
    train_max_fail: int = 6

    def __post_init__(self):
        self.mode = self.mode.lower()
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.stop not in _STOP_DEFAULTS:
            raise ValueError(f"unknown stop mode {self.stop!r}")
        if isinstance(self.gamma, str):
            self.gamma = math.inf if self.gamma.lower() in ("inf", "infinity") else int(self.gamma)
        if not self.gamma >= 1:
            raise ValueError("gamma must be >= 1")
        if self.ds < self.pop_ll:
            raise ValueError("ds must be at least pop_ll")
        if self.pop_ul < 4 or self.pop_ll < 4 or self.vaa_pop < 4:
            raise ValueError("DE needs populations of at least 4")
        eps, om = _STOP_DEFAULTS[self.stop]
        if self.epsilon is None:
            self.epsilon = eps
        if self.omega is None:
            self.omega = om

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["gamma"] == math.inf:
            d["gamma"] = "inf"
        return d


class Evaluator:
    """Per-run FE ledger; one FE is one evaluated (x_u, x_l) row."""

    def __init__(self, problem: BilevelProblem):
        self.problem = problem
        self.ul_fe = 0
        self.ll_fe = 0

    def ul(self, xu, xl):
        F, G = self.problem.evaluate_ul(xu, xl)
        self.ul_fe += len(F)
        return F, G

    def ll(self, xu, xl):
        f, g = self.problem.evaluate_ll(xu, xl)
        self.ll_fe += len(f)
        return f, g


@dataclass
class VaaVector:
    """Association of every LL variable.

    Attributes:
        v: 1 where the variable affects only the UL objectives.
        redundant: True where the variable affects neither level.
    """

    v: np.ndarray
    redundant: np.ndarray

    @property
    def searched(self) -> np.ndarray:
        """Indices optimized by the LL search."""
        return np.flatnonzero((self.v == 0) & ~self.redundant)

    @property
    def ul_only(self) -> np.ndarray:
        return np.flatnonzero(self.v == 1)


def vaa_check(problem: BilevelProblem, evaluator: Evaluator, rng: np.random.Generator,
              n_random: int = 2, rel_step: float = 1e-4, tol: float = 1e-10) -> VaaVector:
    """Find LL variables that appear only in the UL objectives.

    Each LL variable is perturbed by ``rel_step`` times its range at the
    mid-bound point and at ``n_random`` random points. A change of the LL
    objectives marks it as LL-associated; otherwise a change of the UL
    objectives marks it as UL-only. A variable that changes neither is
    reported as redundant and later held at its mid-bound.
    """
    mid_u = 0.5 * (problem.ul_lower + problem.ul_upper)
    mid_l = 0.5 * (problem.ll_lower + problem.ll_upper)
    bu = np.vstack([mid_u, rng.uniform(problem.ul_lower, problem.ul_upper, (n_random, problem.n_ul))])
    bl = np.vstack([mid_l, rng.uniform(problem.ll_lower, problem.ll_upper, (n_random, problem.n_ll))])
    nb, d = len(bu), problem.n_ll
    span = problem.ll_upper - problem.ll_lower
    step = rel_step * span

    pu = np.repeat(bu, d, axis=0)
    pl = np.repeat(bl, d, axis=0)
    j = np.tile(np.arange(d), nb)
    up = pl[np.arange(len(pl)), j] + step[j]
    over = up > problem.ll_upper[j]
    pl[np.arange(len(pl)), j] = np.where(over, pl[np.arange(len(pl)), j] - step[j], up)

    f0, _ = evaluator.ll(bu, bl)
    F0, _ = evaluator.ul(bu, bl)
    f1, _ = evaluator.ll(pu, pl)
    F1, _ = evaluator.ul(pu, pl)
    dl = np.abs(f1 - np.repeat(f0, d, axis=0)).max(axis=1).reshape(nb, d).max(axis=0)
    du = np.abs(F1 - np.repeat(F0, d, axis=0)).max(axis=1).reshape(nb, d).max(axis=0)
    ll_assoc = dl > tol
    ul_assoc = du > tol
    v = (~ll_assoc & ul_assoc).astype(int)
    redundant = ~ll_assoc & ~ul_assoc
    for i in np.flatnonzero(redundant):
        log.warning("LL variable %d affects neither level; holding it at its mid-bound", i)
    return VaaVector(v, redundant)


@dataclass
class LLResult:
    """LL set for one UL vector.

    ``X`` holds full LL vectors; ``F_ul``/``cv_ul`` are filled when the UL
    values are already known (after the additional UL search).
    """

    X: np.ndarray
    f: np.ndarray
    F_ul: np.ndarray | None = None
    cv_ul: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.X)


class _LLContext:
    """Maps the searched LL block to full LL vectors for one UL vector."""

    def __init__(self, problem, vaa, rng):
        self.problem = problem
        self.idx = vaa.searched
        self.base = 0.5 * (problem.ll_lower + problem.ll_upper)
        ul_only = vaa.ul_only
        if ul_only.size:
            self.base[ul_only] = rng.uniform(problem.ll_lower[ul_only], problem.ll_upper[ul_only])
        self.lower = problem.ll_lower[self.idx]
        self.upper = problem.ll_upper[self.idx]

    def full(self, Xs):
        X = np.tile(self.base, (len(Xs), 1))
        X[:, self.idx] = Xs
        return X

    def random(self, n, rng):
        return rng.uniform(self.lower, self.upper, (n, len(self.idx)))


def _feasible_nd(X, f, cv):
    ok = np.flatnonzero(cv <= 0)
    if ok.size == 0:
        return ok
    nd = ok[nondominated_mask(f[ok])]
    keep = unique_mask(X[nd])
    return nd[keep]


def _evolve(pop: Population, evaluate, lower, upper, cfg: RunConfig, rng, monitor,
            min_gens: int, max_gens: int) -> Population:
    """Generic generational loop shared by the LL search and the UL-only search.

    Runs at least ``min_gens`` variation cycles, then until ``monitor`` stops
    or ``max_gens`` cycles have run.
    """
    def observe(p):
        feas = p.cv <= 0
        if feas.any():
            return monitor.update(p.F[feas])
        return False

    observe(pop)
    for gen in range(1, max_gens + 1):
        child = de_variation(pop.X, lower, upper, rng, cfg.de_f, cfg.de_cr)
        child = polynomial_mutation(child, lower, upper, rng, eta=cfg.pm_eta)
        F, cv = evaluate(child)
        both = Population.concat(pop, Population(child, F, cv))
        keep = environmental_selection(both.X, both.F, both.cv, len(pop), space=cfg.dss_space)
        pop = both.take(keep)
        if observe(pop) and gen >= min_gens:
            break
    return pop


def ll_moea_search(xu, problem: BilevelProblem, evaluator: Evaluator, vaa: VaaVector, cfg: RunConfig,
                   rng: np.random.Generator, initial: Population | None = None, first: bool = False,
                   context: _LLContext | None = None) -> LLResult:
    """LL MOEA over the LL-associated variables only.

    Args:
        xu: UL vector.
        initial: Already evaluated starting members over the searched block;
            padded with random members up to ``pop_ll``.
        first: Use the fixed long budget of the first UL generation instead of
            the stagnation monitor.
        context: Full-vector assembly; a new one draws fresh UL-only values.

    Returns:
        The feasible non-dominated LL set, completed by the additional UL
        search when UL-only LL variables exist.
    """
    ctx = context or _LLContext(problem, vaa, rng)
    xu = np.asarray(xu, dtype=float)
    n = cfg.pop_ll

    def evaluate(Xs):
        return evaluator.ll(xu, ctx.full(Xs))

    if initial is None or len(initial) == 0:
        pop = None
    else:
        pop = initial.take(np.arange(min(len(initial), n)))
    if pop is None or len(pop) < n:
        k = n - (0 if pop is None else len(pop))
        Xr = ctx.random(k, rng)
        Fr, cvr = evaluate(Xr)
        fill = Population(Xr, Fr, cvr)
        pop = fill if pop is None else Population.concat(pop, fill)

    if ctx.idx.size:
        if first:
            monitor = make_monitor("none", 1.0, 1)
            pop = _evolve(pop, evaluate, ctx.lower, ctx.upper, cfg, rng, monitor, cfg.ll_first_gens, cfg.ll_first_gens)
        else:
            monitor = make_monitor(cfg.ll_stop, cfg.ll_epsilon, cfg.ll_omega)
            pop = _evolve(pop, evaluate, ctx.lower, ctx.upper, cfg, rng, monitor, 0, cfg.ll_max_gen)

    keep = _feasible_nd(pop.X, pop.F, pop.cv)
    result = LLResult(ctx.full(pop.X[keep]), pop.F[keep])
    if len(result) and vaa.ul_only.size:
        result = ul_vaa_search(xu, result, problem, evaluator, vaa, cfg, rng)
    return result


def _best_member(F, cv) -> int:
    """FF-then-dominance rank, then larger crowding, then lexicographic objectives."""
    ranked = rank_population(F, cv)
    order = np.lexsort((F[:, 1], F[:, 0], -ranked.crowding, ranked.front))
    return int(order[0])


def ul_vaa_search(xu, L: LLResult, problem: BilevelProblem, evaluator: Evaluator, vaa: VaaVector,
                  cfg: RunConfig, rng: np.random.Generator) -> LLResult:
    """Optimize the UL-only LL variables against the UL objectives.

    Members of ``L`` are processed in order with their LL-associated block
    fixed. A member runs the long search (``vaa_first_gens`` cycles followed by
    HV stagnation) unless an earlier member already reached a UL-feasible
    completion; then the completion of the earlier feasible member with the
    nearest LL block seeds the population and HV stagnation alone decides.
    """
    xu = np.asarray(xu, dtype=float)
    uidx = vaa.ul_only
    lidx = np.setdiff1d(np.arange(problem.n_ll), uidx)
    lo, hi = problem.ll_lower[uidx], problem.ll_upper[uidx]
    X_out = L.X.copy()
    F_out = np.empty((len(L), 2))
    cv_out = np.empty(len(L))
    done: list[int] = []

    for i in range(len(L)):
        base = L.X[i].copy()

        def evaluate(Xu_only, base=base):
            X = np.tile(base, (len(Xu_only), 1))
            X[:, uidx] = Xu_only
            return evaluator.ul(xu, X)

        sources = [k for k in done if cv_out[k] <= 0]
        X0 = rng.uniform(lo, hi, (cfg.vaa_pop, len(uidx)))
        if sources:
            dist = [np.linalg.norm(L.X[k, lidx] - base[lidx]) for k in sources]
            src = sources[int(np.argmin(dist))]
            X0[0] = X_out[src, uidx]
            min_gens = 0
        else:
            min_gens = cfg.vaa_first_gens
        F0, cv0 = evaluate(X0)
        monitor = make_monitor("hv", cfg.vaa_hv_threshold, cfg.vaa_omega)
        max_gens = max(cfg.vaa_max_gen, min_gens)
        pop = _evolve(Population(X0, F0, cv0), evaluate, lo, hi, cfg, rng, monitor, min_gens, max_gens)
        b = _best_member(pop.F, pop.cv)
        X_out[i, uidx] = pop.X[b]
        F_out[i], cv_out[i] = pop.F[b], pop.cv[b]
        done.append(i)
    return LLResult(X_out, L.f.copy(), F_out, cv_out)


def predicted_ll_set(xu, model: psp.PspModel, problem, evaluator, vaa, cfg, rng,
                     context: _LLContext | None = None) -> Population:
    """Predict ``pop_ll`` LL solutions and keep the feasible non-dominated ones.

    Returned members are over the searched LL block.
    """
    ctx = context or _LLContext(problem, vaa, rng)
    Xs = psp.predict_ps(model, xu, cfg.pop_ll)
    f, cv = evaluator.ll(xu, ctx.full(Xs))
    keep = _feasible_nd(Xs, f, cv)
    return Population(Xs[keep], f[keep], cv[keep])


def psp_assisted_ll_search(xu, model, problem, evaluator, vaa, cfg, rng) -> LLResult:
    """Seed the LL MOEA with the non-dominated predicted solutions."""
    ctx = _LLContext(problem, vaa, rng)
    seeds = predicted_ll_set(xu, model, problem, evaluator, vaa, cfg, rng, ctx)
    return ll_moea_search(xu, problem, evaluator, vaa, cfg, rng, initial=seeds, context=ctx)


def _prediction_only(xu, model, problem, evaluator, vaa, cfg, rng) -> LLResult:
    ctx = _LLContext(problem, vaa, rng)
    pop = predicted_ll_set(xu, model, problem, evaluator, vaa, cfg, rng, ctx)
    result = LLResult(ctx.full(pop.X), pop.F)
    if len(result) and vaa.ul_only.size:
        result = ul_vaa_search(xu, result, problem, evaluator, vaa, cfg, rng)
    return result


@dataclass
class TrainingEntry:
    x_u: np.ndarray
    X_l: np.ndarray
    f: np.ndarray
    generation: int
    source: str = "search"


@dataclass
class RunLedger:
    """Per-generation record plus run totals."""

    rows: list[MetricPoint] = field(default_factory=list)
    search_generations: list[int] = field(default_factory=list)
    predict_generations: list[int] = field(default_factory=list)
    trainings: list[tuple[int, psp.TrainReport]] = field(default_factory=list)
    ul_fe: int = 0
    ll_fe: int = 0
    final_igd: float = float("nan")
    final_hv: float = float("nan")
    stop_reason: str = ""
    wall_time: float = 0.0


@dataclass
class RunResult:
    problem: BilevelProblem
    config: RunConfig
    vaa: VaaVector
    archive_xu: np.ndarray
    archive_xl: np.ndarray
    archive_F: np.ndarray
    final_xu: np.ndarray
    final_xl: np.ndarray
    final_F: np.ndarray
    ledger: RunLedger
    model: psp.PspModel | None
    training: list[TrainingEntry]
    true_pf: np.ndarray | None
    ref_point: np.ndarray | None


class _Pairs:
    """Flattened UL pairs."""

    def __init__(self, xu, xl, F, cv):
        self.xu, self.xl, self.F, self.cv = xu, xl, F, cv

    def __len__(self):
        return len(self.xu)

    @property
    def X(self):
        return np.hstack([self.xu, self.xl])

    def take(self, idx):
        return _Pairs(self.xu[idx], self.xl[idx], self.F[idx], self.cv[idx])

    @staticmethod
    def concat(*ps):
        ps = [p for p in ps if len(p)]
        return _Pairs(*(np.concatenate([getattr(p, a) for p in ps]) for a in ("xu", "xl", "F", "cv")))


def _ul_pairs(xu, L: LLResult, problem, evaluator) -> _Pairs:
    """UL-evaluated pairs of one candidate; an empty LL set gives one +inf pair."""
    xu = np.asarray(xu, dtype=float)
    if len(L) == 0:
        mid = 0.5 * (problem.ll_lower + problem.ll_upper)
        return _Pairs(xu[None], mid[None], np.full((1, 2), np.inf), np.full(1, np.inf))
    if L.F_ul is not None:
        F, cv = L.F_ul, L.cv_ul
    else:
        F, cv = evaluator.ul(xu, L.X)
    return _Pairs(np.tile(xu, (len(L), 1)), L.X.copy(), F, cv)


def _archive_update(archive: _Pairs | None, new: _Pairs) -> _Pairs | None:
    ok = (new.cv <= 0) & np.isfinite(new.F).all(axis=1)
    cand = new.take(np.flatnonzero(ok))
    if archive is not None:
        cand = _Pairs.concat(archive, cand) if len(cand) else archive
    if len(cand) == 0:
        return archive
    idx = np.flatnonzero(nondominated_mask(cand.F))
    idx = idx[unique_mask(cand.X[idx])]
    return cand.take(idx)


def _train_model(training, problem, vaa, cfg, rng):
    entries = [(e.x_u, e.X_l, e.f) for e in training]
    data = psp.build_dataset(entries, problem.ul_lower, problem.ul_upper, problem.ll_lower, problem.ll_upper,
                             ds_limit=cfg.ds, ll_index=vaa.searched)
    if len(data) < 20:
        return None, None
    idx = vaa.searched
    return psp.train(data, rng, problem.ul_lower, problem.ul_upper, problem.ll_lower[idx], problem.ll_upper[idx],
                     ll_index=idx, max_epochs=cfg.train_max_epochs, max_fail=cfg.train_max_fail)


def final_reevaluation(archive_xu, model, problem, evaluator, vaa, cfg, rng) -> _Pairs | None:
    """Re-run the predicted-seeded LL search on every distinct archived UL vector."""
    pairs = []
    keep = unique_mask(archive_xu)
    for xu in archive_xu[keep]:
        L = psp_assisted_ll_search(xu, model, problem, evaluator, vaa, cfg, rng)
        pairs.append(_ul_pairs(xu, L, problem, evaluator))
    return _archive_update(None, _Pairs.concat(*pairs)) if pairs else None


def _metrics(archive, true_pf, ref):
    if archive is None or len(archive) == 0:
        return float("nan"), 0.0
    g = igd(true_pf, archive.F) if true_pf is not None else float("nan")
    h = hv2d(archive.F, ref) if ref is not None else float("nan")
    return g, h


def _caps_hit(ev: Evaluator, cfg: RunConfig) -> str:
    if cfg.max_ul_fe is not None and ev.ul_fe >= cfg.max_ul_fe:
        return "max_ul_fe"
    if cfg.max_ll_fe is not None and ev.ll_fe >= cfg.max_ll_fe:
        return "max_ll_fe"
    return ""


def run(problem: BilevelProblem, config: RunConfig | None = None, rng: np.random.Generator | None = None,
        true_pf: np.ndarray | None = None, evaluator: Evaluator | None = None) -> RunResult:
    """Run the bilevel search.

    Args:
        problem: Benchmark instance.
        config: Run parameters (defaults if omitted).
        rng: Random stream; defaults to one seeded with ``config.seed``.
        true_pf: Reference front for the logged IGD/HV; sampled (and cached
            when ``config.pf_cache`` is set) if the problem provides a sampler.
        evaluator: FE ledger to charge; a fresh one by default.
    """
    cfg = config or RunConfig()
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    ev = evaluator or Evaluator(problem)
    t0 = time.perf_counter()
    ledger = RunLedger()

    if true_pf is None and problem.has_ul_pf:
        true_pf = generate_true_pf(problem, cfg.pf_size, cfg.pf_cache)
    ref = reference_point(true_pf) if true_pf is not None else None

    vaa = vaa_check(problem, ev, rng)
    training: list[TrainingEntry] = []
    n_rows = 0
    model = None
    evaluated: set[bytes] = set()

    # generation 1: long LL search for every random UL vector
    g = 1
    XU = rng.uniform(problem.ul_lower, problem.ul_upper, (cfg.pop_ul, problem.n_ul))
    batch = []
    for xu in XU:
        evaluated.add(row_key(xu))
        L = ll_moea_search(xu, problem, ev, vaa, cfg, rng, first=True)
        if len(L):
            training.append(TrainingEntry(xu.copy(), L.X, L.f, g))
            n_rows += len(L)
        batch.append(_ul_pairs(xu, L, problem, ev))
    pairs = _Pairs.concat(*batch)
    pop = pairs.take(environmental_selection(pairs.X, pairs.F, pairs.cv, cfg.pop_ul, space=cfg.dss_space))
    archive = _archive_update(None, pairs)
    ledger.search_generations.append(g)

    if cfg.mode != "ne" and training:
        model, report = _train_model(training, problem, vaa, cfg, rng)
        if report is not None:
            ledger.trainings.append((g, report))

    if ref is None:
        finite = pop.F[np.isfinite(pop.F).all(axis=1)]
        hv_ref = reference_point(finite) if len(finite) else None
    else:
        hv_ref = ref
    monitor = make_monitor(cfg.stop, cfg.epsilon, cfg.omega, hv_ref)

    def record(gen):
        gi, hi = _metrics(archive, true_pf, hv_ref)
        ledger.rows.append(MetricPoint(gen, ev.ul_fe, ev.ll_fe, gi, hi))

    def observe():
        feas = (pop.cv <= 0) & np.isfinite(pop.F).all(axis=1)
        return monitor.update(pop.F[feas]) if feas.any() else False

    record(g)
    stop = observe()
    reason = "converged" if stop else ""

    while not reason:
        reason = _caps_hit(ev, cfg)
        if reason:
            break
        if g >= cfg.max_ul_gen:
            reason = "max_ul_gen"
            break
        g += 1
        children = _breed(pop.xu, problem, cfg, rng, evaluated)

        if cfg.mode == "ne" or model is None:
            search = True
        elif cfg.mode == "os":
            search = False
        else:
            search = (g % cfg.gamma == 0) or (n_rows < cfg.ds)
        (ledger.search_generations if search else ledger.predict_generations).append(g)

        batch = []
        for xu in children:
            if not search:
                L = _prediction_only(xu, model, problem, ev, vaa, cfg, rng)
            elif cfg.mode == "ne" or model is None:
                L = ll_moea_search(xu, problem, ev, vaa, cfg, rng)
            else:
                L = psp_assisted_ll_search(xu, model, problem, ev, vaa, cfg, rng)
            if search and len(L):
                training.append(TrainingEntry(xu.copy(), L.X, L.f, g))
                n_rows += len(L)
            batch.append(_ul_pairs(xu, L, problem, ev))
        new = _Pairs.concat(*batch)
        archive = _archive_update(archive, new)

        if search and cfg.mode == "psp":
            m, report = _train_model(training, problem, vaa, cfg, rng)
            if m is not None:
                model = m
                ledger.trainings.append((g, report))
        elif search and cfg.mode == "os" and model is None:
            model, report = _train_model(training, problem, vaa, cfg, rng)
            if report is not None:
                ledger.trainings.append((g, report))

        both = _Pairs.concat(pop, new)
        pop = both.take(environmental_selection(both.X, both.F, both.cv, cfg.pop_ul, space=cfg.dss_space))
        record(g)
        if observe():
            reason = "converged"

    final = archive
    if cfg.mode in ("psp", "os") and cfg.final_reeval and model is not None and archive is not None \
            and reason not in ("max_ul_fe", "max_ll_fe"):
        final = final_reevaluation(archive.xu, model, problem, ev, vaa, cfg, rng)

    ledger.ul_fe, ledger.ll_fe = ev.ul_fe, ev.ll_fe
    ledger.final_igd, ledger.final_hv = _metrics(final, true_pf, hv_ref)
    ledger.stop_reason = reason
    ledger.wall_time = time.perf_counter() - t0

    empty_u = np.empty((0, problem.n_ul))
    empty_l = np.empty((0, problem.n_ll))
    empty_f = np.empty((0, 2))
    a = archive if archive is not None else _Pairs(empty_u, empty_l, empty_f, np.empty(0))
    f = final if final is not None else _Pairs(empty_u, empty_l, empty_f, np.empty(0))
    return RunResult(problem, cfg, vaa, a.xu, a.xl, a.F, f.xu, f.xl, f.F, ledger, model, training,
                     true_pf, hv_ref)


def _breed(parents_xu, problem, cfg, rng, evaluated: set[bytes]) -> np.ndarray:
    """One child per parent; repeats are redrawn up to ``duplicate_attempts`` times."""
    lo, hi = problem.ul_lower, problem.ul_upper

    def draw():
        c = de_variation(parents_xu, lo, hi, rng, cfg.de_f, cfg.de_cr)
        return polynomial_mutation(c, lo, hi, rng, eta=cfg.pm_eta)

    children = draw()
    batch: set[bytes] = set()
    for i in range(len(children)):
        key = row_key(children[i])
        attempts = 0
        while (key in evaluated or key in batch) and attempts < cfg.duplicate_attempts:
            children[i] = draw()[i]
            key = row_key(children[i])
            attempts += 1
        batch.add(key)
    evaluated.update(batch)
    return children
