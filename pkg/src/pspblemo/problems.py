"""Bilevel bi-objective benchmark problems.

Every problem minimizes two objectives at each level::

    min_{xu}  F(xu, xl) = (F1, F2)               s.t. G(xu, xl) <= 0
    xl in argmin_{xl} f(xu, xl) = (f1, f2)      s.t. g(xu, xl) <= 0

Evaluation is batched: ``xu`` has shape ``(n, n_ul)`` (or ``(n_ul,)``, broadcast
over rows) and ``xl`` has shape ``(n, n_ll)``. Both evaluators return the
objective matrix ``(n, 2)`` and an aggregate constraint violation ``(n,)``.

The TP and DS formulations follow Deb & Sinha, "An efficient and accurate
solution methodology for bilevel multi-objective programming problems using a
hybrid evolutionary-local-search algorithm", Evolutionary Computation 18(3),
2010 (TP1/TP2 originally from Deb & Sinha 2009). Deceptive variants flip the
sign of the UL coupling term so that LL-suboptimal points look better at UL.
Each problem also knows its analytic LL Pareto set and the decision vectors of
its UL Pareto set, which the true-front sampler uses.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .moea import dss_select, nondominated_mask

log = logging.getLogger(__name__)

PF_CACHE_VERSION = 1


def _violation(*g: np.ndarray) -> np.ndarray:
    """Sum of positive parts of ``g <= 0`` constraints."""
    total = np.zeros_like(np.asarray(g[0], dtype=float))
    for gi in g:
        total = total + np.maximum(np.asarray(gi, dtype=float), 0.0)
    return total


class BilevelProblem:
    """Base class; subclasses implement ``_ul`` and ``_ll`` on 2-D arrays."""

    name = "base"
    n_obj = 2

    def __init__(self, n_ul, n_ll, ul_bounds, ll_bounds, variant="default"):
        self.n_ul = int(n_ul)
        self.n_ll = int(n_ll)
        self.ul_lower, self.ul_upper = (np.asarray(b, dtype=float) for b in ul_bounds)
        self.ll_lower, self.ll_upper = (np.asarray(b, dtype=float) for b in ll_bounds)
        self.variant = variant

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name}, set={self.variant}, D_u={self.n_ul}, D_l={self.n_ll})"

    @property
    def key(self) -> str:
        return f"{self.name}_{self.variant}"

    def _prep(self, xu, xl):
        xl = np.atleast_2d(np.asarray(xl, dtype=float))
        xu = np.asarray(xu, dtype=float)
        xu = np.broadcast_to(xu, (len(xl), self.n_ul)) if xu.ndim == 1 else np.atleast_2d(xu)
        if xu.shape[0] != xl.shape[0]:
            raise ValueError(f"row mismatch: {xu.shape} vs {xl.shape}")
        return xu, xl

    def evaluate_ul(self, xu, xl):
        """UL objectives ``(n, 2)`` and UL constraint violation ``(n,)``."""
        return self._ul(*self._prep(xu, xl))

    def evaluate_ll(self, xu, xl):
        """LL objectives ``(n, 2)`` and LL constraint violation ``(n,)``."""
        return self._ll(*self._prep(xu, xl))

    def _ul(self, xu, xl):
        raise NotImplementedError

    def _ll(self, xu, xl):
        raise NotImplementedError

    # analytic optimal sets -------------------------------------------------

    @property
    def has_ll_ps(self) -> bool:
        return type(self).ll_pareto_set is not BilevelProblem.ll_pareto_set

    @property
    def has_ul_pf(self) -> bool:
        return type(self)._pf_decisions is not BilevelProblem._pf_decisions

    def ll_pareto_set(self, xu: np.ndarray, n: int) -> np.ndarray:
        """``n`` points of the LL Pareto set for one UL vector ``xu``."""
        raise NotImplementedError(f"{self.name} has no analytic LL Pareto set")

    def ll_pareto_front(self, xu: np.ndarray, n: int) -> np.ndarray:
        xs = self.ll_pareto_set(xu, n)
        f, _ = self.evaluate_ll(xu, xs)
        return f

    def _pf_decisions(self, density: int):
        """Dense (xu, xl) samples that contain the UL Pareto set."""
        raise NotImplementedError(f"{self.name} has no UL Pareto front sampler")

    def pareto_front_solutions(self, n: int, density: int | None = None):
        """About-uniform samples of the UL Pareto front with their decisions.

        Dense samples of the analytic optimal set are evaluated, filtered to
        the non-dominated, UL-feasible ones and thinned to ``n`` points by
        distance-based subset selection.

        Returns:
            Tuple ``(F, xu, xl)``.
        """
        density = density or max(20 * n, 20000)
        xu, xl = self._pf_decisions(density)
        F, G = self.evaluate_ul(xu, xl)
        ok = G <= 1e-12
        F, xu, xl = F[ok], xu[ok], xl[ok]
        nd = nondominated_mask(F)
        F, xu, xl = F[nd], xu[nd], xl[nd]
        if len(F) > n:
            pick = dss_select(F, n)
            F, xu, xl = F[pick], xu[pick], xl[pick]
        order = np.lexsort((F[:, 1], F[:, 0]))
        return F[order], xu[order], xl[order]

    def ul_pareto_front(self, n: int) -> np.ndarray:
        """``n`` approximately uniform points on the UL Pareto front."""
        return self.pareto_front_solutions(n)[0]


# ---------------------------------------------------------------------------
# TP1, TP2


class TP1(BilevelProblem):
    name = "TP1"

    def __init__(self, variant="default"):
        super().__init__(1, 2, ([0.0], [1.0]), ([-1.0, -1.0], [1.0, 1.0]), variant)

    def _ul(self, xu, xl):
        x, y1, y2 = xu[:, 0], xl[:, 0], xl[:, 1]
        F = np.column_stack([y1 - x, y2])
        return F, _violation(-(1.0 + y1 + y2))

    def _ll(self, xu, xl):
        x, y1, y2 = xu[:, 0], xl[:, 0], xl[:, 1]
        return xl[:, :2].copy(), _violation(y1**2 + y2**2 - x**2)

    def ll_pareto_set(self, xu, n):
        x = float(np.ravel(xu)[0])
        th = np.linspace(np.pi, 1.5 * np.pi, n)
        return np.column_stack([x * np.cos(th), x * np.sin(th)])

    def _pf_decisions(self, density):
        # circle of radius x meets the UL constraint boundary y1 + y2 = -1
        x = np.linspace(1 / np.sqrt(2), 1.0, density // 2)
        root = np.sqrt(np.maximum(2 * x**2 - 1, 0.0)) / 2
        y2 = np.concatenate([-0.5 + root, -0.5 - root])
        x = np.concatenate([x, x])
        y1 = -1.0 - y2
        return x[:, None], np.column_stack([y1, y2])


class TP2(BilevelProblem):
    name = "TP2"

    def __init__(self, n_ll=14, variant="default"):
        super().__init__(1, n_ll, ([-1.0], [2.0]), (np.full(n_ll, -1.0), np.full(n_ll, 2.0)), variant)

    def _ul(self, xu, xl):
        x = xu[:, 0]
        base = (xl[:, 0] - 1) ** 2 + (xl[:, 1:] ** 2).sum(axis=1)
        F = np.column_stack([base + x**2, base + (x - 1) ** 2])
        return F, np.zeros(len(x))

    def _ll(self, xu, xl):
        x = xu[:, 0]
        rest = (xl[:, 1:] ** 2).sum(axis=1)
        f = np.column_stack([xl[:, 0] ** 2 + rest, (xl[:, 0] - x) ** 2 + rest])
        return f, np.zeros(len(x))

    def ll_pareto_set(self, xu, n):
        x = float(np.ravel(xu)[0])
        xs = np.zeros((n, self.n_ll))
        xs[:, 0] = np.linspace(min(0.0, x), max(0.0, x), n)
        return xs

    def _pf_decisions(self, density):
        x = np.linspace(0.5, 1.0, density)
        xl = np.zeros((density, self.n_ll))
        xl[:, 0] = x
        return x[:, None], xl


# ---------------------------------------------------------------------------
# DS1 - DS3 (and their deceptive twins, tau = -1)


class DS1(BilevelProblem):
    name = "DS1"
    r, alpha, gamma = 0.1, 1.0, 1.0

    def __init__(self, K=10, tau=1.0, variant="default"):
        self.K, self.tau = K, tau
        ul_lo = np.full(K, -float(K))
        ul_hi = np.full(K, float(K))
        ul_lo[0], ul_hi[0] = 1.0, 4.0
        super().__init__(K, K, (ul_lo, ul_hi), (np.full(K, -float(K)), np.full(K, float(K))), variant)

    def _ul(self, xu, xl):
        K, r = self.K, self.r
        j = np.arange(2, K + 1)
        common = ((xu[:, 1:] - (j - 1) / 2) ** 2).sum(axis=1) + self.tau * ((xl[:, 1:] - xu[:, 1:]) ** 2).sum(axis=1)
        ang = self.gamma * np.pi * xl[:, 0] / (2 * xu[:, 0])
        F1 = 1 + r - np.cos(self.alpha * np.pi * xu[:, 0]) + common - r * np.cos(ang)
        F2 = 1 + r - np.sin(self.alpha * np.pi * xu[:, 0]) + common - r * np.sin(ang)
        return np.column_stack([F1, F2]), np.zeros(len(xu))

    def _ll(self, xu, xl):
        K = self.K
        d = xl[:, 1:] - xu[:, 1:]
        f1 = xl[:, 0] ** 2 + (d**2).sum(axis=1) + (10 * (1 - np.cos(np.pi / K * d))).sum(axis=1)
        f2 = ((xl - xu) ** 2).sum(axis=1) + (10 * np.abs(np.sin(np.pi / K * d))).sum(axis=1)
        return np.column_stack([f1, f2]), np.zeros(len(xu))

    def ll_pareto_set(self, xu, n):
        xu = np.ravel(xu)
        xs = np.tile(xu, (n, 1))
        xs[:, 0] = np.linspace(0.0, xu[0], n)
        return xs

    def _pf_decisions(self, density):
        K = self.K
        a = np.linspace(0.0, np.pi / 2, density)
        xu = np.tile((np.arange(1, K + 1) - 1) / 2.0, (density, 1))
        xu[:, 0] = 2.0 + a / np.pi
        xl = xu.copy()
        xl[:, 0] = 2 * xu[:, 0] * a / (self.gamma * np.pi)
        return xu, xl


class DS2(BilevelProblem):
    name = "DS2"
    r, gamma = 0.25, 4.0
    # x1 values where the UL rotation bump vanishes (0.001 is the lower bound)
    pf_x1 = (0.001, 0.2, 0.4, 0.6, 0.8, 1.0)

    def __init__(self, K=10, tau=1.0, variant="default"):
        self.K, self.tau = K, tau
        ul_lo = np.full(K, -float(K))
        ul_lo[0] = 0.001
        super().__init__(K, K, (ul_lo, np.full(K, float(K))), (np.full(K, -float(K)), np.full(K, float(K))), variant)

    @staticmethod
    def v(x1):
        s, c = np.sin(0.2 * np.pi), np.cos(0.2 * np.pi)
        bump = np.sqrt(np.abs(0.02 * np.sin(5 * np.pi * x1)))
        v1 = np.where(x1 <= 1, c * x1 + s * bump, x1 - (1 - c))
        v2 = np.where(x1 <= 1, -s * x1 + c * bump, 0.1 * (x1 - 1) - s)
        return v1, v2

    def _ul(self, xu, xl):
        K, r = self.K, self.r
        v1, v2 = self.v(xu[:, 0])
        xj = xu[:, 1:]
        common = (xj**2 + 10 * (1 - np.cos(np.pi * xj / K))).sum(axis=1) + self.tau * ((xl[:, 1:] - xj) ** 2).sum(axis=1)
        ang = self.gamma * np.pi * xl[:, 0] / (2 * xu[:, 0])
        F = np.column_stack([v1 + common - r * np.cos(ang), v2 + common - r * np.sin(ang)])
        return F, np.zeros(len(xu))

    def _ll(self, xu, xl):
        i = np.arange(1, self.K + 1)
        f1 = xl[:, 0] ** 2 + ((xl[:, 1:] - xu[:, 1:]) ** 2).sum(axis=1)
        f2 = (i * (xl - xu) ** 2).sum(axis=1)
        return np.column_stack([f1, f2]), np.zeros(len(xu))

    ll_pareto_set = DS1.ll_pareto_set

    def _pf_decisions(self, density):
        per = max(density // len(self.pf_x1), 2)
        th = np.linspace(0.0, np.pi / 2, per)
        rows = []
        for x1 in self.pf_x1:
            xu = np.zeros((per, self.K))
            xu[:, 0] = x1
            xl = np.zeros((per, self.K))
            xl[:, 0] = 2 * x1 * th / (self.gamma * np.pi)
            rows.append((xu, xl))
        return np.vstack([a for a, _ in rows]), np.vstack([b for _, b in rows])

    def pf_centres(self):
        """Circle centres of the UL front arcs (radius ``r``)."""
        x1 = np.asarray(self.pf_x1)
        return np.column_stack(self.v(x1))


class DS3(BilevelProblem):
    name = "DS3"
    r = 0.2

    def __init__(self, K=10, tau=1.0, variant="default"):
        self.K, self.tau = K, tau
        super().__init__(K, K, (np.zeros(K), np.full(K, float(K))), (np.full(K, -float(K)), np.full(K, float(K))), variant)

    @staticmethod
    def R(x1):
        return 0.1 + 0.15 * np.abs(np.sin(2 * np.pi * (x1 - 0.1)))

    def _ul(self, xu, xl):
        K = self.K
        j = np.arange(3, K + 1)
        common = ((xu[:, 2:] - j / 2) ** 2).sum(axis=1) + self.tau * ((xl[:, 2:] - xu[:, 2:]) ** 2).sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = (xu[:, 1] - xl[:, 1]) / (xu[:, 0] - xl[:, 0])
        ang = 4 * np.nan_to_num(np.arctan(ratio), nan=0.0)
        R = self.R(xu[:, 0])
        F = np.column_stack([xu[:, 0] + common - R * np.cos(ang), xu[:, 1] + common - R * np.sin(ang)])
        return F, _violation((1 - xu[:, 0] ** 2) - xu[:, 1])

    def _ll(self, xu, xl):
        common = ((xl[:, 2:] - xu[:, 2:]) ** 2).sum(axis=1)
        f = np.column_stack([xl[:, 0] + common, xl[:, 1] + common])
        g = (xl[:, 0] - xu[:, 0]) ** 2 + (xl[:, 1] - xu[:, 1]) ** 2 - self.r**2
        return f, _violation(g)

    def ll_pareto_set(self, xu, n):
        xu = np.ravel(xu)
        ph = np.linspace(0.0, np.pi / 2, n)
        xs = np.tile(xu, (n, 1))
        xs[:, 0] = xu[0] - self.r * np.cos(ph)
        xs[:, 1] = xu[1] - self.r * np.sin(ph)
        return xs

    def _pf_decisions(self, density):
        # the front sits on a thin band of each small circle; sample x1 densely
        n_x = max(4 * density, 100)
        n_p = 16
        x1, ph = np.meshgrid(np.linspace(0.0, 2.0, n_x), np.linspace(0.0, np.pi / 2, n_p))
        x1, ph = x1.ravel(), ph.ravel()
        m = len(x1)
        xu = np.tile(np.arange(1, self.K + 1) / 2.0, (m, 1))
        xu[:, 0] = x1
        xu[:, 1] = np.maximum(1 - x1**2, 0.0)
        xl = xu.copy()
        xl[:, 0] = x1 - self.r * np.cos(ph)
        xl[:, 1] = xu[:, 1] - self.r * np.sin(ph)
        return xu, xl


# ---------------------------------------------------------------------------
# DS4, DS5: LL variables y2..yK enter the UL only (variable association
# ambiguity); y_{K+1}..y_{K+L} are shared.


class DS4(BilevelProblem):
    name = "DS4"

    def __init__(self, K=5, L=4, deceptive=False, variant="default"):
        self.K, self.L, self.deceptive = K, L, deceptive
        n = K + L
        lo = np.full(n, -float(n))
        hi = np.full(n, float(n))
        lo[0], hi[0] = 0.0, 1.0
        super().__init__(1, n, ([1.0], [2.0]), (lo, hi), variant)

    def _ul_factor(self, xl):
        fac = 1 + (xl[:, 1 : self.K] ** 2).sum(axis=1)
        if self.deceptive:
            fac = fac - (xl[:, self.K :] ** 2).sum(axis=1)
        return fac

    def _constraint(self, x1, y1):
        return 1 - ((1 - y1) * x1 + 0.5 * x1 * y1)

    def _ul(self, xu, xl):
        x1, y1 = xu[:, 0], xl[:, 0]
        fac = self._ul_factor(xl)
        F = np.column_stack([(1 - y1) * fac * x1, y1 * fac * x1])
        return F, _violation(self._constraint(x1, y1))

    def _ll(self, xu, xl):
        x1, y1 = xu[:, 0], xl[:, 0]
        fac = 1 + (xl[:, self.K :] ** 2).sum(axis=1)
        return np.column_stack([(1 - y1) * fac * x1, y1 * fac * x1]), np.zeros(len(x1))

    def ll_pareto_set(self, xu, n):
        xs = np.zeros((n, self.n_ll))
        xs[:, 0] = np.linspace(0.0, 1.0, n)
        return xs

    def _min_x1(self, y1):
        """Smallest UL-feasible x1 for each y1 (nan where none exists)."""
        lo = np.ones_like(y1)
        hi = np.full_like(y1, 2.0)
        ok = self._constraint(hi, y1) <= 0
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            feas = self._constraint(mid, y1) <= 0
            hi = np.where(feas, mid, hi)
            lo = np.where(feas, lo, mid)
        hi = np.where(self._constraint(np.ones_like(y1), y1) <= 0, 1.0, hi)
        return np.where(ok, hi, np.nan)

    def _pf_decisions(self, density):
        y1 = np.linspace(0.0, 1.0, density)
        x1 = self._min_x1(y1)
        ok = np.isfinite(x1)
        xl = np.zeros((ok.sum(), self.n_ll))
        xl[:, 0] = y1[ok]
        return x1[ok, None], xl


class DS5(DS4):
    name = "DS5"

    def _constraint(self, x1, y1):
        g = (1 - y1) * x1 + 0.5 * x1 * y1 - 2 + 0.2 * np.floor(5 * (1 - y1) * x1 + 0.2)
        return -g


class SpecToy1(BilevelProblem):
    """Analytic toy problem with a known segment-shaped LL Pareto set.

    LL: ``f1 = (y1 - x)^2 + y2^2``, ``f2 = y1^2 + (y2 - x)^2`` whose Pareto set
    for a given ``x`` is the segment ``y = (t x, (1 - t) x)``, ``t in [0, 1]``.
    UL: ``F1 = x^2 + y1``, ``F2 = (x - 1)^2 + y2``. No constraints.
    """

    name = "SPEC-TOY1"

    def __init__(self, variant="default"):
        super().__init__(1, 2, ([0.0], [1.0]), ([0.0, 0.0], [1.0, 1.0]), variant)

    def _ul(self, xu, xl):
        x = xu[:, 0]
        return np.column_stack([x**2 + xl[:, 0], (x - 1) ** 2 + xl[:, 1]]), np.zeros(len(x))

    def _ll(self, xu, xl):
        x, y1, y2 = xu[:, 0], xl[:, 0], xl[:, 1]
        f = np.column_stack([(y1 - x) ** 2 + y2**2, y1**2 + (y2 - x) ** 2])
        return f, np.zeros(len(x))

    def ll_pareto_set(self, xu, n):
        x = float(np.ravel(xu)[0])
        t = np.linspace(0.0, 1.0, n)
        return np.column_stack([t * x, (1 - t) * x])

    def _pf_decisions(self, density):
        side = max(int(np.sqrt(density)), 200)
        x, t = np.meshgrid(np.linspace(0, 1, side), np.linspace(0, 1, side))
        x, t = x.ravel(), t.ravel()
        return x[:, None], np.column_stack([t * x, (1 - t) * x])


def spec_toy1() -> SpecToy1:
    return SpecToy1()


# ---------------------------------------------------------------------------
# configuration registry


@dataclass(frozen=True)
class ProblemConfig:
    problem: str
    variable_set: str = "default"


# (D_u, D_l) per problem and variable set
_SIZES = {
    "TP1": {"default": (1, 2), "S1": (1, 2)},
    "TP2": {"default": (1, 14), "S1": (1, 2), "S2": (1, 4), "S3": (1, 10)},
    "DS1": {"default": (10, 10), "S1": (2, 2), "S2": (4, 4), "S3": (10, 10)},
    "DS2": {"default": (10, 10), "S1": (2, 2), "S2": (4, 4), "S3": (10, 10)},
    "DS3": {"default": (10, 10), "S1": (3, 3), "S2": (4, 4), "S3": (10, 10)},
    "DS4": {"default": (1, 9), "S1": (1, 3), "S2": (1, 5), "S3": (1, 9)},
    "DS5": {"default": (1, 9), "S1": (1, 3), "S2": (1, 5), "S3": (1, 9)},
    "SPEC-TOY1": {"default": (1, 2)},
}
for _base in ("DS1", "DS2", "DS3", "DS4", "DS5"):
    _SIZES[_base + "D"] = _SIZES[_base]

# DS4/DS5 split of D_l = K + L
_KL = {3: (2, 1), 5: (3, 2), 9: (5, 4)}

PROBLEM_IDS = tuple(_SIZES)


def problem_sizes(problem: str, variable_set: str = "default") -> tuple[int, int]:
    try:
        return _SIZES[problem][variable_set]
    except KeyError:
        raise ValueError(f"unsupported problem/set pair ({problem!r}, {variable_set!r})") from None


def make_problem(config: ProblemConfig | str, variable_set: str | None = None) -> BilevelProblem:
    """Build a benchmark instance.

    Accepts a :class:`ProblemConfig` or a problem id plus an optional variable
    set (``"default"``, ``"S1"``, ``"S2"``, ``"S3"``).

    Raises:
        ValueError: For an unknown id or a (problem, set) pair outside the
            supported table.
    """
    if isinstance(config, str):
        config = ProblemConfig(config, variable_set or "default")
    pid, vs = config.problem.upper(), config.variable_set
    if pid == "SPEC-TOY1":
        problem_sizes(pid, vs)
        return SpecToy1(variant=vs)
    n_ul, n_ll = problem_sizes(pid, vs)
    deceptive = pid.endswith("D")
    base = pid[:-1] if deceptive else pid
    if base == "TP1":
        return TP1(variant=vs)
    if base == "TP2":
        return TP2(n_ll=n_ll, variant=vs)
    tau = -1.0 if deceptive else 1.0
    if base in ("DS1", "DS2", "DS3"):
        cls = {"DS1": DS1, "DS2": DS2, "DS3": DS3}[base]
        prob = cls(K=n_ul, tau=tau, variant=vs)
    else:
        K, L = _KL[n_ll]
        prob = (DS4 if base == "DS4" else DS5)(K=K, L=L, deceptive=deceptive, variant=vs)
    prob.name = pid
    return prob


# ---------------------------------------------------------------------------
# true-front reference sets


def _cache_path(cache_dir: Path, problem: BilevelProblem, n: int) -> Path:
    return Path(cache_dir) / f"pf_{problem.key}_{n}.csv"


def read_pf_csv(path: Path | str) -> np.ndarray:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    if not rows or rows[0] != ["F1", "F2"]:
        raise ValueError(f"{path}: expected an F1,F2 header")
    return np.array([[float(a), float(b)] for a, b in rows[1:]])


def write_pf_csv(path: Path | str, problem: BilevelProblem, F: np.ndarray) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(f"# problem={problem.name} set={problem.variant} n={len(F)} version={PF_CACHE_VERSION}\n")
        w = csv.writer(fh)
        w.writerow(["F1", "F2"])
        w.writerows([[repr(float(a)), repr(float(b))] for a, b in F])


def generate_true_pf(problem: BilevelProblem, n: int = 1025, cache_dir: Path | str | None = None) -> np.ndarray:
    """Reference set of ``n`` points on the true UL front.

    ``2n`` about-uniform front samples are drawn and reduced to ``n`` by DSS.
    With ``cache_dir`` the result is read from / written to a CSV cache keyed
    by problem, variable set and ``n``.

    Raises:
        ValueError: If the problem has no front sampler.
    """
    if not problem.has_ul_pf:
        raise ValueError(f"{problem.name} has no UL Pareto front sampler")
    if cache_dir is not None:
        path = _cache_path(Path(cache_dir), problem, n)
        if path.exists():
            with open(path) as fh:
                head = fh.readline()
            if f"version={PF_CACHE_VERSION}" in head:
                return read_pf_csv(path)
    F = problem.ul_pareto_front(2 * n)
    if len(F) > n:
        F = F[dss_select(F, n)]
    F = F[np.lexsort((F[:, 1], F[:, 0]))]
    if cache_dir is not None:
        write_pf_csv(path, problem, F)
        log.info("cached %d-point front of %s at %s", len(F), problem.key, path)
    return F
