"""Multi-objective EA primitives shared by both levels of the bilevel search.

Populations are kept as parallel arrays: decision vectors ``X`` of shape
``(n, d)``, objective vectors ``F`` of shape ``(n, 2)`` and an aggregate
constraint violation ``cv`` of shape ``(n,)`` (0 means feasible). Row ``i`` of
the three arrays is one solution.

Ranking follows the feasibility-first rule: feasible members are sorted into
non-dominated fronts, infeasible members follow ordered by ascending ``cv``.
Survivor selection uses distance-based subset selection (greedy maximin) on
the first front when it holds more unique solutions than there are slots.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Population",
    "RankedPopulation",
    "de_variation",
    "polynomial_mutation",
    "dominance_matrix",
    "nondominated_fronts",
    "nondominated_mask",
    "crowding_distance",
    "rank_population",
    "unique_mask",
    "row_key",
    "dss_select",
    "environmental_selection",
]


@dataclass
class Population:
    """Evaluated solutions as parallel arrays."""

    X: np.ndarray
    F: np.ndarray
    cv: np.ndarray

    def __len__(self) -> int:
        return len(self.X)

    def take(self, idx) -> "Population":
        idx = np.asarray(idx, dtype=int)
        return Population(self.X[idx], self.F[idx], self.cv[idx])

    @staticmethod
    def concat(*pops: "Population") -> "Population":
        pops = [p for p in pops if len(p)]
        return Population(
            np.vstack([p.X for p in pops]),
            np.vstack([p.F for p in pops]),
            np.concatenate([p.cv for p in pops]),
        )


@dataclass
class RankedPopulation:
    """Ranking of a population.

    Attributes:
        front: Front index per member (0 is the best front).
        crowding: Crowding distance per member, ``inf`` at front boundaries.
        order: Member indices sorted by front, then by descending crowding.
    """

    front: np.ndarray
    crowding: np.ndarray
    order: np.ndarray


def de_variation(
    X: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    rng: np.random.Generator,
    f_scale: float = 0.5,
    cr: float = 1.0,
) -> np.ndarray:
    """DE/rand/1/bin: one child per target vector.

    For each target ``i`` three distinct indices ``r1, r2, r3`` (all different
    from ``i``) are drawn and the mutant ``x_r1 + f_scale * (x_r2 - x_r3)`` is
    crossed with the target. Components outside the box are clamped.

    Raises:
        ValueError: If fewer than four vectors are given.
    """
    X = np.asarray(X, dtype=float)
    n, d = X.shape
    if n < 4:
        raise ValueError(f"DE needs a population of at least 4, got {n}")
    keys = rng.random((n, n))
    np.fill_diagonal(keys, np.inf)
    r = np.argsort(keys, axis=1)[:, :3]
    mutant = X[r[:, 0]] + f_scale * (X[r[:, 1]] - X[r[:, 2]])
    cross = rng.random((n, d)) < cr
    cross[np.arange(n), rng.integers(d, size=n)] = True
    child = np.where(cross, mutant, X)
    return np.clip(child, lower, upper)


def _pm_step(x, lower, upper, u, eta):
    """Bounded polynomial mutation applied with pre-drawn uniforms ``u``."""
    span = upper - lower
    with np.errstate(divide="ignore", invalid="ignore"):
        d1 = np.where(span > 0, (x - lower) / span, 0.0)
        d2 = np.where(span > 0, (upper - x) / span, 0.0)
    power = 1.0 / (eta + 1.0)
    low = u <= 0.5
    xy = np.where(low, 1.0 - d1, 1.0 - d2)
    val = np.where(
        low,
        2.0 * u + (1.0 - 2.0 * u) * xy ** (eta + 1.0),
        2.0 * (1.0 - u) + 2.0 * (u - 0.5) * xy ** (eta + 1.0),
    )
    dq = np.where(low, val**power - 1.0, 1.0 - val**power)
    return np.clip(x + dq * span, lower, upper)


def polynomial_mutation(
    X: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    rng: np.random.Generator,
    pm: float | None = None,
    eta: float = 20.0,
) -> np.ndarray:
    """Deb's bounded polynomial mutation, each component mutated with prob ``pm``.

    ``pm`` defaults to ``1 / d``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n, d = X.shape
    if pm is None:
        pm = 1.0 / d
    lower = np.broadcast_to(lower, X.shape)
    upper = np.broadcast_to(upper, X.shape)
    hit = rng.random((n, d)) < pm
    u = rng.random((n, d))
    out = X.copy()
    if hit.any():
        out[hit] = _pm_step(X[hit], lower[hit], upper[hit], u[hit], eta)
    return out


def dominance_matrix(F: np.ndarray) -> np.ndarray:
    """``D[i, j]`` is True when ``F[i]`` Pareto-dominates ``F[j]`` (minimization)."""
    le = (F[:, None, :] <= F[None, :, :]).all(axis=2)
    lt = (F[:, None, :] < F[None, :, :]).any(axis=2)
    return le & lt


def nondominated_fronts(F: np.ndarray) -> np.ndarray:
    """Fast non-dominated sorting; returns the front index of every row."""
    n = len(F)
    front = np.full(n, -1, dtype=int)
    if n == 0:
        return front
    D = dominance_matrix(F)
    count = D.sum(axis=0)
    current = np.flatnonzero(count == 0)
    k = 0
    while current.size:
        front[current] = k
        count = count - D[current].sum(axis=0)
        count[front >= 0] = -1
        current = np.flatnonzero(count == 0)
        k += 1
    return front


def nondominated_mask(F: np.ndarray) -> np.ndarray:
    """Mask of rows not dominated by any other row (2 objectives, O(n log n))."""
    F = np.asarray(F, dtype=float)
    n = len(F)
    mask = np.zeros(n, dtype=bool)
    if n == 0:
        return mask
    order = np.lexsort((F[:, 1], F[:, 0]))
    f1, f2 = F[order, 0], F[order, 1]
    # start index of each run of equal F1 values
    new_block = np.r_[True, f1[1:] != f1[:-1]]
    start = np.maximum.accumulate(np.where(new_block, np.arange(n), 0))
    prefix = np.minimum.accumulate(f2)
    before = np.where(start > 0, prefix[np.maximum(start - 1, 0)], np.inf)
    keep = (f2 == f2[start]) & (f2 < before)
    mask[order[keep]] = True
    return mask


def crowding_distance(F: np.ndarray) -> np.ndarray:
    """NSGA-II crowding distance of one front; boundary members get ``inf``."""
    n, m = F.shape
    dist = np.zeros(n)
    if n <= 2:
        dist[:] = np.inf
        return dist
    for k in range(m):
        order = np.argsort(F[:, k], kind="stable")
        vals = F[order, k]
        dist[order[0]] = dist[order[-1]] = np.inf
        span = vals[-1] - vals[0]
        if not np.isfinite(span) or span <= 0:
            continue
        with np.errstate(invalid="ignore"):
            gaps = (vals[2:] - vals[:-2]) / span
        dist[order[1:-1]] += np.nan_to_num(gaps, nan=0.0)
    return dist


def _crowding_by_front(F: np.ndarray, front: np.ndarray) -> np.ndarray:
    """Crowding distance of every member within its own front, all fronts at once.

    Gives the same values as :func:`crowding_distance` applied front by front.
    """
    n, m = F.shape
    dist = np.zeros(n)
    if n == 0:
        return dist
    boundary = np.zeros(n, dtype=bool)
    for k in range(m):
        o = np.lexsort((F[:, k], front))
        fr, v = front[o], F[o, k]
        change = fr[1:] != fr[:-1]
        first = np.r_[True, change]
        last = np.r_[change, True]
        starts, ends = np.flatnonzero(first), np.flatnonzero(last)
        with np.errstate(invalid="ignore"):
            span = np.repeat(v[ends] - v[starts], ends - starts + 1)
            inner = ~(first | last)
            pos = np.flatnonzero(inner)
            gap = (v[pos + 1] - v[pos - 1]) / span[pos]
        ok = np.isfinite(span[pos]) & (span[pos] > 0)
        gap = np.where(ok & np.isfinite(gap), gap, 0.0)
        dist[o[pos]] += gap
        boundary[o[first | last]] = True
    dist[boundary] = np.inf
    return dist


def rank_population(F: np.ndarray, cv: np.ndarray) -> RankedPopulation:
    """Feasibility-first non-dominated ranking with crowding distance."""
    F = np.asarray(F, dtype=float)
    cv = np.asarray(cv, dtype=float)
    n = len(F)
    front = np.zeros(n, dtype=int)
    feas = np.flatnonzero(cv <= 0)
    infeas = np.flatnonzero(cv > 0)
    n_fronts = 0
    if feas.size:
        front[feas] = nondominated_fronts(F[feas])
        n_fronts = front[feas].max() + 1
    if infeas.size:
        _, level = np.unique(cv[infeas], return_inverse=True)
        front[infeas] = n_fronts + level.ravel()
    crowd = _crowding_by_front(F, front)
    order = np.lexsort((np.arange(n), -crowd, front))
    return RankedPopulation(front, crowd, order)


def row_key(x: np.ndarray) -> bytes:
    """Hash key of a decision vector at 1e-12 resolution."""
    return (np.round(np.asarray(x, dtype=float), 12) + 0.0).tobytes()


def unique_mask(X: np.ndarray, order: np.ndarray | None = None) -> np.ndarray:
    """Mask keeping the first occurrence of each decision vector.

    With ``order`` given, "first" means first in that order.
    """
    n = len(X)
    keep = np.zeros(n, dtype=bool)
    if n == 0:
        return keep
    if order is None:
        order = np.arange(n)
    order = np.asarray(order)
    R = np.round(np.asarray(X, dtype=float)[order], 12) + 0.0
    _, first = np.unique(R, axis=0, return_index=True)
    keep[order[first]] = True
    return keep


def dss_select(
    F: np.ndarray,
    n: int,
    X: np.ndarray | None = None,
    space: str = "objective",
) -> np.ndarray:
    """Greedy maximin distance-based subset selection.

    The first pick is the member with the smallest first objective (ties broken
    lexicographically on the objective vector). Each further pick maximizes the
    minimum distance to the members already picked. Coordinates are normalized
    by the set's own per-coordinate range; a constant coordinate contributes
    nothing.

    Args:
        F: Objective vectors of the candidate set.
        n: Number of members to pick.
        X: Decision vectors, required when ``space == "decision"``.
        space: ``"objective"`` or ``"decision"``; the coordinates used for the
            distances.

    Returns:
        Indices into ``F`` in pick order.
    """
    if n <= 0:
        raise ValueError(f"subset size must be positive, got {n}")
    F = np.asarray(F, dtype=float)
    size = len(F)
    if n >= size:
        return np.arange(size)
    if space == "objective":
        P = F
    elif space == "decision":
        if X is None:
            raise ValueError("decision-space DSS needs X")
        P = np.asarray(X, dtype=float)
    else:
        raise ValueError(f"unknown DSS space {space!r}")
    lo, hi = P.min(axis=0), P.max(axis=0)
    span = hi - lo
    scale = np.where(span > 0, span, 1.0)
    Z = np.where(span > 0, (P - lo) / scale, 0.0)

    seed = int(np.lexsort(F.T[::-1])[0])
    picked = [seed]
    if size <= 2000:
        D = np.sqrt(((Z[:, None, :] - Z[None, :, :]) ** 2).sum(axis=2))
        row = D.__getitem__
    else:
        def row(j):
            return np.sqrt(((Z - Z[j]) ** 2).sum(axis=1))
    mind = row(seed).copy()
    mind[seed] = -1.0
    for _ in range(n - 1):
        j = int(np.argmax(mind))
        picked.append(j)
        mind = np.minimum(mind, row(j))
        mind[picked] = -1.0
    return np.asarray(picked)


def environmental_selection(
    X: np.ndarray,
    F: np.ndarray,
    cv: np.ndarray,
    n: int,
    space: str = "objective",
    ranked: RankedPopulation | None = None,
) -> np.ndarray:
    """Pick ``n`` survivors from a combined parent + child population.

    Duplicate decision vectors are dropped first. If the first front holds at
    most ``n`` unique members, the best ``n`` unique members in rank order
    survive; otherwise DSS picks ``n`` members from the first front.

    Returns:
        Indices of the survivors.
    """
    if ranked is None:
        F = np.asarray(F, dtype=float)
        cv = np.asarray(cv, dtype=float)
        feas = np.flatnonzero(cv <= 0)
        if feas.size > n:
            # fast path: a crowded first front is decided by DSS alone
            first = feas[nondominated_mask(F[feas])]
            first = first[unique_mask(X[first])]
            if first.size > n:
                return first[dss_select(F[first], n, X[first], space=space)]
        ranked = rank_population(F, cv)
    keep = unique_mask(X, ranked.order)
    order = ranked.order[keep[ranked.order]]
    first = order[ranked.front[order] == ranked.front[order[0]]] if order.size else order
    if first.size <= n:
        return order[:n]
    pick = dss_select(F[first], n, X[first], space=space)
    return first[pick]
