"""Quality indicators and stagnation-based termination monitors."""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from typing import Hashable, Mapping, Sequence

import numpy as np

from .moea import nondominated_mask

log = logging.getLogger(__name__)

__all__ = [
    "MetricPoint",
    "igd",
    "hv2d",
    "reference_point",
    "ll_igd",
    "normalized_ll_igd",
    "IgdTerminationMonitor",
    "HvTerminationMonitor",
    "make_monitor",
]


@dataclass(frozen=True)
class MetricPoint:
    """One row of the convergence log."""

    generation: int
    ul_fe: int
    ll_fe: int
    igd: float
    hv: float


def _as_set(P, name: str) -> np.ndarray:
    P = np.atleast_2d(np.asarray(P, dtype=float))
    if P.size == 0 or len(P) == 0:
        raise ValueError(f"{name} set is empty")
    return P


def igd(reference, approx, chunk: int = 2048) -> float:
    """Inverted generational distance: mean distance from each reference
    point to its nearest point of ``approx``.

    Raises:
        ValueError: If either set is empty.
    """
    R = _as_set(reference, "reference")
    A = _as_set(approx, "approximation")
    total = 0.0
    for s in range(0, len(R), chunk):
        d2 = ((R[s : s + chunk, None, :] - A[None, :, :]) ** 2).sum(axis=2)
        total += np.sqrt(d2.min(axis=1)).sum()
    return float(total / len(R))


def hv2d(front, ref_point) -> float:
    """Exact 2-D hypervolume (minimization) dominated by ``front`` up to ``ref_point``.

    Points that do not strictly dominate the reference point contribute nothing.
    """
    ref = np.asarray(ref_point, dtype=float)
    P = np.asarray(front, dtype=float).reshape(-1, 2)
    P = P[np.isfinite(P).all(axis=1)]
    P = P[(P < ref).all(axis=1)]
    if len(P) == 0:
        return 0.0
    P = P[nondominated_mask(P)]
    P = P[np.lexsort((P[:, 1], P[:, 0]))]
    widths = np.diff(np.r_[P[:, 0], ref[0]])
    return float((widths * (ref[1] - P[:, 1])).sum())


def reference_point(F, factor: float = 0.1) -> np.ndarray:
    """HV reference point ``max + factor * |max|`` per objective.

    For positive maxima this is ``(1 + factor)`` times the maximum.
    """
    m = np.asarray(F, dtype=float).reshape(-1, 2).max(axis=0)
    return m + factor * np.abs(m)


def _minmax_scale(P, lo, hi):
    span = hi - lo
    safe = np.where(span > 0, span, 1.0)
    return np.where(span > 0, (P - lo) / safe, 0.0)


def ll_igd(true_ll_front, ll_front) -> float:
    """IGD of one LL front in coordinates normalized by the true LL front's range."""
    T = _as_set(true_ll_front, "reference")
    A = _as_set(ll_front, "approximation")
    lo, hi = T.min(axis=0), T.max(axis=0)
    return igd(_minmax_scale(T, lo, hi), _minmax_scale(A, lo, hi))


def normalized_ll_igd(results: Mapping[Hashable, Sequence[float]]) -> dict:
    """Min-max normalized mean LL IGD per search result.

    Args:
        results: Maps a result key (e.g. ``(algorithm, seed)``) to the LL IGD
            of every UL solution in that result.

    Returns:
        Key to value in ``[0, 1]``. A degenerate range maps every result to 0.
    """
    if not results:
        raise ValueError("no results to normalize")
    means = {}
    for key, vals in results.items():
        vals = np.asarray(list(vals), dtype=float)
        if vals.size == 0:
            raise ValueError(f"result {key!r} has no UL solutions")
        means[key] = float(vals.mean())
    lo, hi = min(means.values()), max(means.values())
    if hi == lo:
        return {k: 0.0 for k in means}
    return {k: (v - lo) / (hi - lo) for k, v in means.items()}


class IgdTerminationMonitor:
    """Stops when the ideal point, nadir point and normalized population stagnate.

    At each generation ``t > 1`` three deltas are computed from the
    non-dominated members of the population, all normalized by the
    generation-``t`` range ``z_nad(t) - z*(t)``:

    * the largest per-objective movement of the ideal point,
    * the largest per-objective movement of the nadir point,
    * the IGD between the previous and current normalized fronts, with the
      current front as reference.

    The run stops once each of the three maxima over the last ``omega``
    deltas is at most ``epsilon``. The earliest possible stop is generation
    ``omega + 1``.
    """

    mode = "igd"

    def __init__(self, epsilon: float = 1e-2, omega: int = 5):
        if epsilon <= 0 or omega < 1:
            raise ValueError("need epsilon > 0 and omega >= 1")
        self.epsilon = float(epsilon)
        self.omega = int(omega)
        self.generation = 0
        self._warned = False
        self._prev: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None
        self.deltas: deque[tuple[float, float, float]] = deque(maxlen=self.omega)

    def _delta(self, prev_z, curr_z, span):
        move = np.abs(prev_z - curr_z)
        zero = span <= 0
        if zero.any() and not self._warned:
            self._warned = True
            log.info("degenerate objective range at generation %d; ignoring it", self.generation)
        return float(np.where(zero, 0.0, move / np.where(zero, 1.0, span)).max())

    def update(self, F) -> bool:
        """Record one generation; returns True when the run should stop."""
        F = _as_set(F, "population")
        F = F[np.isfinite(F).all(axis=1)]
        if len(F) == 0:
            raise ValueError("population has no finite objective vectors")
        front = F[nondominated_mask(F)]
        z_star, z_nad = front.min(axis=0), front.max(axis=0)
        self.generation += 1
        prev, self._prev = self._prev, (front, z_star, z_nad)
        if prev is None:
            return False
        p_front, p_star, p_nad = prev
        span = z_nad - z_star
        d_star = self._delta(p_star, z_star, span)
        d_nad = self._delta(p_nad, z_nad, span)
        phi = igd(_minmax_scale(front, z_star, z_nad), _minmax_scale(p_front, z_star, z_nad))
        self.deltas.append((d_star, d_nad, phi))
        return self.should_stop

    @property
    def should_stop(self) -> bool:
        if len(self.deltas) < self.omega:
            return False
        return bool(np.max(np.asarray(self.deltas), axis=0).max() <= self.epsilon)


class HvTerminationMonitor:
    """Stops when the absolute HV change stays within ``threshold`` for
    ``omega`` consecutive generations.

    The reference point is fixed at construction or taken from the first
    front seen. A window in which the current HV is zero never stops the run.
    """

    mode = "hv"

    def __init__(self, threshold: float = 1e-3, omega: int = 10, ref_point=None):
        if threshold < 0 or omega < 1:
            raise ValueError("need threshold >= 0 and omega >= 1")
        self.threshold = float(threshold)
        self.omega = int(omega)
        self.ref_point = None if ref_point is None else np.asarray(ref_point, dtype=float)
        self.generation = 0
        self.history: deque[float] = deque(maxlen=self.omega + 1)

    def update(self, F) -> bool:
        F = np.asarray(F, dtype=float).reshape(-1, 2)
        if self.ref_point is None:
            finite = F[np.isfinite(F).all(axis=1)]
            if len(finite) == 0:
                raise ValueError("cannot derive a reference point from a non-finite population")
            self.ref_point = reference_point(finite)
        self.generation += 1
        self.history.append(hv2d(F, self.ref_point))
        return self.should_stop

    @property
    def last_hv(self) -> float:
        return self.history[-1] if self.history else 0.0

    @property
    def should_stop(self) -> bool:
        if len(self.history) < self.omega + 1 or self.history[-1] <= 0:
            return False
        return bool(np.abs(np.diff(np.asarray(self.history))).max() <= self.threshold)


class NeverStop:
    """Placeholder monitor for fixed-generation runs."""

    mode = "none"

    def __init__(self, *_, **__):
        self.generation = 0

    def update(self, F) -> bool:
        self.generation += 1
        return False


def make_monitor(mode: str, epsilon: float, omega: int, ref_point=None):
    if mode == "igd":
        return IgdTerminationMonitor(epsilon, omega)
    if mode == "hv":
        return HvTerminationMonitor(epsilon, omega, ref_point)
    if mode == "none":
        return NeverStop()
    raise ValueError(f"unknown termination mode {mode!r}")
