import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pspblemo.metrics import (
    HvTerminationMonitor,
    IgdTerminationMonitor,
    hv2d,
    igd,
    ll_igd,
    make_monitor,
    normalized_ll_igd,
    reference_point,
)

points = arrays(np.float64, st.tuples(st.integers(1, 25), st.just(2)), elements=st.floats(0, 1))


def brute_igd(R, A):
    total = 0.0
    for r in R:
        total += min(math.sqrt((r[0] - a[0]) ** 2 + (r[1] - a[1]) ** 2) for a in A)
    return total / len(R)


def monte_carlo_hv(F, ref, n, rng):
    lo = F.min(axis=0)
    S = rng.uniform(lo, ref, (n, 2))
    hit = np.zeros(n, dtype=bool)
    for f in F:
        hit |= (S[:, 0] >= f[0]) & (S[:, 1] >= f[1])
    return hit.mean() * np.prod(ref - lo)


def test_igd_examples():
    R = np.array([[0.0, 0.0], [1.0, 1.0]])
    assert igd(R, R) == 0.0
    assert igd(R, np.vstack([R, [[5.0, 5.0]]])) == 0.0
    assert igd(R, [[0.0, 0.0]]) == pytest.approx((0 + math.sqrt(2)) / 2, abs=1e-12)


def test_igd_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(20):
        R, A = rng.random((50, 2)), rng.random((50, 2))
        assert igd(R, A) == pytest.approx(brute_igd(R, A), rel=1e-12, abs=1e-15)


def test_igd_chunking_consistent():
    rng = np.random.default_rng(1)
    R, A = rng.random((300, 2)), rng.random((40, 2))
    assert igd(R, A, chunk=7) == pytest.approx(igd(R, A), rel=1e-13)


def test_igd_empty_raises():
    with pytest.raises(ValueError):
        igd(np.empty((0, 2)), [[0.0, 0.0]])
    with pytest.raises(ValueError):
        igd([[0.0, 0.0]], np.empty((0, 2)))


@settings(max_examples=60, deadline=None)
@given(points, points)
def test_igd_zero_iff_reference_contained(R, A):
    if igd(R, A) == 0:
        assert all(np.any(np.all(np.abs(A - r) <= 1e-12, axis=1)) for r in R)
    assert igd(R, np.vstack([A, R])) == pytest.approx(0.0, abs=1e-12)


def test_hv_examples():
    assert hv2d([[0.5, 0.5]], [1, 1]) == pytest.approx(0.25)
    assert hv2d([[2.0, 2.0]], [1, 1]) == 0.0
    assert hv2d(np.empty((0, 2)), [1, 1]) == 0.0
    assert hv2d([[0.0, 0.5], [0.5, 0.0]], [1, 1]) == pytest.approx(0.75)


def test_hv_monte_carlo_n100():
    rng = np.random.default_rng(3)
    t = np.sort(rng.random(100))
    F = np.column_stack([t, 1 - t**0.5])
    ref = np.array([1.1, 1.1])
    assert hv2d(F, ref) == pytest.approx(monte_carlo_hv(F, ref, 1_000_000, rng), rel=1e-2)


@settings(max_examples=60, deadline=None)
@given(points, st.integers(0, 2**31))
def test_hv_permutation_and_dominated_invariance(F, seed):
    ref = np.array([1.2, 1.2])
    rng = np.random.default_rng(seed)
    h = hv2d(F, ref)
    assert hv2d(F[rng.permutation(len(F))], ref) == pytest.approx(h, abs=1e-12)
    dominated = F[rng.integers(len(F))] + rng.random(2) * 0.1
    assert hv2d(np.vstack([F, dominated]), ref) == pytest.approx(h, abs=1e-12)


def test_reference_point_rule():
    assert np.allclose(reference_point([[1.0, 2.0], [0.5, 4.0]]), [1.1, 4.4])
    # negative maxima move outward as well
    assert np.allclose(reference_point([[-1.0, -2.0]]), [-0.9, -1.8])


def test_normalized_ll_igd_examples():
    assert normalized_ll_igd({"a": [0.3, 0.7]}) == {"a": 0.0}
    assert normalized_ll_igd({"a": [2.0], "b": [3.0, 5.0]}) == {"a": 0.0, "b": 1.0}
    out = normalized_ll_igd({"x": [1.0], "y": [2.0], "z": [3.0]})
    assert out == {"x": 0.0, "y": 0.5, "z": 1.0}
    assert normalized_ll_igd({"a": [1.0], "b": [1.0]}) == {"a": 0.0, "b": 0.0}
    with pytest.raises(ValueError):
        normalized_ll_igd({})


def test_ll_igd_normalized_by_true_range():
    T = np.array([[0.0, 2.0], [10.0, 0.0]])
    assert ll_igd(T, T) == 0.0
    # normalized reference is {(0, 1), (1, 0)}; the single point sits on the first
    assert ll_igd(T, [[0.0, 2.0]]) == pytest.approx(math.sqrt(2) / 2, abs=1e-12)


# --- termination monitors -----------------------------------------------------


def front(shift=0.0, n=10):
    t = np.linspace(0, 1, n)
    return np.column_stack([t, 1 - t]) + shift


def test_igd_monitor_frozen_stops_at_omega_plus_one():
    for omega in (1, 3, 5, 10):
        m = IgdTerminationMonitor(1e-2, omega)
        stops = [m.update(front()) for _ in range(omega + 5)]
        assert stops.index(True) + 1 == omega + 1


def test_igd_monitor_first_generation_continues():
    assert IgdTerminationMonitor().update(front()) is False


def test_igd_monitor_ideal_moving_hand_value():
    """Ideal moves from (0, 0) to (-0.1, 0) while the nadir stays at (1, 1)."""
    m = IgdTerminationMonitor(1e-2, 1)
    m.update(np.array([[0.0, 1.0], [1.0, 0.0]]))
    m.update(np.array([[-0.1, 1.0], [1.0, 0.0]]))
    d_star, d_nad, _ = m.deltas[-1]
    # the current range of F1 is 1 - (-0.1) = 1.1
    assert d_star == pytest.approx(0.1 / 1.1, abs=1e-12)
    assert d_nad == 0.0
    assert m._delta(np.zeros(2), np.array([-0.1, 0.0]), np.ones(2)) == pytest.approx(0.1, abs=1e-12)


def test_igd_monitor_moving_ideal_never_stops():
    eps = 1e-2
    m = IgdTerminationMonitor(eps, 5)
    for g in range(50):
        # the whole front shifts by 2 eps of its unit range per generation
        assert not m.update(front(-2 * eps * g))


def test_igd_monitor_degenerate_range_logs(caplog):
    m = IgdTerminationMonitor(1e-2, 2)
    with caplog.at_level(logging.INFO):
        for _ in range(3):
            m.update(np.array([[1.0, 1.0]]))
    assert "degenerate" in caplog.text
    assert m.should_stop


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 100), st.floats(-50, 50), st.floats(-50, 50), st.integers(0, 1000))
def test_igd_monitor_affine_invariance(scale, sx, sy, seed):
    rng = np.random.default_rng(seed)
    a, b = IgdTerminationMonitor(5e-2, 3), IgdTerminationMonitor(5e-2, 3)
    base = front()
    for g in range(12):
        P = base + rng.normal(0, 0.02, base.shape) * (g < 6)
        assert a.update(P) == b.update(P * scale + [sx, sy])


def test_hv_monitor_frozen_and_increasing():
    m = HvTerminationMonitor(1e-3, 10, ref_point=[1.1, 1.1])
    stops = [m.update(front()) for _ in range(15)]
    assert stops.index(True) + 1 == 11
    m = HvTerminationMonitor(1e-3, 10, ref_point=[2.0, 2.0])
    # HV of the single point (1, y) is 2 - y, growing by 0.01 per generation
    for g in range(40):
        assert not m.update([[1.0, 1.5 - 0.01 * g]])


def test_hv_monitor_small_deltas_stop():
    m = HvTerminationMonitor(1e-3, 10, ref_point=[1.0, 1.0])
    out = [m.update([[0.5 - 1e-4 * g, 0.5]]) for g in range(11)]
    assert out[-1] and not any(out[:-1])


def test_hv_monitor_zero_hv_window_continues():
    m = HvTerminationMonitor(1e-3, 2, ref_point=[0.0, 0.0])
    assert not any(m.update([[1.0, 1.0]]) for _ in range(10))


def test_make_monitor_modes():
    assert make_monitor("igd", 1e-2, 5).mode == "igd"
    assert make_monitor("hv", 1e-3, 10).mode == "hv"
    assert make_monitor("none", 1, 1).update([[0, 0]]) is False
    with pytest.raises(ValueError):
        make_monitor("r2", 1, 1)
    with pytest.raises(ValueError):
        IgdTerminationMonitor(0.0, 5)
