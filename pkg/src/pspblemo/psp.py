"""Pareto-set prediction: map ``(x_u, r)`` to one LL Pareto-optimal ``x_l``.

An LL Pareto set is a one-to-many image of a single UL vector. Sorting each
set by its first LL objective and attaching a helper scalar ``r`` spaced
uniformly over ``[0, 1]`` turns it into a one-to-one regression problem. A
network with one tanh hidden layer is fitted with Levenberg-Marquardt and then
queried at ``n`` evenly spaced ``r`` values to predict a whole LL set.

Model file format (JSON text, UTF-8)::

    {
      "format": "pspblemo-psp-model",
      "version": 1,
      "layers": [n_in, n_hidden, n_out],      # n_in = D_u + 1
      "activation": ["tanh", "linear"],
      "W1": [[...], ...],   # n_hidden rows of n_in + 1 values, bias last, row-major
      "W2": [[...], ...],   # n_out rows of n_hidden + 1 values, bias last, row-major
      "ul_lower": [...], "ul_upper": [...],   # D_u values each
      "ll_lower": [...], "ll_upper": [...],   # n_out values each (searched LL variables)
      "ll_index": [...]                       # positions of the outputs in the full x_l
    }

Internally the normalized inputs are mapped from ``[0, 1]`` to ``[-1, 1]``
before the first layer; targets stay in ``[0, 1]``. Floats are written with
round-trip precision, so loading reproduces predictions bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = [
    "PspDataset",
    "PspModel",
    "TrainReport",
    "build_dataset",
    "shuffle_helper",
    "train",
    "predict_ps",
    "save_model",
    "load_model",
]

MODEL_FORMAT = "pspblemo-psp-model"
MODEL_VERSION = 1


def _normalize(x, lo, hi):
    span = hi - lo
    return np.where(span > 0, (x - lo) / np.where(span > 0, span, 1.0), 0.0)


@dataclass
class PspDataset:
    """Stacked training rows.

    Attributes:
        inputs: ``(N, D_u + 1)`` rows of normalized ``x_u`` followed by ``r``.
        targets: ``(N, D_ls)`` normalized searched LL variables.
        group_id: ``(N,)`` index of the archive entry each row came from.
        ll_f1: ``(N,)`` first LL objective of each target, for order checks.
    """

    inputs: np.ndarray
    targets: np.ndarray
    group_id: np.ndarray
    ll_f1: np.ndarray

    def __len__(self) -> int:
        return len(self.inputs)


def build_dataset(
    entries: Sequence[tuple[np.ndarray, np.ndarray, np.ndarray]],
    ul_lower: np.ndarray,
    ul_upper: np.ndarray,
    ll_lower: np.ndarray,
    ll_upper: np.ndarray,
    ds_limit: int | None = None,
    ll_index: np.ndarray | None = None,
) -> PspDataset:
    """Turn archived LL Pareto sets into one-to-one regression rows.

    Args:
        entries: Oldest-first sequence of ``(x_u, X_l, f)`` with ``X_l`` the
            ``(m, D_l)`` LL set found for ``x_u`` and ``f`` its ``(m, 2)`` LL
            objectives.
        ul_lower, ul_upper: UL bounds used to normalize ``x_u``.
        ll_lower, ll_upper: Full LL bounds.
        ds_limit: Keep only this many of the most recent rows.
        ll_index: Positions of the LL variables used as targets (default all).

    Returns:
        The dataset; rows of one group are ordered by ascending ``r``.

    Raises:
        ValueError: On an empty archive or an empty LL set.
    """
    if len(entries) == 0:
        raise ValueError("cannot build a dataset from an empty archive")
    ul_lower = np.asarray(ul_lower, dtype=float)
    ul_upper = np.asarray(ul_upper, dtype=float)
    ll_lower = np.asarray(ll_lower, dtype=float)
    ll_upper = np.asarray(ll_upper, dtype=float)
    if ll_index is None:
        ll_index = np.arange(len(ll_lower))
    ll_index = np.asarray(ll_index, dtype=int)
    lo, hi = ll_lower[ll_index], ll_upper[ll_index]

    inputs, targets, groups, f1s = [], [], [], []
    for g, (xu, Xl, f) in enumerate(entries):
        Xl = np.atleast_2d(np.asarray(Xl, dtype=float))
        f = np.atleast_2d(np.asarray(f, dtype=float))
        m = len(Xl)
        if m == 0:
            raise ValueError(f"archive entry {g} has an empty LL set")
        order = np.lexsort((f[:, 1], f[:, 0]))
        r = np.linspace(0.0, 1.0, m) if m > 1 else np.zeros(1)
        zu = _normalize(np.asarray(xu, dtype=float), ul_lower, ul_upper)
        inputs.append(np.column_stack([np.tile(zu, (m, 1)), r]))
        targets.append(_normalize(Xl[order][:, ll_index], lo, hi))
        groups.append(np.full(m, g))
        f1s.append(f[order, 0])

    X = np.vstack(inputs)
    Y = np.vstack(targets)
    G = np.concatenate(groups)
    F1 = np.concatenate(f1s)

    # a repeated input keeps only its newest row
    _, first_rev = np.unique(X[::-1], axis=0, return_index=True)
    keep = np.sort(len(X) - 1 - first_rev)
    X, Y, G, F1 = X[keep], Y[keep], G[keep], F1[keep]
    if ds_limit is not None and len(X) > ds_limit:
        X, Y, G, F1 = X[-ds_limit:], Y[-ds_limit:], G[-ds_limit:], F1[-ds_limit:]
    return PspDataset(X, Y, G, F1)


def shuffle_helper(data: PspDataset, rng: np.random.Generator) -> PspDataset:
    """Copy of ``data`` with the ``r`` column permuted inside every group."""
    X = data.inputs.copy()
    for g in np.unique(data.group_id):
        rows = np.flatnonzero(data.group_id == g)
        X[rows, -1] = X[rng.permutation(rows), -1]
    return PspDataset(X, data.targets.copy(), data.group_id.copy(), data.ll_f1.copy())


@dataclass
class PspModel:
    """One-hidden-layer network plus the bounds it was trained with."""

    W1: np.ndarray
    W2: np.ndarray
    ul_lower: np.ndarray
    ul_upper: np.ndarray
    ll_lower: np.ndarray
    ll_upper: np.ndarray
    ll_index: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.ll_index is None:
            self.ll_index = np.arange(self.W2.shape[0])

    @property
    def n_in(self) -> int:
        return self.W1.shape[1] - 1

    @property
    def n_hidden(self) -> int:
        return self.W1.shape[0]

    @property
    def n_out(self) -> int:
        return self.W2.shape[0]

    @classmethod
    def zeros(cls, n_ul: int, ll_lower, ll_upper, ul_lower, ul_upper, ll_index=None) -> "PspModel":
        n_out = len(ll_lower) if ll_index is None else len(ll_index)
        lo = np.asarray(ll_lower, dtype=float)
        hi = np.asarray(ll_upper, dtype=float)
        if ll_index is not None:
            lo, hi = lo[ll_index], hi[ll_index]
        h = hidden_width(n_ul + 1, n_out)
        return cls(np.zeros((h, n_ul + 2)), np.zeros((n_out, h + 1)),
                   np.asarray(ul_lower, float), np.asarray(ul_upper, float), lo, hi,
                   None if ll_index is None else np.asarray(ll_index))

    def forward(self, Z: np.ndarray) -> np.ndarray:
        """Network output for rows of normalized ``(x_u, r)`` in ``[0, 1]``."""
        return _forward(self.W1, self.W2, Z)[0]


def hidden_width(n_in: int, n_out: int) -> int:
    return 2 * max(n_in, n_out)


@dataclass(frozen=True)
class TrainReport:
    epochs_run: int
    train_mse: float
    val_mse: float
    test_mse: float
    stopped_early: bool


def _with_bias(X):
    return np.column_stack([X, np.ones(len(X))])


def _forward(W1, W2, Z):
    Xt = _with_bias(2.0 * Z - 1.0)
    A = np.tanh(Xt @ W1.T)
    At = _with_bias(A)
    return At @ W2.T, Xt, A, At


def _normal_equations(W1, W2, Z, T):
    """Gauss-Newton matrix ``J^T J``, gradient ``J^T e`` and SSE without forming ``J``.

    Residuals are ``e = y - t`` with parameters ordered as ``W1`` then ``W2``,
    both row-major. For hidden unit ``h`` and input ``i`` (bias included) let
    ``Z[n, (h, i)] = (1 - a_nh^2) * x_ni``. Then

    * the ``W1`` block is ``(Z^T Z) * kron(W2h^T W2h, 1)``, ``W2h`` being ``W2``
      without its bias column,
    * the ``W2`` block is block-diagonal with ``A^T A`` per output,
    * the cross block at ``((h, i), (k, j))`` is ``W2[k, h] * (Z^T A)[(h, i), j]``.
    """
    Y, Xt, A, At = _forward(W1, W2, Z)
    E = Y - T
    H, I1 = W1.shape
    O = W2.shape[0]
    B = 1.0 - A**2
    Zk = (B[:, :, None] * Xt[:, None, :]).reshape(len(Z), H * I1)
    W2h = W2[:, :H]

    jj11 = (Zk.T @ Zk) * np.kron(W2h.T @ W2h, np.ones((I1, I1)))
    AtA = At.T @ At
    jj22 = np.kron(np.eye(O), AtA)
    C = Zk.T @ At
    w = np.repeat(W2h.T, I1, axis=0)
    jj12 = (w[:, :, None] * C[:, None, :]).reshape(H * I1, O * (H + 1))
    JJ = np.block([[jj11, jj12], [jj12.T, jj22]])

    g1 = ((E @ W2h) * B).T @ Xt
    g2 = E.T @ At
    g = np.concatenate([g1.ravel(), g2.ravel()])
    return JJ, g, float((E**2).sum())


def dense_jacobian(W1, W2, Z) -> np.ndarray:
    """Explicit residual Jacobian, rows ordered ``(n, k)``; for verification."""
    _, Xt, A, At = _forward(W1, W2, Z)
    N = len(Z)
    H, I1 = W1.shape
    O = W2.shape[0]
    B = 1.0 - A**2
    J = np.zeros((N, O, H * I1 + O * (H + 1)))
    for k in range(O):
        J[:, k, : H * I1] = ((W2[k, :H] * B)[:, :, None] * Xt[:, None, :]).reshape(N, -1)
        J[:, k, H * I1 + k * (H + 1) : H * I1 + (k + 1) * (H + 1)] = At
    return J.reshape(N * O, -1)


def _unpack(theta, H, I1, O):
    n1 = H * I1
    return theta[:n1].reshape(H, I1), theta[n1:].reshape(O, H + 1)


def _mse(W1, W2, Z, T) -> float:
    if len(Z) == 0:
        return float("nan")
    return float(((_forward(W1, W2, Z)[0] - T) ** 2).mean())


def _init_weights(n_in, n_hidden, n_out, rng):
    """Uniform Glorot-style initialization; biases start at zero."""
    a1 = np.sqrt(6.0 / (n_in + n_hidden))
    a2 = np.sqrt(6.0 / (n_hidden + n_out))
    W1 = np.column_stack([rng.uniform(-a1, a1, (n_hidden, n_in)), np.zeros(n_hidden)])
    W2 = np.column_stack([rng.uniform(-a2, a2, (n_out, n_hidden)), np.zeros(n_out)])
    return W1, W2


def train(
    data: PspDataset,
    rng: np.random.Generator,
    ul_lower,
    ul_upper,
    ll_lower,
    ll_upper,
    ll_index=None,
    max_epochs: int = 1000,
    max_fail: int = 6,
    mu: float = 1e-3,
    mu_dec: float = 0.1,
    mu_inc: float = 10.0,
    mu_max: float = 1e10,
    min_grad: float = 1e-7,
    split: tuple[float, float, float] = (0.7, 0.15, 0.15),
) -> tuple[PspModel, TrainReport]:
    """Fit the predictor with full-batch Levenberg-Marquardt and early stopping.

    Rows are split at random into training, validation and test parts. Each
    epoch takes one LM step on the training SSE. Training ends when the
    validation MSE has not improved for ``max_fail`` consecutive epochs, when
    ``mu`` exceeds ``mu_max``, when the gradient vanishes, or at
    ``max_epochs``. The weights with the best validation MSE are returned.

    Args:
        data: Training rows from :func:`build_dataset`.
        rng: Random stream for the split and the initial weights.
        ul_lower, ul_upper: UL bounds stored in the model.
        ll_lower, ll_upper: Bounds of the target LL variables.
        ll_index: Positions of the targets in the full LL vector.

    Raises:
        ValueError: If fewer than 20 rows are given.
        FloatingPointError: If the loss becomes non-finite.
    """
    N = len(data)
    if N < 20:
        raise ValueError(f"training needs at least 20 rows, got {N}")
    Z, T = data.inputs, data.targets
    n_in, n_out = Z.shape[1], T.shape[1]
    n_hidden = hidden_width(n_in, n_out)

    perm = rng.permutation(N)
    n_tr = int(round(split[0] * N))
    n_va = int(round(split[1] * N))
    tr, va, te = perm[:n_tr], perm[n_tr : n_tr + n_va], perm[n_tr + n_va :]
    Ztr, Ttr = Z[tr], T[tr]

    W1, W2 = _init_weights(n_in, n_hidden, n_out, rng)
    H, I1, O = n_hidden, n_in + 1, n_out
    theta = np.concatenate([W1.ravel(), W2.ravel()])

    JJ, g, sse = _normal_equations(W1, W2, Ztr, Ttr)
    if not np.isfinite(sse):
        raise FloatingPointError("non-finite training loss at initialization")
    best_val = _mse(W1, W2, Z[va], T[va]) if len(va) else sse / Ttr.size
    best = (W1, W2)
    fails = 0
    epochs = 0
    stopped_early = False
    eye = np.eye(len(theta))
    while epochs < max_epochs:
        if np.abs(g).max() < min_grad:
            break
        improved = False
        while mu <= mu_max:
            try:
                step = np.linalg.solve(JJ + mu * eye, g)
            except np.linalg.LinAlgError:
                mu *= mu_inc
                continue
            cand = theta - step
            cW1, cW2 = _unpack(cand, H, I1, O)
            c_sse = float(((_forward(cW1, cW2, Ztr)[0] - Ttr) ** 2).sum())
            if not np.isfinite(c_sse):
                raise FloatingPointError(
                    f"non-finite training loss at epoch {epochs + 1} (mu={mu:.3g}, |step|={np.abs(step).max():.3g})"
                )
            if c_sse < sse:
                theta, sse = cand, c_sse
                mu *= mu_dec
                improved = True
                break
            mu *= mu_inc
        epochs += 1
        if not improved:
            break
        W1, W2 = _unpack(theta, H, I1, O)
        JJ, g, sse = _normal_equations(W1, W2, Ztr, Ttr)
        if len(va):
            val = _mse(W1, W2, Z[va], T[va])
            if val < best_val:
                best_val, best, fails = val, (W1, W2), 0
            else:
                fails += 1
                if fails >= max_fail:
                    stopped_early = True
                    break
        else:
            best = (W1, W2)
    W1, W2 = best
    model = PspModel(W1.copy(), W2.copy(), np.asarray(ul_lower, float), np.asarray(ul_upper, float),
                     np.asarray(ll_lower, float), np.asarray(ll_upper, float),
                     None if ll_index is None else np.asarray(ll_index, dtype=int))
    report = TrainReport(
        epochs_run=max(epochs, 1),
        train_mse=_mse(W1, W2, Ztr, Ttr),
        val_mse=float(best_val),
        test_mse=_mse(W1, W2, Z[te], T[te]),
        stopped_early=stopped_early,
    )
    if not np.isfinite(report.val_mse):
        raise FloatingPointError("non-finite validation loss after training")
    return model, report


def predict_ps(model: PspModel, x_u: np.ndarray, n_l: int) -> np.ndarray:
    """Predict ``n_l`` LL solutions for one UL vector.

    The outputs are ordered by ascending helper value and clamped to the box.

    Raises:
        ValueError: If ``n_l < 1`` or ``x_u`` is outside the UL bounds.
    """
    if n_l < 1:
        raise ValueError("n_l must be at least 1")
    x_u = np.asarray(x_u, dtype=float).ravel()
    tol = 1e-12 * np.maximum(1.0, np.abs(model.ul_upper - model.ul_lower))
    if np.any(x_u < model.ul_lower - tol) or np.any(x_u > model.ul_upper + tol):
        raise ValueError("x_u lies outside the UL bounds")
    zu = _normalize(x_u, model.ul_lower, model.ul_upper)
    r = np.linspace(0.0, 1.0, n_l) if n_l > 1 else np.zeros(1)
    Zin = np.column_stack([np.tile(zu, (n_l, 1)), r])
    Y = np.clip(model.forward(Zin), 0.0, 1.0)
    return model.ll_lower + Y * (model.ll_upper - model.ll_lower)


def save_model(model: PspModel, path: str | Path) -> None:
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "layers": [model.n_in, model.n_hidden, model.n_out],
        "activation": ["tanh", "linear"],
        "W1": model.W1.tolist(),
        "W2": model.W2.tolist(),
        "ul_lower": model.ul_lower.tolist(),
        "ul_upper": model.ul_upper.tolist(),
        "ll_lower": model.ll_lower.tolist(),
        "ll_upper": model.ll_upper.tolist(),
        "ll_index": np.asarray(model.ll_index).tolist(),
    }
    Path(path).write_text(json.dumps(doc))


def load_model(path: str | Path) -> PspModel:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != MODEL_FORMAT or doc.get("version") != MODEL_VERSION:
        raise ValueError(f"{path}: not a version-{MODEL_VERSION} {MODEL_FORMAT} file")
    model = PspModel(
        np.asarray(doc["W1"], dtype=float),
        np.asarray(doc["W2"], dtype=float),
        np.asarray(doc["ul_lower"], dtype=float),
        np.asarray(doc["ul_upper"], dtype=float),
        np.asarray(doc["ll_lower"], dtype=float),
        np.asarray(doc["ll_upper"], dtype=float),
        np.asarray(doc["ll_index"], dtype=int),
    )
    n_in, n_hidden, n_out = doc["layers"]
    if model.W1.shape != (n_hidden, n_in + 1) or model.W2.shape != (n_out, n_hidden + 1):
        raise ValueError(f"{path}: weight shapes disagree with the layer sizes")
    return model
