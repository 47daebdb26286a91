"""Elementary operations: dense pre-activation, softmax, cross-entropy, and
the single-sample LSTM step. Batch training paths live in :mod:`losses`;
these are the small, shape-checked building blocks the rest of the package
(and the tests) reason about.
"""

from __future__ import annotations

import numpy as np

from ..errors import DomainError
from .params import DenseParams, LstmParams, LstmState

CE_EPS = 1e-12


def dense_forward(p: DenseParams, x: np.ndarray) -> np.ndarray:
    """Pre-activation ``W @ x + b``; the caller applies any nonlinearity."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (p.n_in,):
        raise DomainError(f"expected input of shape ({p.n_in},), got {x.shape}")
    return p.w @ x + p.b


def softmax(z: np.ndarray) -> np.ndarray:
    """Numerically stable softmax along the last axis."""
    z = np.asarray(z, dtype=np.float64)
    if not np.all(np.isfinite(z)):
        raise DomainError("softmax input must be finite")
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(p: np.ndarray, true_class: int) -> float:
    """``-log p[true_class]`` with a clamp so a zero probability stays finite."""
    p = np.asarray(p, dtype=np.float64)
    c = int(true_class)
    if not 0 <= c < p.shape[-1]:
        raise DomainError(f"class {true_class!r} out of range for {p.shape[-1]} classes")
    return float(-np.log(p[..., c] + CE_EPS))


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[np.logical_not(pos)])
    out[np.logical_not(pos)] = ez / (1.0 + ez)
    return out


def lstm_step(p: LstmParams, x: np.ndarray, s: LstmState):
    """One cell update on a single input vector.

    Returns the new state and a cache of the gate activations
    (keys ``i f o c_tilde c_new``) for backprop or inspection.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (p.n_in,):
        raise DomainError(f"expected input of shape ({p.n_in},), got {x.shape}")
    if s.h.shape != (p.hidden,):
        raise DomainError(f"expected state of shape ({p.hidden},), got {s.h.shape}")
    h = p.hidden
    z = x @ p.wx + s.h @ p.wh + p.b
    i = sigmoid(z[:h])
    f = sigmoid(z[h:2 * h])
    o = sigmoid(z[2 * h:3 * h])
    g = np.tanh(z[3 * h:])
    c_new = f * s.c + i * g
    h_new = o * np.tanh(c_new)
    cache = {"i": i, "f": f, "o": o, "c_tilde": g, "c_new": c_new}
    return LstmState(h_new, c_new), cache
