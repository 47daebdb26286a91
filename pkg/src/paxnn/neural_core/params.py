"""Parameter containers and initialization.

Training code passes parameters around as flat ``dict[str, ndarray]`` so the
optimizer, the serializer, and the gradient checker stay generic. The typed
wrappers below give shape-checked access to the same arrays, including
per-gate views into the stacked LSTM matrices.

Stacked LSTM layout: ``wx`` is (D, 4H), ``wh`` is (H, 4H), ``b`` is (4H,),
gate order along the 4H axis is [input, forget, output, candidate].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError

GATE_ORDER = ("i", "f", "o", "c")


def _check_finite(name, a):
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"parameter block {name!r} contains non-finite values")


@dataclass
class DenseParams:
    """Weights (out, in) and bias (out,) of one dense layer."""

    w: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        if self.w.ndim != 2 or self.b.shape != (self.w.shape[0],):
            raise ValidationError(
                f"inconsistent dense shapes: w {self.w.shape}, b {self.b.shape}")
        _check_finite("w", self.w)
        _check_finite("b", self.b)

    @property
    def n_out(self):
        return self.w.shape[0]

    @property
    def n_in(self):
        return self.w.shape[1]


@dataclass
class LstmParams:
    """Stacked gate parameters of one LSTM layer."""

    wx: np.ndarray   # (D, 4H)
    wh: np.ndarray   # (H, 4H)
    b: np.ndarray    # (4H,)

    def __post_init__(self):
        self.wx = np.asarray(self.wx, dtype=np.float64)
        self.wh = np.asarray(self.wh, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        h4 = self.wx.shape[1] if self.wx.ndim == 2 else -1
        if (h4 <= 0 or h4 % 4 or self.wh.shape != (h4 // 4, h4)
                or self.b.shape != (h4,)):
            raise ValidationError(
                f"inconsistent LSTM shapes: wx {self.wx.shape}, wh {self.wh.shape}, "
                f"b {self.b.shape}")
        for name in ("wx", "wh", "b"):
            _check_finite(name, getattr(self, name))

    @property
    def hidden(self) -> int:
        return self.wh.shape[0]

    @property
    def n_in(self) -> int:
        return self.wx.shape[0]

    def _slice(self, gate):
        k = GATE_ORDER.index(gate)
        h = self.hidden
        return slice(k * h, (k + 1) * h)

    def input_weights(self, gate: str) -> np.ndarray:
        """W_g as (H, D) for gate in {'i','f','o','c'}."""
        return self.wx[:, self._slice(gate)].T

    def recurrent_weights(self, gate: str) -> np.ndarray:
        """U_g as (H, H)."""
        return self.wh[:, self._slice(gate)].T

    def bias(self, gate: str) -> np.ndarray:
        return self.b[self._slice(gate)]


@dataclass
class LstmState:
    """Hidden output and cell state of one step."""

    h: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        self.h = np.asarray(self.h, dtype=np.float64)
        self.c = np.asarray(self.c, dtype=np.float64)
        if self.h.shape != self.c.shape:
            raise ValidationError("h and c must have the same shape")

    @classmethod
    def zeros(cls, hidden: int) -> "LstmState":
        return cls(np.zeros(hidden), np.zeros(hidden))


def glorot_limit(fan_in: int, fan_out: int) -> float:
    return float(np.sqrt(6.0 / (fan_in + fan_out)))


def init_dense(n_out: int, n_in: int, rng) -> dict:
    r = glorot_limit(n_in, n_out)
    return {"w": rng.uniform(-r, r, (n_out, n_in)), "b": np.zeros(n_out)}


def init_fnn(n_in: int, hidden: int, n_out: int, seed: int) -> dict:
    """5-ish -> tanh hidden -> softmax readout classifier parameters."""
    rng = np.random.default_rng(seed)
    l1 = init_dense(hidden, n_in, rng)
    l2 = init_dense(n_out, hidden, rng)
    return {"w1": l1["w"], "b1": l1["b"], "w2": l2["w"], "b2": l2["b"]}


def _init_lstm_blocks(n_in: int, hidden: int, rng) -> dict:
    rx = glorot_limit(n_in, hidden)
    rh = glorot_limit(hidden, hidden)
    wx = np.empty((n_in, 4 * hidden))
    wh = np.empty((hidden, 4 * hidden))
    for k in range(4):
        wx[:, k * hidden:(k + 1) * hidden] = rng.uniform(-rx, rx, (n_in, hidden))
    for k in range(4):
        wh[:, k * hidden:(k + 1) * hidden] = rng.uniform(-rh, rh, (hidden, hidden))
    b = np.zeros(4 * hidden)
    b[hidden:2 * hidden] = 1.0   # forget gate starts open
    return {"wx": wx, "wh": wh, "b": b}


def init_lstm(n_in: int, hidden: int, n_out: int, seed: int) -> dict:
    """LSTM layer plus dense softmax readout."""
    rng = np.random.default_rng(seed)
    params = _init_lstm_blocks(n_in, hidden, rng)
    ro = glorot_limit(hidden, n_out)
    params["wo"] = rng.uniform(-ro, ro, (n_out, hidden))
    params["bo"] = np.zeros(n_out)
    return params


def init_combined(n_static: int, static_hidden: int, n_in: int, hidden: int,
                  n_out: int, seed: int) -> dict:
    """Static tanh branch + LSTM branch + fused softmax readout."""
    rng = np.random.default_rng(seed)
    st = init_dense(static_hidden, n_static, rng)
    params = _init_lstm_blocks(n_in, hidden, rng)
    rf = glorot_limit(hidden + static_hidden, n_out)
    params.update({
        "sw1": st["w"], "sb1": st["b"],
        "fw": rng.uniform(-rf, rf, (n_out, hidden + static_hidden)),
        "fb": np.zeros(n_out),
    })
    return params


def clone_params(params: dict) -> dict:
    return {k: v.copy() for k, v in params.items()}


def params_allclose(a: dict, b: dict, rtol=0.0, atol=0.0) -> bool:
    if a.keys() != b.keys():
        return False
    return all(np.allclose(a[k], b[k], rtol=rtol, atol=atol) for k in a)
