"""Batch loss/gradient passes for the three architectures.

These wrap the backend kernels: the sequential recursions run in the active
backend, while the input/weight GEMMs (which BLAS handles directly) stay in
numpy here.

Shapes: feature batches are (B, F); code batches are (B, 36) int64. The mean
cross-entropy is taken over every (sequence, step) pair of the batch, which
is exactly what the gradients differentiate.
"""

from __future__ import annotations

import numpy as np

from ..activity_model import N_ACTIVITIES
from ..errors import DomainError
from . import backend

CE_EPS = 1e-12


def _softmax_rows(z):
    p = z - z.max(axis=1, keepdims=True)
    np.exp(p, out=p)
    p /= p.sum(axis=1, keepdims=True)
    return p


def _onehot_flat(codes_flat, n=N_ACTIVITIES):
    out = np.zeros((codes_flat.shape[0], n))
    out[np.arange(codes_flat.shape[0]), codes_flat] = 1.0
    return out


# ---------------------------------------------------------------- FNN

def fnn_logits(params: dict, x: np.ndarray) -> np.ndarray:
    a1 = np.tanh(x @ params["w1"].T + params["b1"])
    return a1 @ params["w2"].T + params["b2"]


def fnn_loss_and_grads(params: dict, x: np.ndarray, y: np.ndarray):
    """Mean cross-entropy over the batch and its exact gradients."""
    m = x.shape[0]
    a1 = np.tanh(x @ params["w1"].T + params["b1"])
    p = _softmax_rows(a1 @ params["w2"].T + params["b2"])
    rows = np.arange(m)
    loss = float(-np.log(p[rows, y] + CE_EPS).mean())
    d = p.copy()
    d[rows, y] -= 1.0
    d /= m
    dz1 = (d @ params["w2"]) * (1.0 - a1 * a1)
    grads = {
        "w2": d.T @ a1, "b2": d.sum(axis=0),
        "w1": dz1.T @ x, "b1": dz1.sum(axis=0),
    }
    return loss, grads


# ---------------------------------------------------------------- LSTM

def _input_drive(params, codes_tm):
    # one-hot input times wx is a row gather of wx
    return params["wx"][codes_tm] + params["b"]


def lstm_hidden_states(params: dict, codes: np.ndarray):
    """States over a full prefix batch: hs, cs of shape (T, B, H)."""
    codes_tm = np.ascontiguousarray(codes.T)
    xzb = _input_drive(params, codes_tm)
    return backend.kernels().lstm_states(xzb, params["wh"])


def lstm_cell_batch(params: dict, code_col: np.ndarray, h: np.ndarray, c: np.ndarray):
    """One batched cell step on integer codes (used by rollout forecasting)."""
    hd = params["wh"].shape[0]
    z = params["wx"][code_col] + params["b"] + h @ params["wh"]
    g4 = np.empty_like(z)
    from .kernels_numpy import _activate_gates
    _activate_gates(z, hd, g4)
    c_new = g4[:, hd:2 * hd] * c + g4[:, :hd] * g4[:, 3 * hd:]
    h_new = g4[:, 2 * hd:3 * hd] * np.tanh(c_new)
    return h_new, c_new


def lstm_readout(params: dict, h: np.ndarray) -> np.ndarray:
    return h @ params["wo"].T + params["bo"]


class _Workspace:
    """Reusable batch buffers; fresh 30 MB allocations per step would cost
    more in page faults than the math itself."""

    def __init__(self, t, b, hidden):
        self.xzb = np.empty((t, b, 4 * hidden))
        self.hs = np.zeros((t, b, hidden))
        self.cs = np.zeros((t, b, hidden))
        self.tcs = np.zeros((t, b, hidden))
        self.gates = np.empty((t, b, 4 * hidden))
        self.dz = np.empty((t, b, 4 * hidden))
        self.dh = np.empty((t, b, hidden))
        self.hs_prev = np.empty((t, b, hidden))
        self.x1 = np.zeros((t * b, N_ACTIVITIES))
        self.rows = np.arange(t * b)


_WORKSPACES: dict = {}


def _workspace(t, b, hidden) -> _Workspace:
    key = (t, b, hidden)
    ws = _WORKSPACES.get(key)
    if ws is None:
        ws = _WORKSPACES[key] = _Workspace(t, b, hidden)
    return ws


def lstm_loss_and_grads(params: dict, codes: np.ndarray, horizon: int):
    """Next-step (offset ``horizon``) training pass over a code batch.

    Inputs are steps 0..T-1-horizon, the target at step t is the code at
    t+horizon; loss is the mean cross-entropy over all (sequence, step) pairs.
    """
    n_units = codes.shape[1]
    if not 1 <= horizon < n_units:
        raise DomainError(f"horizon must lie in [1, {n_units - 1}], got {horizon}")
    t_in = n_units - horizon
    codes_tm = np.ascontiguousarray(codes[:, :t_in].T)
    targets = codes[:, horizon:].T  # (T, B)
    k = backend.kernels()
    hd = params["wh"].shape[0]
    t, b = codes_tm.shape
    ws = _workspace(t, b, hd)
    np.take(params["wx"], codes_tm, axis=0, out=ws.xzb)
    ws.xzb += params["b"]
    hs = k.lstm_forward(ws.xzb, params["wh"], ws.hs, ws.cs, ws.tcs, ws.gates)
    flat = hs.reshape(t * b, hd)
    p = _softmax_rows(flat @ params["wo"].T + params["bo"])
    y = targets.reshape(t * b)
    loss = float(-np.log(p[ws.rows, y] + CE_EPS).mean())
    d = p
    d[ws.rows, y] -= 1.0
    d /= t * b
    dwo = d.T @ flat
    dbo = d.sum(axis=0)
    np.matmul(d, params["wo"], out=ws.dh.reshape(t * b, hd))
    k.lstm_backward(params["wh"], hs, ws.cs, ws.tcs, ws.gates, ws.dh, ws.dz)
    dz_flat = ws.dz.reshape(t * b, 4 * hd)
    ws.hs_prev[0] = 0.0
    ws.hs_prev[1:] = hs[:-1]
    ws.x1[:] = 0.0
    ws.x1[ws.rows, codes_tm.reshape(t * b)] = 1.0
    grads = {
        "wx": ws.x1.T @ dz_flat,
        "wh": ws.hs_prev.reshape(t * b, hd).T @ dz_flat,
        "b": dz_flat.sum(axis=0),
        "wo": dwo,
        "bo": dbo,
    }
    return loss, grads


# ------------------------------------------------------------ combined

def combined_static_hidden(params: dict, feats: np.ndarray) -> np.ndarray:
    return np.tanh(feats @ params["sw1"].T + params["sb1"])


def combined_logits_from_states(params, hs_t, s):
    hd = hs_t.shape[-1]
    return hs_t @ params["fw"][:, :hd].T + s @ params["fw"][:, hd:].T + params["fb"]


def combined_loss_and_grads(params: dict, feats: np.ndarray, codes: np.ndarray):
    """Joint pass: static tanh branch, LSTM branch, fused readout (offset 1)."""
    n_units = codes.shape[1]
    t_in = n_units - 1
    codes_tm = np.ascontiguousarray(codes[:, :t_in].T)
    targets = codes[:, 1:].T
    k = backend.kernels()
    hd = params["wh"].shape[0]
    t, b = codes_tm.shape
    ws = _workspace(t, b, hd)
    np.take(params["wx"], codes_tm, axis=0, out=ws.xzb)
    ws.xzb += params["b"]
    hs = k.lstm_forward(ws.xzb, params["wh"], ws.hs, ws.cs, ws.tcs, ws.gates)
    s = combined_static_hidden(params, feats)             # (B, S)
    flat = hs.reshape(t * b, hd)
    logits = flat @ params["fw"][:, :hd].T + np.tile(
        s @ params["fw"][:, hd:].T + params["fb"], (t, 1))
    p = _softmax_rows(logits)
    y = targets.reshape(t * b)
    rows = ws.rows
    loss = float(-np.log(p[rows, y] + CE_EPS).mean())
    d = p
    d[rows, y] -= 1.0
    d /= t * b
    dfw = np.empty_like(params["fw"])
    dfw[:, :hd] = d.T @ flat
    d_sum_t = d.reshape(t, b, -1).sum(axis=0)             # (B, C)
    dfw[:, hd:] = d_sum_t.T @ s
    ds = d_sum_t @ params["fw"][:, hd:]
    dz_s = ds * (1.0 - s * s)
    np.matmul(d, params["fw"][:, :hd], out=ws.dh.reshape(t * b, hd))
    k.lstm_backward(params["wh"], hs, ws.cs, ws.tcs, ws.gates, ws.dh, ws.dz)
    dz_flat = ws.dz.reshape(t * b, 4 * hd)
    hs_prev = ws.hs_prev
    hs_prev[0] = 0.0
    hs_prev[1:] = hs[:-1]
    ws.x1[:] = 0.0
    ws.x1[rows, codes_tm.reshape(t * b)] = 1.0
    x1 = ws.x1
    grads = {
        "wx": x1.T @ dz_flat,
        "wh": hs_prev.reshape(t * b, hd).T @ dz_flat,
        "b": dz_flat.sum(axis=0),
        "sw1": dz_s.T @ feats,
        "sb1": dz_s.sum(axis=0),
        "fw": dfw,
        "fb": d.sum(axis=0),
    }
    return loss, grads
