"""Pure-numpy reference kernels.

Array conventions (shared with the numba backend):

* sequence tensors are time-major: ``(T, B, ...)``
* LSTM gate axis is stacked ``[input, forget, output, candidate]``, width 4H
* ``xzb`` is the precomputed input drive ``x_t @ wx + b`` per step
* everything is float64, C-contiguous
"""

import numpy as np

NAME = "numpy"


def _activate_gates(z, H, out):
    """In place on ``out``: sigmoid on the first 3H columns (via the tanh
    identity, which vectorizes and never overflows), tanh on the last H."""
    s = out[:, :3 * H]
    np.multiply(z[:, :3 * H], 0.5, out=s)
    np.tanh(s, out=s)
    s += 1.0
    s *= 0.5
    np.tanh(z[:, 3 * H:], out=out[:, 3 * H:])
    return out


def lstm_forward(xzb, wh, hs, cs, tcs, gates):
    """Run the cell over a sequence, filling the caller's caches in place:
    hidden states, cell states, tanh of the cell states, and post-activation
    gate values, all time-major."""
    T, B, H4 = xzb.shape
    H = H4 // 4
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    for t in range(T):
        z = xzb[t] + h @ wh
        g4 = _activate_gates(z, H, gates[t])
        i = g4[:, :H]
        f = g4[:, H:2 * H]
        o = g4[:, 2 * H:3 * H]
        g = g4[:, 3 * H:]
        np.multiply(f, c, out=cs[t])
        c = cs[t]
        c += i * g
        tc = np.tanh(c, out=tcs[t])
        np.multiply(o, tc, out=hs[t])
        h = hs[t]
    return hs


def lstm_backward(wh, hs, cs, tcs, gates, dh_out, dz_all):
    """Backpropagate through time; fills pre-activation gate grads (T,B,4H)
    into ``dz_all``.

    Weight gradients are assembled by the caller from that tensor (they are
    plain GEMMs and need no sequential recursion).
    """
    T, B, H = hs.shape
    whT = np.ascontiguousarray(wh.T)
    dh_next = np.zeros((B, H))
    dc_next = np.zeros((B, H))
    for t in range(T - 1, -1, -1):
        i = gates[t, :, :H]
        f = gates[t, :, H:2 * H]
        o = gates[t, :, 2 * H:3 * H]
        g = gates[t, :, 3 * H:]
        tc = tcs[t]
        dh = dh_out[t] + dh_next
        dc = dc_next + dh * o * (1.0 - tc * tc)
        c_prev = cs[t - 1] if t > 0 else 0.0
        dz = dz_all[t]
        dz[:, :H] = dc * g * i * (1.0 - i)
        dz[:, H:2 * H] = dc * c_prev * f * (1.0 - f)
        dz[:, 2 * H:3 * H] = dh * tc * o * (1.0 - o)
        dz[:, 3 * H:] = dc * i * (1.0 - g * g)
        dh_next = dz @ whT
        dc_next = dc * f
    return dz_all


def lstm_states(xzb, wh):
    """Inference pass: hidden and cell states only, no gate cache."""
    T, B, H4 = xzb.shape
    H = H4 // 4
    hs = np.zeros((T, B, H))
    cs = np.zeros((T, B, H))
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    scratch = np.empty((B, H4))
    for t in range(T):
        z = xzb[t] + h @ wh
        g4 = _activate_gates(z, H, scratch)
        c = g4[:, H:2 * H] * c + g4[:, :H] * g4[:, 3 * H:]
        h = g4[:, 2 * H:3 * H] * np.tanh(c)
        hs[t] = h
        cs[t] = c
    return hs, cs


def fnn_train(x, y, order, batch, alpha, mu, w1, b1, w2, b2, vw1, vb1, vw2, vb2):
    """Fused SGDM training loop for one small dense classifier.

    ``order`` holds one pre-shuffled index row per epoch so both backends
    consume the identical batch schedule. Parameters and velocities are
    updated in place; returns the mean cross-entropy of the last epoch.
    """
    n = x.shape[0]
    epochs = order.shape[0]
    last = 0.0
    for e in range(epochs):
        total = 0.0
        for s in range(0, n, batch):
            idx = order[e, s:s + batch]
            m = idx.shape[0]
            xb = x[idx]
            yb = y[idx]
            a1 = np.tanh(xb @ w1.T + b1)
            logits = a1 @ w2.T + b2
            p = logits - logits.max(axis=1, keepdims=True)
            np.exp(p, out=p)
            p /= p.sum(axis=1, keepdims=True)
            rows = np.arange(m)
            total += -np.log(p[rows, yb] + 1e-12).sum()
            p[rows, yb] -= 1.0
            p /= m
            dw2 = p.T @ a1
            db2 = p.sum(axis=0)
            dz1 = (p @ w2) * (1.0 - a1 * a1)
            dw1 = dz1.T @ xb
            db1 = dz1.sum(axis=0)
            vw1 *= mu; vw1 -= alpha * dw1; w1 += vw1
            vb1 *= mu; vb1 -= alpha * db1; b1 += vb1
            vw2 *= mu; vw2 -= alpha * dw2; w2 += vw2
            vb2 *= mu; vb2 -= alpha * db2; b2 += vb2
        last = total / n
    return last
