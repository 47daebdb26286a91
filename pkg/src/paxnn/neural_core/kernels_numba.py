"""Numba-compiled kernels, signature-identical to :mod:`kernels_numpy`.

Elementwise work is written as explicit scalar loops; the recurrent matmuls
go through ``np.dot`` on contiguous float64 arrays, which numba dispatches
to BLAS. ``fastmath`` stays off so both backends compute IEEE doubles; the
backends agree to rounding (the numpy path evaluates the logistic through
``tanh``, this one through ``exp``).
"""

import math

import numpy as np
from numba import njit

NAME = "numba"


@njit(cache=True)
def lstm_forward(xzb, wh, hs, cs, tcs, gates):
    T, B, H4 = xzb.shape
    H = H4 // 4
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    z = np.empty((B, H4))
    for t in range(T):
        np.dot(h, wh, out=z)
        zt = xzb[t]
        gt = gates[t]
        for bi in range(B):
            for j in range(H):
                zi = z[bi, j] + zt[bi, j]
                zf = z[bi, H + j] + zt[bi, H + j]
                zo = z[bi, 2 * H + j] + zt[bi, 2 * H + j]
                zg = z[bi, 3 * H + j] + zt[bi, 3 * H + j]
                ig = 1.0 / (1.0 + math.exp(-zi))
                fg = 1.0 / (1.0 + math.exp(-zf))
                og = 1.0 / (1.0 + math.exp(-zo))
                gg = math.tanh(zg)
                cn = fg * c[bi, j] + ig * gg
                tc = math.tanh(cn)
                hn = og * tc
                gt[bi, j] = ig
                gt[bi, H + j] = fg
                gt[bi, 2 * H + j] = og
                gt[bi, 3 * H + j] = gg
                cs[t, bi, j] = cn
                tcs[t, bi, j] = tc
                hs[t, bi, j] = hn
                c[bi, j] = cn
                h[bi, j] = hn
    return hs


@njit(cache=True)
def lstm_backward(wh, hs, cs, tcs, gates, dh_out, dz_all):
    T, B, H = hs.shape
    whT = np.ascontiguousarray(wh.T)
    dh_next = np.zeros((B, H))
    dc_next = np.zeros((B, H))
    dh_buf = np.empty((B, H))
    for t in range(T - 1, -1, -1):
        gt = gates[t]
        dz = dz_all[t]
        for bi in range(B):
            for j in range(H):
                ig = gt[bi, j]
                fg = gt[bi, H + j]
                og = gt[bi, 2 * H + j]
                gg = gt[bi, 3 * H + j]
                tc = tcs[t, bi, j]
                dh = dh_out[t, bi, j] + dh_next[bi, j]
                dc = dc_next[bi, j] + dh * og * (1.0 - tc * tc)
                c_prev = cs[t - 1, bi, j] if t > 0 else 0.0
                dz[bi, j] = dc * gg * ig * (1.0 - ig)
                dz[bi, H + j] = dc * c_prev * fg * (1.0 - fg)
                dz[bi, 2 * H + j] = dh * tc * og * (1.0 - og)
                dz[bi, 3 * H + j] = dc * ig * (1.0 - gg * gg)
                dc_next[bi, j] = dc * fg
        np.dot(dz, whT, out=dh_buf)
        tmp = dh_next
        dh_next = dh_buf
        dh_buf = tmp
    return dz_all


@njit(cache=True)
def lstm_states(xzb, wh):
    T, B, H4 = xzb.shape
    H = H4 // 4
    hs = np.zeros((T, B, H))
    cs = np.zeros((T, B, H))
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    z = np.empty((B, H4))
    for t in range(T):
        np.dot(h, wh, out=z)
        zt = xzb[t]
        for bi in range(B):
            for j in range(H):
                zi = z[bi, j] + zt[bi, j]
                zf = z[bi, H + j] + zt[bi, H + j]
                zo = z[bi, 2 * H + j] + zt[bi, 2 * H + j]
                zg = z[bi, 3 * H + j] + zt[bi, 3 * H + j]
                ig = 1.0 / (1.0 + math.exp(-zi))
                fg = 1.0 / (1.0 + math.exp(-zf))
                og = 1.0 / (1.0 + math.exp(-zo))
                gg = math.tanh(zg)
                cn = fg * c[bi, j] + ig * gg
                hn = og * math.tanh(cn)
                cs[t, bi, j] = cn
                hs[t, bi, j] = hn
                c[bi, j] = cn
                h[bi, j] = hn
    return hs, cs


@njit(cache=True)
def fnn_train(x, y, order, batch, alpha, mu, w1, b1, w2, b2, vw1, vb1, vw2, vb2):
    n, nf = x.shape
    hid = w1.shape[0]
    nc = w2.shape[0]
    epochs = order.shape[0]
    xb = np.empty((batch, nf))
    a1 = np.empty((batch, hid))
    p = np.empty((batch, nc))
    dw1 = np.empty((hid, nf))
    db1 = np.empty(hid)
    dw2 = np.empty((nc, hid))
    db2 = np.empty(nc)
    last = 0.0
    for e in range(epochs):
        total = 0.0
        for s in range(0, n, batch):
            m = min(batch, n - s)
            # forward
            for r in range(m):
                k = order[e, s + r]
                for cix in range(nf):
                    xb[r, cix] = x[k, cix]
                for j in range(hid):
                    acc = b1[j]
                    for cix in range(nf):
                        acc += w1[j, cix] * xb[r, cix]
                    a1[r, j] = math.tanh(acc)
                zmax = -1.0e300
                for j in range(nc):
                    acc = b2[j]
                    for u in range(hid):
                        acc += w2[j, u] * a1[r, u]
                    p[r, j] = acc
                    if acc > zmax:
                        zmax = acc
                zsum = 0.0
                for j in range(nc):
                    ez = math.exp(p[r, j] - zmax)
                    p[r, j] = ez
                    zsum += ez
                for j in range(nc):
                    p[r, j] /= zsum
            # loss and output-layer gradient
            for r in range(m):
                k = order[e, s + r]
                total += -math.log(p[r, y[k]] + 1e-12)
                p[r, y[k]] -= 1.0
                for j in range(nc):
                    p[r, j] /= m
            # backward
            for j in range(nc):
                db2[j] = 0.0
                for u in range(hid):
                    dw2[j, u] = 0.0
            for j in range(hid):
                db1[j] = 0.0
                for cix in range(nf):
                    dw1[j, cix] = 0.0
            for r in range(m):
                for j in range(nc):
                    db2[j] += p[r, j]
                    for u in range(hid):
                        dw2[j, u] += p[r, j] * a1[r, u]
                for u in range(hid):
                    da = 0.0
                    for j in range(nc):
                        da += p[r, j] * w2[j, u]
                    dz = da * (1.0 - a1[r, u] * a1[r, u])
                    db1[u] += dz
                    for cix in range(nf):
                        dw1[u, cix] += dz * xb[r, cix]
            # SGDM: v <- mu*v - alpha*g ; theta <- theta + v
            for j in range(hid):
                for cix in range(nf):
                    vw1[j, cix] = mu * vw1[j, cix] - alpha * dw1[j, cix]
                    w1[j, cix] += vw1[j, cix]
                vb1[j] = mu * vb1[j] - alpha * db1[j]
                b1[j] += vb1[j]
            for j in range(nc):
                for u in range(hid):
                    vw2[j, u] = mu * vw2[j, u] - alpha * dw2[j, u]
                    w2[j, u] += vw2[j, u]
                vb2[j] = mu * vb2[j] - alpha * db2[j]
                b2[j] += vb2[j]
        last = total / n
    return last
