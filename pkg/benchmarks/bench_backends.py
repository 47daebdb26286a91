"""Timing comparison of the numba and pure-numpy kernel backends.

Run from the repository root:

    python3 benchmarks/bench_backends.py [--batches 64,128,256] [--repeats 10]

Covers the three hot paths: the LSTM sequence forward/backward pair (the
bulk of sequence-model training), the inference pass, and the fused
per-unit classifier training loop. The same arrays are fed to both
backends; outputs are cross-checked before timing.
"""

import argparse
import time

import numpy as np

from paxnn.neural_core import kernels_numba, kernels_numpy

T, HIDDEN, N_CLASSES = 35, 200, 6


def _timeit(fn, repeats):
    fn()
    t0 = time.time()
    for _ in range(repeats):
        fn()
    return (time.time() - t0) / repeats


def bench_lstm(mod, batch, repeats, arrays):
    xzb, wh, dh = arrays
    hs = np.zeros((T, batch, HIDDEN))
    cs = np.zeros((T, batch, HIDDEN))
    tcs = np.zeros((T, batch, HIDDEN))
    gates = np.empty((T, batch, 4 * HIDDEN))
    dz = np.empty((T, batch, 4 * HIDDEN))
    fwd = _timeit(lambda: mod.lstm_forward(xzb, wh, hs, cs, tcs, gates), repeats)
    bwd = _timeit(lambda: mod.lstm_backward(wh, hs, cs, tcs, gates, dh, dz), repeats)
    inf = _timeit(lambda: mod.lstm_states(xzb, wh), repeats)
    return fwd, bwd, inf, hs.copy(), dz.copy()


def bench_fnn(mod, repeats, arrays):
    x, y, order = arrays

    def run():
        rng = np.random.default_rng(0)
        w1 = rng.uniform(-0.5, 0.5, (6, 5))
        b1 = np.zeros(6)
        w2 = rng.uniform(-0.5, 0.5, (N_CLASSES, 6))
        b2 = np.zeros(N_CLASSES)
        vels = [np.zeros_like(a) for a in (w1, b1, w2, b2)]
        mod.fnn_train(x, y, order, 128, 0.05, 0.9, w1, b1, w2, b2, *vels)
        return w1

    run()
    t0 = time.time()
    for _ in range(repeats):
        out = run()
    return (time.time() - t0) / repeats, out


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--batches", default="64,128,256")
    ap.add_argument("--repeats", type=int, default=10)
    args = ap.parse_args()
    rng = np.random.default_rng(7)

    print(f"{'kernel':<28}{'batch':>6}  {'numba':>9}  {'numpy':>9}  {'numba/numpy':>12}")
    for batch in (int(b) for b in args.batches.split(",")):
        xzb = rng.normal(0, 0.5, (T, batch, 4 * HIDDEN))
        wh = rng.normal(0, 0.05, (HIDDEN, 4 * HIDDEN))
        dh = rng.normal(0, 0.01, (T, batch, HIDDEN))
        res = {}
        for mod in (kernels_numba, kernels_numpy):
            res[mod.NAME] = bench_lstm(mod, batch, args.repeats, (xzb, wh, dh))
        assert np.allclose(res["numba"][3], res["numpy"][3], atol=1e-9)
        assert np.allclose(res["numba"][4], res["numpy"][4], atol=1e-9)
        for i, label in enumerate(("lstm_forward", "lstm_backward", "lstm_states")):
            a, b = res["numba"][i], res["numpy"][i]
            print(f"{label:<28}{batch:>6}  {a * 1e3:>7.1f}ms  {b * 1e3:>7.1f}ms  {a / b:>11.2f}x")

    x = rng.uniform(0, 1, (4000, 5))
    y = rng.integers(0, N_CLASSES, 4000)
    order = np.vstack([rng.permutation(4000) for _ in range(30)]).astype(np.int64)
    res = {}
    for mod in (kernels_numba, kernels_numpy):
        res[mod.NAME] = bench_fnn(mod, max(args.repeats // 2, 1), (x, y, order))
    assert np.allclose(res["numba"][1], res["numpy"][1], atol=1e-9)
    a, b = res["numba"][0], res["numpy"][0]
    print(f"{'fnn_train (30 epochs)':<28}{'4000':>6}  {a * 1e3:>7.1f}ms  {b * 1e3:>7.1f}ms  {a / b:>11.2f}x")


if __name__ == "__main__":
    main()
