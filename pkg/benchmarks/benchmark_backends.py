"""Compare the compiled kernels against the pure-numpy fallback.

Usage: python3 benchmarks/benchmark_backends.py [--repeats N]

Times the six hot kernels (LSTM forward/backward over a 50-step decision
sequence, 3x3 convolution forward/backward and 2x2 max-pool on the
default 64x48 heat-map resolution) on both backends and reports the
speedup plus the maximum numerical divergence.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from mexi.neural import _kernels_py

try:
    from mexi.neural import _kernels_cy
except ImportError:
    _kernels_cy = None


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def max_diff(a, b):
    if isinstance(a, tuple):
        return max(max_diff(x, y) for x, y in zip(a, b))
    return float(np.max(np.abs(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64))))


def cases():
    rng = np.random.default_rng(0)
    # sequence net shapes: 50 decisions, hidden 64
    t_len, hid = 50, 64
    x = rng.normal(size=(t_len, 3))
    wx = rng.normal(size=(4 * hid, 3)) * 0.2
    wh = rng.normal(size=(4 * hid, hid)) * 0.2
    b = rng.normal(size=4 * hid) * 0.1
    h, c, gates = _kernels_py.lstm_forward(x, wx, wh, b)
    dh = rng.normal(size=hid)

    # spatial net shapes: 64x48 heat map, two conv blocks
    img = rng.uniform(size=(1, 48, 64))
    wc1 = rng.normal(size=(8, 1, 3, 3)) * 0.3
    bc1 = rng.normal(size=8) * 0.1
    act1 = np.maximum(_kernels_py.conv2d_forward(img, wc1, bc1), 0)
    dy1 = rng.normal(size=act1.shape)
    pooled, idx = _kernels_py.maxpool2_forward(act1)
    dpool = rng.normal(size=pooled.shape)

    return [
        ("lstm_forward", lambda k: k.lstm_forward(x, wx, wh, b)),
        ("lstm_backward", lambda k: k.lstm_backward(x, wx, wh, h, c, gates, dh)),
        ("conv2d_forward", lambda k: k.conv2d_forward(img, wc1, bc1)),
        ("conv2d_backward", lambda k: k.conv2d_backward(img, wc1, dy1)),
        ("maxpool2_forward", lambda k: k.maxpool2_forward(act1)),
        ("maxpool2_backward", lambda k: k.maxpool2_backward(dpool, idx, 46, 62)),
    ]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=50)
    args = parser.parse_args()

    if _kernels_cy is None:
        print("compiled extension not built; nothing to compare")
        return

    print(f"{'kernel':<20} {'python':>10} {'cython':>10} {'speedup':>8} {'max |diff|':>12}")
    for name, call in cases():
        t_py, out_py = timeit(lambda: call(_kernels_py), args.repeats)
        t_cy, out_cy = timeit(lambda: call(_kernels_cy), args.repeats)
        diff = max_diff(out_py, out_cy)
        print(f"{name:<20} {t_py * 1e6:>8.1f}us {t_cy * 1e6:>8.1f}us {t_py / t_cy:>7.2f}x {diff:>12.2e}")


if __name__ == "__main__":
    main()
