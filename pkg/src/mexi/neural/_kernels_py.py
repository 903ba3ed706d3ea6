"""Pure-numpy kernels for the sequence and spatial nets.

These are the fallback twins of the compiled kernels in _kernels_cy;
both backends must produce bitwise-comparable float64 results.

Shapes:
  conv2d:   x (C_in, H, W), w (C_out, C_in, 3, 3), b (C_out,)
  maxpool2: non-overlapping 2x2, floor-cropped
  lstm:     x (T, I), wx (4H, I), wh (4H, H), b (4H,), gate order i,f,g,o
"""

from __future__ import annotations

import numpy as np


def conv2d_forward(x, w, b):
    c_out = w.shape[0]
    h_out = x.shape[1] - 2
    w_out = x.shape[2] - 2
    y = np.empty((c_out, h_out, w_out))
    y[:] = b[:, None, None]
    for ky in range(3):
        for kx in range(3):
            y += np.tensordot(w[:, :, ky, kx], x[:, ky : ky + h_out, kx : kx + w_out], axes=1)
    return y


def conv2d_backward(x, w, dy):
    h_out, w_out = dy.shape[1], dy.shape[2]
    dx = np.zeros_like(x)
    dw = np.zeros_like(w)
    db = dy.sum(axis=(1, 2))
    for ky in range(3):
        for kx in range(3):
            patch = x[:, ky : ky + h_out, kx : kx + w_out]
            dw[:, :, ky, kx] = np.tensordot(dy, patch, axes=([1, 2], [1, 2]))
            dx[:, ky : ky + h_out, kx : kx + w_out] += np.tensordot(
                w[:, :, ky, kx].T, dy, axes=1
            )
    return dx, dw, db


def maxpool2_forward(x):
    c, h, w = x.shape
    h2, w2 = h // 2, w // 2
    cropped = x[:, : h2 * 2, : w2 * 2]
    blocks = cropped.reshape(c, h2, 2, w2, 2).transpose(0, 1, 3, 2, 4).reshape(c, h2, w2, 4)
    within = blocks.argmax(axis=3)
    y = np.take_along_axis(blocks, within[..., None], axis=3)[..., 0]
    # flat index into the (h, w) plane of each channel
    rows = np.arange(h2)[None, :, None] * 2 + within // 2
    cols = np.arange(w2)[None, None, :] * 2 + within % 2
    idx = rows * w + cols
    return y, idx.astype(np.int64)


def maxpool2_backward(dy, idx, h, w):
    c = dy.shape[0]
    dx = np.zeros((c, h * w))
    for ch in range(c):
        np.add.at(dx[ch], idx[ch].ravel(), dy[ch].ravel())
    return dx.reshape(c, h, w)


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def lstm_forward(x, wx, wh, b):
    t_len = x.shape[0]
    hid = wh.shape[1]
    h = np.zeros((t_len, hid))
    c = np.zeros((t_len, hid))
    gates = np.zeros((t_len, 4 * hid))
    h_prev = np.zeros(hid)
    c_prev = np.zeros(hid)
    for t in range(t_len):
        z = wx @ x[t] + wh @ h_prev + b
        i = _sigmoid(z[:hid])
        f = _sigmoid(z[hid : 2 * hid])
        g = np.tanh(z[2 * hid : 3 * hid])
        o = _sigmoid(z[3 * hid :])
        c_prev = f * c_prev + i * g
        h_prev = o * np.tanh(c_prev)
        h[t] = h_prev
        c[t] = c_prev
        gates[t] = np.concatenate([i, f, g, o])
    return h, c, gates


def lstm_backward(x, wx, wh, h, c, gates, dh_last):
    t_len, hid = h.shape
    dwx = np.zeros_like(wx)
    dwh = np.zeros_like(wh)
    db = np.zeros_like(wx[:, 0])
    dh = dh_last.copy()
    dc = np.zeros(hid)
    for t in range(t_len - 1, -1, -1):
        i = gates[t, :hid]
        f = gates[t, hid : 2 * hid]
        g = gates[t, 2 * hid : 3 * hid]
        o = gates[t, 3 * hid :]
        c_prev = c[t - 1] if t > 0 else np.zeros(hid)
        h_prev = h[t - 1] if t > 0 else np.zeros(hid)
        tanh_c = np.tanh(c[t])
        dc = dc + dh * o * (1.0 - tanh_c**2)
        dz = np.concatenate(
            [
                dc * g * i * (1.0 - i),
                dc * c_prev * f * (1.0 - f),
                dc * i * (1.0 - g**2),
                dh * tanh_c * o * (1.0 - o),
            ]
        )
        dwx += np.outer(dz, x[t])
        dwh += np.outer(dz, h_prev)
        db += dz
        dh = wh.T @ dz
        dc = dc * f
    return dwx, dwh, db
