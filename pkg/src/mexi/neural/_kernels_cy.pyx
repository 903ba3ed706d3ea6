# Compiled twins of the numpy kernels in _kernels_py.  Same contracts,
# same shapes, same tie-breaking; float64 only.

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, tanh

cnp.import_array()


def conv2d_forward(double[:, :, ::1] x, double[:, :, :, ::1] w, double[::1] b):
    cdef Py_ssize_t c_out = w.shape[0]
    cdef Py_ssize_t c_in = w.shape[1]
    cdef Py_ssize_t h_out = x.shape[1] - 2
    cdef Py_ssize_t w_out = x.shape[2] - 2
    y_arr = np.empty((c_out, h_out, w_out))
    cdef double[:, :, ::1] y = y_arr
    cdef Py_ssize_t co, ci, row, col, ky, kx
    cdef double acc
    for co in range(c_out):
        for row in range(h_out):
            for col in range(w_out):
                acc = b[co]
                for ci in range(c_in):
                    for ky in range(3):
                        for kx in range(3):
                            acc += w[co, ci, ky, kx] * x[ci, row + ky, col + kx]
                y[co, row, col] = acc
    return y_arr


def conv2d_backward(double[:, :, ::1] x, double[:, :, :, ::1] w, double[:, :, ::1] dy):
    cdef Py_ssize_t c_out = w.shape[0]
    cdef Py_ssize_t c_in = w.shape[1]
    cdef Py_ssize_t h_out = dy.shape[1]
    cdef Py_ssize_t w_out = dy.shape[2]
    dx_arr = np.zeros((x.shape[0], x.shape[1], x.shape[2]))
    dw_arr = np.zeros((c_out, c_in, 3, 3))
    db_arr = np.zeros(c_out)
    cdef double[:, :, ::1] dx = dx_arr
    cdef double[:, :, :, ::1] dw = dw_arr
    cdef double[::1] db = db_arr
    cdef Py_ssize_t co, ci, row, col, ky, kx
    cdef double g
    for co in range(c_out):
        for row in range(h_out):
            for col in range(w_out):
                g = dy[co, row, col]
                db[co] += g
                for ci in range(c_in):
                    for ky in range(3):
                        for kx in range(3):
                            dw[co, ci, ky, kx] += g * x[ci, row + ky, col + kx]
                            dx[ci, row + ky, col + kx] += g * w[co, ci, ky, kx]
    return dx_arr, dw_arr, db_arr


def maxpool2_forward(double[:, :, ::1] x):
    cdef Py_ssize_t c = x.shape[0]
    cdef Py_ssize_t h = x.shape[1]
    cdef Py_ssize_t w = x.shape[2]
    cdef Py_ssize_t h2 = h // 2
    cdef Py_ssize_t w2 = w // 2
    y_arr = np.empty((c, h2, w2))
    idx_arr = np.empty((c, h2, w2), dtype=np.int64)
    cdef double[:, :, ::1] y = y_arr
    cdef cnp.int64_t[:, :, ::1] idx = idx_arr
    cdef Py_ssize_t ch, row, col, dy_, dx_, best_r, best_c
    cdef double best, v
    for ch in range(c):
        for row in range(h2):
            for col in range(w2):
                best = x[ch, 2 * row, 2 * col]
                best_r = 2 * row
                best_c = 2 * col
                for dy_ in range(2):
                    for dx_ in range(2):
                        v = x[ch, 2 * row + dy_, 2 * col + dx_]
                        if v > best:
                            best = v
                            best_r = 2 * row + dy_
                            best_c = 2 * col + dx_
                y[ch, row, col] = best
                idx[ch, row, col] = best_r * w + best_c
    return y_arr, idx_arr


def maxpool2_backward(double[:, :, ::1] dy, cnp.int64_t[:, :, ::1] idx, Py_ssize_t h, Py_ssize_t w):
    cdef Py_ssize_t c = dy.shape[0]
    cdef Py_ssize_t h2 = dy.shape[1]
    cdef Py_ssize_t w2 = dy.shape[2]
    dx_arr = np.zeros((c, h, w))
    cdef double[:, :, ::1] dx = dx_arr
    cdef Py_ssize_t ch, row, col, flat
    for ch in range(c):
        for row in range(h2):
            for col in range(w2):
                flat = idx[ch, row, col]
                dx[ch, flat // w, flat % w] += dy[ch, row, col]
    return dx_arr


cdef inline double _sigmoid(double z) noexcept:
    return 1.0 / (1.0 + exp(-z))


def lstm_forward(double[:, ::1] x, double[:, ::1] wx, double[:, ::1] wh, double[::1] b):
    cdef Py_ssize_t t_len = x.shape[0]
    cdef Py_ssize_t n_in = x.shape[1]
    cdef Py_ssize_t hid = wh.shape[1]
    h_arr = np.zeros((t_len, hid))
    c_arr = np.zeros((t_len, hid))
    g_arr = np.zeros((t_len, 4 * hid))
    cdef double[:, ::1] h = h_arr
    cdef double[:, ::1] c = c_arr
    cdef double[:, ::1] gates = g_arr
    z_arr = np.zeros(4 * hid)
    cdef double[::1] z = z_arr
    cdef Py_ssize_t t, j, k
    cdef double acc, i_g, f_g, g_g, o_g, c_new
    for t in range(t_len):
        for j in range(4 * hid):
            acc = b[j]
            for k in range(n_in):
                acc += wx[j, k] * x[t, k]
            if t > 0:
                for k in range(hid):
                    acc += wh[j, k] * h[t - 1, k]
            z[j] = acc
        for j in range(hid):
            i_g = _sigmoid(z[j])
            f_g = _sigmoid(z[hid + j])
            g_g = tanh(z[2 * hid + j])
            o_g = _sigmoid(z[3 * hid + j])
            if t > 0:
                c_new = f_g * c[t - 1, j] + i_g * g_g
            else:
                c_new = i_g * g_g
            c[t, j] = c_new
            h[t, j] = o_g * tanh(c_new)
            gates[t, j] = i_g
            gates[t, hid + j] = f_g
            gates[t, 2 * hid + j] = g_g
            gates[t, 3 * hid + j] = o_g
    return h_arr, c_arr, g_arr


def lstm_backward(double[:, ::1] x, double[:, ::1] wx, double[:, ::1] wh,
                  double[:, ::1] h, double[:, ::1] c, double[:, ::1] gates,
                  double[::1] dh_last):
    cdef Py_ssize_t t_len = h.shape[0]
    cdef Py_ssize_t hid = h.shape[1]
    cdef Py_ssize_t n_in = x.shape[1]
    dwx_arr = np.zeros((4 * hid, n_in))
    dwh_arr = np.zeros((4 * hid, hid))
    db_arr = np.zeros(4 * hid)
    cdef double[:, ::1] dwx = dwx_arr
    cdef double[:, ::1] dwh = dwh_arr
    cdef double[::1] db = db_arr
    dh_arr = np.array(dh_last, copy=True)
    dc_arr = np.zeros(hid)
    dz_arr = np.zeros(4 * hid)
    dh_next_arr = np.zeros(hid)
    cdef double[::1] dh = dh_arr
    cdef double[::1] dc = dc_arr
    cdef double[::1] dz = dz_arr
    cdef double[::1] dh_prev = dh_next_arr
    cdef Py_ssize_t t, j, k
    cdef double i_g, f_g, g_g, o_g, tanh_c, c_prev, acc
    for t in range(t_len - 1, -1, -1):
        for j in range(hid):
            i_g = gates[t, j]
            f_g = gates[t, hid + j]
            g_g = gates[t, 2 * hid + j]
            o_g = gates[t, 3 * hid + j]
            c_prev = c[t - 1, j] if t > 0 else 0.0
            tanh_c = tanh(c[t, j])
            dc[j] = dc[j] + dh[j] * o_g * (1.0 - tanh_c * tanh_c)
            dz[j] = dc[j] * g_g * i_g * (1.0 - i_g)
            dz[hid + j] = dc[j] * c_prev * f_g * (1.0 - f_g)
            dz[2 * hid + j] = dc[j] * i_g * (1.0 - g_g * g_g)
            dz[3 * hid + j] = dh[j] * tanh_c * o_g * (1.0 - o_g)
        for j in range(4 * hid):
            db[j] += dz[j]
            for k in range(n_in):
                dwx[j, k] += dz[j] * x[t, k]
            if t > 0:
                for k in range(hid):
                    dwh[j, k] += dz[j] * h[t - 1, k]
        for j in range(hid):
            acc = 0.0
            for k in range(4 * hid):
                acc += wh[k, j] * dz[k]
            dh_prev[j] = acc
        for j in range(hid):
            dh[j] = dh_prev[j]
            dc[j] = dc[j] * gates[t, hid + j]
    return dwx_arr, dwh_arr, db_arr
