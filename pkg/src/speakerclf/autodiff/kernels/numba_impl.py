"""Numba-compiled recurrent kernels (default backend).

Mirrors :mod:`speakerclf.autodiff.kernels.numpy_impl` exactly; gate
nonlinearities use scalar math in explicit loops so float32 inputs stay
float32 under numba's promotion rules.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def lstm_forward(x, wx, wh, b):
    T = x.shape[0]
    H = wh.shape[0]
    hs = np.zeros((T, H), x.dtype)
    cs = np.zeros((T, H), x.dtype)
    ig = np.zeros((T, H), x.dtype)
    fg = np.zeros((T, H), x.dtype)
    gg = np.zeros((T, H), x.dtype)
    og = np.zeros((T, H), x.dtype)
    h = np.zeros(H, x.dtype)
    c = np.zeros(H, x.dtype)
    for t in range(T):
        a = np.dot(x[t], wx) + np.dot(h, wh) + b
        for j in range(H):
            i = 1.0 / (1.0 + math.exp(-a[j]))
            f = 1.0 / (1.0 + math.exp(-a[H + j]))
            g = math.tanh(a[2 * H + j])
            o = 1.0 / (1.0 + math.exp(-a[3 * H + j]))
            cj = f * c[j] + i * g
            c[j] = cj
            h[j] = o * math.tanh(cj)
            ig[t, j] = i
            fg[t, j] = f
            gg[t, j] = g
            og[t, j] = o
        cs[t] = c
        hs[t] = h
    return hs, cs, ig, fg, gg, og


@njit(cache=True)
def lstm_backward(dhs, x, wx, wh, hs, cs, ig, fg, gg, og):
    T = x.shape[0]
    H = wh.shape[0]
    dx = np.zeros_like(x)
    dwx = np.zeros_like(wx)
    dwh = np.zeros_like(wh)
    db = np.zeros(4 * H, x.dtype)
    wxT = np.ascontiguousarray(wx.T)
    whT = np.ascontiguousarray(wh.T)
    dh_next = np.zeros(H, x.dtype)
    dc_next = np.zeros(H, x.dtype)
    da = np.zeros(4 * H, x.dtype)
    for t in range(T - 1, -1, -1):
        for j in range(H):
            dh = dhs[t, j] + dh_next[j]
            tc = math.tanh(cs[t, j])
            dc = dc_next[j] + dh * og[t, j] * (1.0 - tc * tc)
            c_prev = cs[t - 1, j] if t > 0 else 0.0
            i = ig[t, j]
            f = fg[t, j]
            g = gg[t, j]
            o = og[t, j]
            da[j] = dc * g * i * (1.0 - i)
            da[H + j] = dc * c_prev * f * (1.0 - f)
            da[2 * H + j] = dc * i * (1.0 - g * g)
            da[3 * H + j] = dh * tc * o * (1.0 - o)
            dc_next[j] = dc * f
        for j in range(4 * H):
            db[j] += da[j]
        for j in range(x.shape[1]):
            xj = x[t, j]
            for m in range(4 * H):
                dwx[j, m] += xj * da[m]
        if t > 0:
            for j in range(H):
                hj = hs[t - 1, j]
                for m in range(4 * H):
                    dwh[j, m] += hj * da[m]
        dx[t] = np.dot(da, wxT)
        dh_next = np.dot(da, whT)
    return dx, dwx, dwh, db
