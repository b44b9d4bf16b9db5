"""Pure-numpy recurrent kernels (fallback backend).

Gate layout in the packed 4H axis is (input, forget, cell, output);
the forget slice of the bias is the one initialized to 1.0 upstream.
"""

import numpy as np


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def lstm_forward(x, wx, wh, b):
    """Run an LSTM over ``x`` [T, Din] from a zero initial state.

    Returns (hs, cs, ig, fg, gg, og), each [T, H]: the hidden states plus
    the per-step cell states and gate activations needed by the backward
    kernel.
    """
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
        a = x[t] @ wx + h @ wh + b
        i = _sigmoid(a[:H])
        f = _sigmoid(a[H:2 * H])
        g = np.tanh(a[2 * H:3 * H])
        o = _sigmoid(a[3 * H:])
        c = f * c + i * g
        h = o * np.tanh(c)
        ig[t] = i
        fg[t] = f
        gg[t] = g
        og[t] = o
        cs[t] = c
        hs[t] = h
    return hs, cs, ig, fg, gg, og


def lstm_backward(dhs, x, wx, wh, hs, cs, ig, fg, gg, og):
    """Backpropagate through time given d(loss)/d(hidden states) [T, H].

    Returns (dx, dwx, dwh, db) matching the forward input shapes
    (db is 1-D of length 4H).
    """
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
        dh = dhs[t] + dh_next
        tc = np.tanh(cs[t])
        dc = dc_next + dh * og[t] * (1.0 - tc * tc)
        c_prev = cs[t - 1] if t > 0 else np.zeros(H, x.dtype)
        h_prev = hs[t - 1] if t > 0 else np.zeros(H, x.dtype)
        i, f, g, o = ig[t], fg[t], gg[t], og[t]
        da[:H] = dc * g * i * (1.0 - i)
        da[H:2 * H] = dc * c_prev * f * (1.0 - f)
        da[2 * H:3 * H] = dc * i * (1.0 - g * g)
        da[3 * H:] = dh * tc * o * (1.0 - o)
        dwx += np.outer(x[t], da)
        dwh += np.outer(h_prev, da)
        db += da
        dx[t] = da @ wxT
        dh_next = da @ whT
        dc_next = dc * f
    return dx, dwx, dwh, db
