"""Differentiable operations over :class:`Tensor`.

Each op computes its forward value with numpy (or a kernel backend) and,
when a tape is active and gradients are needed, records a closure that
accumulates input gradients from the output gradient.  With no active
tape the ops are plain forward arithmetic, which is the inference path.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError
from . import kernels
from .tensor import Tape, Tensor, check_finite


def _result(data: np.ndarray, op_name: str, *inputs: Tensor) -> tuple[Tensor, "Tape | None"]:
    out = Tensor(data)
    out.requires_grad = any(t.requires_grad for t in inputs)
    check_finite(out.data, op_name)
    tape = Tape.active() if out.requires_grad else None
    return out, tape


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: {a.shape} @ {b.shape}")
    out, tape = _result(a.data @ b.data, "matmul", a, b)
    if tape is not None:
        def backward():
            g = out.grad
            if g is None:
                return
            if a.requires_grad:
                a.ensure_grad()
                a.grad += g @ b.data.T
            if b.requires_grad:
                b.ensure_grad()
                b.grad += a.data.T @ g
        tape.record(backward)
    return out


def transpose(a: Tensor) -> Tensor:
    out, tape = _result(a.data.T.copy(), "transpose", a)
    if tape is not None:
        def backward():
            if out.grad is not None and a.requires_grad:
                a.ensure_grad()
                a.grad += out.grad.T
        tape.record(backward)
    return out


def _add_reduce(grad: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Reduce an output gradient back to a broadcast operand's shape."""
    if grad.shape == shape:
        return grad
    if shape == (1, 1):
        return grad.sum().reshape(1, 1)
    if shape[0] == 1 and shape[1] == grad.shape[1]:
        return grad.sum(axis=0, keepdims=True)
    raise ShapeError(f"cannot reduce gradient {grad.shape} to {shape}")


def _broadcastable(sa: tuple[int, int], sb: tuple[int, int]) -> bool:
    if sa == sb:
        return True
    for small, big in ((sa, sb), (sb, sa)):
        if small == (1, 1):
            return True
        if small[0] == 1 and small[1] == big[1]:
            return True
    return False


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum; ``b`` or ``a`` may be [1,1] or a [1,d] row to broadcast."""
    if not _broadcastable(a.shape, b.shape):
        raise ShapeError(f"add: {a.shape} + {b.shape}")
    out, tape = _result(a.data + b.data, "add", a, b)
    if tape is not None:
        def backward():
            g = out.grad
            if g is None:
                return
            if a.requires_grad:
                a.ensure_grad()
                a.grad += _add_reduce(g, a.shape)
            if b.requires_grad:
                b.ensure_grad()
                b.grad += _add_reduce(g, b.shape)
        tape.record(backward)
    return out


def add_const(a: Tensor, c: float) -> Tensor:
    out, tape = _result(a.data + c, "add_const", a)
    if tape is not None:
        def backward():
            if out.grad is not None and a.requires_grad:
                a.ensure_grad()
                a.grad += out.grad
        tape.record(backward)
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product; [1,1] and [1,d] operands broadcast."""
    if not _broadcastable(a.shape, b.shape):
        raise ShapeError(f"mul: {a.shape} * {b.shape}")
    out, tape = _result(a.data * b.data, "mul", a, b)
    if tape is not None:
        def backward():
            g = out.grad
            if g is None:
                return
            if a.requires_grad:
                a.ensure_grad()
                a.grad += _add_reduce(g * b.data, a.shape)
            if b.requires_grad:
                b.ensure_grad()
                b.grad += _add_reduce(g * a.data, b.shape)
        tape.record(backward)
    return out


def scale(a: Tensor, c: float) -> Tensor:
    out, tape = _result(a.data * c, "scale", a)
    if tape is not None:
        def backward():
            if out.grad is not None and a.requires_grad:
                a.ensure_grad()
                a.grad += out.grad * c
        tape.record(backward)
    return out


def tanh(a: Tensor) -> Tensor:
    out, tape = _result(np.tanh(a.data), "tanh", a)
    if tape is not None:
        y = out.data
        def backward():
            if out.grad is not None and a.requires_grad:
                a.ensure_grad()
                a.grad += out.grad * (1.0 - y * y)
        tape.record(backward)
    return out


def sigmoid(a: Tensor) -> Tensor:
    out, tape = _result(1.0 / (1.0 + np.exp(-a.data)), "sigmoid", a)
    if tape is not None:
        y = out.data
        def backward():
            if out.grad is not None and a.requires_grad:
                a.ensure_grad()
                a.grad += out.grad * y * (1.0 - y)
        tape.record(backward)
    return out


def log(a: Tensor) -> Tensor:
    out, tape = _result(np.log(a.data), "log", a)
    if tape is not None:
        def backward():
            if out.grad is not None and a.requires_grad:
                a.ensure_grad()
                a.grad += out.grad / a.data
        tape.record(backward)
    return out


def clamp_min(a: Tensor, floor: float) -> Tensor:
    """max(a, floor); gradient passes only where the input was kept."""
    out, tape = _result(np.maximum(a.data, floor), "clamp_min", a)
    if tape is not None:
        mask = a.data >= floor
        def backward():
            if out.grad is not None and a.requires_grad:
                a.ensure_grad()
                a.grad += out.grad * mask
        tape.record(backward)
    return out


def concat_rows(parts: list[Tensor]) -> Tensor:
    if not parts:
        raise ShapeError("concat_rows: empty input list")
    width = parts[0].shape[1]
    for p in parts:
        if p.shape[1] != width:
            raise ShapeError(f"concat_rows: widths differ ({[p.shape for p in parts]})")
    out, tape = _result(np.concatenate([p.data for p in parts], axis=0), "concat_rows", *parts)
    if tape is not None:
        offsets = np.cumsum([0] + [p.shape[0] for p in parts])
        def backward():
            g = out.grad
            if g is None:
                return
            for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
                if p.requires_grad:
                    p.ensure_grad()
                    p.grad += g[lo:hi]
        tape.record(backward)
    return out


def rows(a: Tensor, ids) -> Tensor:
    """Row selection / embedding lookup: returns a.data[ids] as [len(ids), d]."""
    idx = np.asarray(ids, dtype=np.intp)
    if idx.ndim != 1 or idx.size == 0:
        raise ShapeError(f"rows: ids must be a non-empty 1-D index list, got shape {idx.shape}")
    if idx.min() < 0 or idx.max() >= a.shape[0]:
        raise ShapeError(f"rows: ids out of range [0, {a.shape[0]}) for tensor {a.shape}")
    out, tape = _result(a.data[idx], "rows", a)
    if tape is not None:
        def backward():
            if out.grad is not None and a.requires_grad:
                a.ensure_grad()
                np.add.at(a.grad, idx, out.grad)
        tape.record(backward)
    return out


def softmax(a: Tensor) -> Tensor:
    """Softmax over all entries (the tensor is treated as one distribution).

    The row max is subtracted before exponentiation so large scores
    cannot overflow.
    """
    flat = a.data.reshape(-1)
    shifted = flat - flat.max()
    e = np.exp(shifted)
    p = e / e.sum()
    out, tape = _result(p.reshape(a.shape), "softmax", a)
    if tape is not None:
        pd = out.data
        def backward():
            g = out.grad
            if g is None or not a.requires_grad:
                return
            a.ensure_grad()
            a.grad += pd * (g - (g * pd).sum())
        tape.record(backward)
    return out


def sum_all(a: Tensor) -> Tensor:
    out, tape = _result(a.data.sum().reshape(1, 1), "sum", a)
    if tape is not None:
        def backward():
            if out.grad is not None and a.requires_grad:
                a.ensure_grad()
                a.grad += out.grad[0, 0]
        tape.record(backward)
    return out


def mean_all(a: Tensor) -> Tensor:
    n = a.data.size
    out, tape = _result(a.data.mean().reshape(1, 1), "mean", a)
    if tape is not None:
        def backward():
            if out.grad is not None and a.requires_grad:
                a.ensure_grad()
                a.grad += out.grad[0, 0] / n
        tape.record(backward)
    return out


def std_pop(a: Tensor) -> Tensor:
    """Population standard deviation over all entries, as a [1,1] tensor.

    d(std)/dx_i = (x_i - mean) / (n * std); defined as 0 when std is 0
    (subgradient at the non-differentiable point).
    """
    n = a.data.size
    mean = a.data.mean()
    centered = a.data - mean
    sd = float(np.sqrt((centered * centered).mean()))
    out, tape = _result(np.array([[sd]]), "std", a)
    if tape is not None:
        def backward():
            if out.grad is None or not a.requires_grad:
                return
            if sd > 0.0:
                a.ensure_grad()
                a.grad += out.grad[0, 0] * centered / (n * sd)
        tape.record(backward)
    return out


def lstm_seq(x: Tensor, wx: Tensor, wh: Tensor, b: Tensor) -> Tensor:
    """LSTM over the rows of ``x`` [T, Din] from a zero state; returns all
    hidden states [T, H].

    ``wx`` is [Din, 4H], ``wh`` [H, 4H], ``b`` [1, 4H]; the heavy loops run
    in the active kernel backend.
    """
    H = wh.shape[0]
    if wx.shape[1] != 4 * H or b.shape != (1, 4 * H) or x.shape[1] != wx.shape[0]:
        raise ShapeError(
            f"lstm_seq: x{x.shape} wx{wx.shape} wh{wh.shape} b{b.shape} are not conformable"
        )
    hs, cs, ig, fg, gg, og = kernels.lstm_forward(x.data, wx.data, wh.data, b.data[0])
    out, tape = _result(hs, "lstm_seq", x, wx, wh, b)
    if tape is not None:
        def backward():
            g = out.grad
            if g is None:
                return
            dx, dwx, dwh, db = kernels.lstm_backward(
                g, x.data, wx.data, wh.data, hs, cs, ig, fg, gg, og
            )
            if x.requires_grad:
                x.ensure_grad()
                x.grad += dx
            if wx.requires_grad:
                wx.ensure_grad()
                wx.grad += dwx
            if wh.requires_grad:
                wh.ensure_grad()
                wh.grad += dwh
            if b.requires_grad:
                b.ensure_grad()
                b.grad += db.reshape(1, -1)
        tape.record(backward)
    return out
