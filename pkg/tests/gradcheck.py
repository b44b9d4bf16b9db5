"""Finite-difference gradient checking helpers shared by the test suite."""

import numpy as np

FD_STEP = 1e-5


def numeric_gradient(loss_fn, tensor, h: float = FD_STEP) -> np.ndarray:
    """Central finite differences of ``loss_fn()`` w.r.t. every entry of
    ``tensor`` (perturbed in place; restored afterwards)."""
    flat = tensor.data.reshape(-1)
    grad = np.zeros_like(flat)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        f_plus = loss_fn()
        flat[i] = orig - h
        f_minus = loss_fn()
        flat[i] = orig
        grad[i] = (f_plus - f_minus) / (2.0 * h)
    return grad.reshape(tensor.data.shape)


def max_rel_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Worst-entry relative error; entries tiny on both sides compare by
    an absolute 1e-8 window instead (relative error is meaningless there)."""
    diff = np.abs(analytic - numeric)
    mag = np.maximum(np.abs(analytic), np.abs(numeric))
    rel = np.where(mag > 1e-6, diff / np.maximum(mag, 1e-300),
                   np.where(diff < 1e-8, 0.0, 1.0))
    return float(rel.max())
