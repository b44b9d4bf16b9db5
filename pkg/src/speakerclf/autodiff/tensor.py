"""Dense 2-D tensors and the reverse-mode gradient tape.

All learned quantities live in ``Tensor`` objects.  Operations from
:mod:`speakerclf.autodiff.ops` record a backward rule on the currently
active :class:`Tape`; calling :meth:`Tape.backward` replays those rules
in reverse order, accumulating gradients into every tensor that
requires them.
"""

from __future__ import annotations

import numpy as np

from ..errors import ContractError, NumericError

_DTYPES = {"f64": np.float64, "f32": np.float32}

_default_dtype = np.float64
_check_finite = True


def set_precision(mode: str, check_finite: bool | None = None) -> None:
    """Select the global float width: "f64" (default) or "f32".

    Finite checks (NaN/Inf fail-fast) default to on for f64 and off for
    f32; pass ``check_finite`` to override.
    """
    global _default_dtype, _check_finite
    if mode not in _DTYPES:
        raise ContractError(f"unknown precision {mode!r}, expected one of {sorted(_DTYPES)}")
    _default_dtype = _DTYPES[mode]
    _check_finite = (mode == "f64") if check_finite is None else check_finite


def default_dtype() -> np.dtype:
    return np.dtype(_default_dtype)


def finite_checks_enabled() -> bool:
    return _check_finite


def check_finite(arr: np.ndarray, op_name: str) -> None:
    if _check_finite and not np.isfinite(arr).all():
        raise NumericError(f"{op_name} produced a non-finite value")


class Tensor:
    """A 2-D float array with an optional same-shape gradient buffer."""

    __slots__ = ("data", "grad", "requires_grad")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.atleast_2d(np.asarray(data, dtype=_default_dtype))
        if arr.ndim != 2:
            raise ContractError(f"tensors are 2-D, got shape {arr.shape}")
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() needs a scalar tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def ensure_grad(self) -> np.ndarray:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        return self.grad

    def zero_grad(self) -> None:
        if self.grad is not None:
            self.grad.fill(0.0)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


def parameter(rng: np.random.Generator, rows: int, cols: int, scale: float = 0.08) -> Tensor:
    """Trainable tensor initialized uniformly in [-scale, scale]."""
    data = rng.uniform(-scale, scale, size=(rows, cols))
    return Tensor(data, requires_grad=True)


def zeros_parameter(rows: int, cols: int) -> Tensor:
    return Tensor(np.zeros((rows, cols)), requires_grad=True)


class Tape:
    """Ordered record of differentiable operations (a Wengert list).

    Ops are appended in execution order, so inputs always precede the
    operations that consume them; one backward pass walks the list once
    in reverse.  Tapes are single-threaded; forward evaluation with no
    active tape performs no recording and is safe to run concurrently
    over shared immutable parameters.
    """

    _stack: list["Tape"] = []

    def __init__(self):
        self._records: list = []

    def __enter__(self) -> "Tape":
        Tape._stack.append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        Tape._stack.pop()

    @classmethod
    def active(cls) -> "Tape | None":
        return cls._stack[-1] if cls._stack else None

    def record(self, backward_fn) -> None:
        self._records.append(backward_fn)

    def __len__(self) -> int:
        return len(self._records)

    def backward(self, loss: Tensor) -> None:
        """Seed d(loss)/d(loss) = 1 and replay backward rules in reverse.

        The tape is consumed: a second backward call requires re-recording.
        """
        if loss.shape != (1, 1):
            raise ContractError(f"backward() needs a scalar loss, got shape {loss.shape}")
        if not self._records:
            raise ContractError("backward() on an empty tape")
        loss.ensure_grad()
        loss.grad.fill(1.0)
        for fn in reversed(self._records):
            fn()
        self._records.clear()
