"""Minimal dense-tensor arithmetic with reverse-mode differentiation."""

from .adam import AdamState, adam_step, init_adam
from .checkpoint import load_checkpoint, save_checkpoint
from .tensor import (
    Tape,
    Tensor,
    default_dtype,
    finite_checks_enabled,
    parameter,
    set_precision,
    zeros_parameter,
)

__all__ = [
    "AdamState",
    "Tape",
    "Tensor",
    "adam_step",
    "default_dtype",
    "finite_checks_enabled",
    "init_adam",
    "load_checkpoint",
    "parameter",
    "save_checkpoint",
    "set_precision",
    "zeros_parameter",
]
