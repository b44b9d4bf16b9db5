"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Operands have non-conformable shapes for the requested operation."""


class NumericError(ArithmeticError):
    """A computation produced NaN or Inf while finite checks are enabled."""


class ContractError(ValueError):
    """A caller violated a documented precondition."""


class TrainingDiverged(RuntimeError):
    """Training loss became non-finite."""
