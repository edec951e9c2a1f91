"""Exception types shared across the package."""


class ModelError(ValueError):
    """Invalid network or controller description."""


class SimConfigError(ValueError):
    """Invalid simulation configuration (step, delay, switch alignment)."""


class UnstableSystemError(RuntimeError):
    """Raised when an operation needs a stable closed loop and did not get one."""


class NumericalError(RuntimeError):
    """Internal numerical failure: eigen-solver trouble or a broken invariant."""
