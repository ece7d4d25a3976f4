"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration; ``key`` is the dotted config path."""

    def __init__(self, key: str, reason: str):
        self.key = key
        self.reason = reason
        super().__init__(f"{key}: {reason}")


class DivergenceError(ArithmeticError):
    def __init__(self, step: int, path: int | None = None):
        self.step = step
        self.path = path
        where = f" (path {path})" if path is not None else ""
        super().__init__(f"non-finite field at step {step}{where}")


class ConvergenceError(RuntimeError):
    def __init__(self, steps: int, residual: float):
        self.steps = steps
        self.residual = residual
        super().__init__(f"no stationary state after {steps} steps, residual {residual:.3e}")


class EnsembleError(RuntimeError):
    pass
