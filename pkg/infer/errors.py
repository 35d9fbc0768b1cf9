from typing import Optional


class AbacusError(RuntimeError):
    """Base class for failures raised by the detector."""


class ShapeError(AbacusError, ValueError):
    """Array shapes or sizes disagree with the model dimensions."""


class ConfigError(AbacusError):
    pass


class IllConditionedError(AbacusError):
    """A precision matrix could not be factorized even after jitter escalation."""

    def __init__(self, label: str, min_eigenvalue: float, iteration: Optional[int] = None):
        self.label = label
        self.min_eigenvalue = min_eigenvalue
        self.iteration = iteration
        super().__init__(self._message())

    def _message(self) -> str:
        msg = f"{self.label} is not positive definite (min eigenvalue ~ {self.min_eigenvalue:.3e})"
        if self.iteration is not None:
            msg += f" at iteration {self.iteration}"
        return msg

    def at_iteration(self, iteration: int) -> "IllConditionedError":
        self.iteration = iteration
        self.args = (self._message(),)
        return self


class CsvFormatError(AbacusError, ValueError):
    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(f"{prefix}{message}")
