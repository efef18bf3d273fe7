"""Exception hierarchy shared by all modules."""


class HamThermoError(Exception):
    """Base class for library errors."""


class DomainError(HamThermoError, ValueError):
    """A coordinate lies outside the domain of a potential or Hamiltonian."""

    def __init__(self, message: str, coordinate: str | None = None):
        super().__init__(message)
        self.coordinate = coordinate


class ChartMismatchError(HamThermoError, ValueError):
    """Two objects living on different charts (or of different dimension) were mixed."""


class NonFiniteDerivativeError(HamThermoError, ArithmeticError):
    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index


class RegularityError(HamThermoError, ArithmeticError):
    """The Hessian block required by a Legendre transform is singular."""

    def __init__(self, message: str, indicator: float = 0.0, sample: int | None = None):
        super().__init__(message)
        self.indicator = indicator
        self.sample = sample


class ConvergenceError(HamThermoError, ArithmeticError):
    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class StepError(HamThermoError, RuntimeError):
    """An integrator step failed; carries the step index and the last good sample."""

    def __init__(self, message: str, step: int, last_good=None, trajectory=None):
        super().__init__(message)
        self.step = step
        self.last_good = last_good
        self.trajectory = trajectory


class ConfigError(HamThermoError, ValueError):
    def __init__(self, message: str, field: str | None = None):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field
