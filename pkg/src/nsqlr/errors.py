"""Exception hierarchy. The CLI maps each branch to an exit status."""


class NsqlrError(Exception):
    pass


class ConfigError(NsqlrError, ValueError):
    """Bad configuration: unknown family, missing key, malformed value."""


class DataError(NsqlrError, ValueError):
    """Malformed or inconsistent observation data."""


class NumericalError(NsqlrError, ArithmeticError):
    """A numerical procedure could not produce a trustworthy result."""


class SimulationError(NumericalError):
    pass


class NoFeasiblePointError(NumericalError):
    pass


class OptimizerQualityError(NumericalError):
    pass


class DegenerateVarianceError(NumericalError):
    pass


class ExperimentQualityError(NumericalError):
    pass


class InfeasibleParameterError(NumericalError):
    """The parameter makes the increment covariance singular or indefinite."""
