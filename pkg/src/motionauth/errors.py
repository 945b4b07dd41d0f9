"""Exception hierarchy. ``exit_code`` is what the CLI returns for each family."""


class MotionAuthError(Exception):
    exit_code = 5


class ConfigurationError(MotionAuthError, ValueError):
    exit_code = 2


class ShapeError(MotionAuthError, ValueError):
    exit_code = 2


class InvalidMaskError(ShapeError):
    pass


class DomainError(MotionAuthError, ValueError):
    exit_code = 2


class DataError(MotionAuthError):
    exit_code = 3


class EvaluationError(MotionAuthError, ValueError):
    exit_code = 3


class NonFiniteError(MotionAuthError, FloatingPointError):
    exit_code = 4


class NonFiniteGradientError(NonFiniteError):
    def __init__(self, param_name, step):
        self.param_name = param_name
        self.step = step
        super().__init__(f"non-finite gradient for parameter {param_name!r} at Adam step {step}")
