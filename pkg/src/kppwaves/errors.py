"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command-line front end:
1 for bad input, 2 for proven or declared nonexistence of a travelling
wave, 3 for numerical failure.
"""


class KPPWavesError(Exception):
    exit_code = 3


# input problems -----------------------------------------------------------

class InputError(KPPWavesError):
    exit_code = 1


class ConfigError(InputError):
    """Malformed configuration text, with a 1-based line and column."""

    def __init__(self, message, line=None, column=None, source=None):
        self.line = line
        self.column = column
        self.source = source
        where = ""
        if line is not None:
            where = f"line {line}, column {column if column is not None else 1}: "
        if source:
            where = f"{source}: {where}"
        super().__init__(where + message)


class ExpressionError(InputError):
    """Bad arithmetic expression; ``column`` is 1-based within the expression."""

    def __init__(self, message, column=None):
        self.column = column
        super().__init__(message if column is None else f"column {column}: {message}")


class SpecViolation(InputError):
    pass


class ExponentMismatch(InputError):
    pass


class OutOfDomain(InputError):
    pass


class InvalidExponent(InputError):
    pass


class NonpositiveSpeed(InputError):
    pass


# nonexistence ---------------------------------------------------------------

class NoTravellingWave(KPPWavesError):
    exit_code = 2


class SpeedBelowCritical(KPPWavesError):
    exit_code = 2

    def __init__(self, c, c_star):
        self.c = c
        self.c_star = c_star
        super().__init__(f"speed c={c:.10g} is below the critical speed c*={c_star:.10g}")


# numerical failures ------------------------------------------------------

class StepFailure(KPPWavesError):
    pass


class BracketFailure(KPPWavesError):
    pass


class NotASolution(KPPWavesError):
    pass


class QuadratureDivergenceUndetermined(KPPWavesError):
    pass


class InsufficientSupport(KPPWavesError):
    pass


class InsufficientSamples(KPPWavesError):
    pass


class CFLViolation(KPPWavesError):
    pass


class BlowUp(KPPWavesError):
    pass


class FrontLost(KPPWavesError):
    pass
