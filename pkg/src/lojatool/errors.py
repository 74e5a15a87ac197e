"""Exception hierarchy.

``InputError`` covers bad arguments and violated preconditions the caller can
fix; ``NumericalFailure`` covers solvers that did not converge.  The CLI maps
them to exit codes 2 and 3.
"""


class LojaError(Exception):
    code = "error"


class InputError(LojaError, ValueError):
    code = "input_error"


class NumericalFailure(LojaError, RuntimeError):
    code = "numerical_failure"


class NotCritical(InputError):
    code = "NotCritical"


class EmptyKernel(InputError):
    code = "EmptyKernel"


class SignatureMismatch(InputError):
    code = "SignatureMismatch"


class NoConvergence(NumericalFailure):
    code = "NoConvergence"


class LeftTrustRegion(NumericalFailure):
    code = "LeftTrustRegion"


class SingularA(NumericalFailure):
    code = "SingularA"


class OutsideNeighborhood(NumericalFailure):
    code = "OutsideNeighborhood"


class InversionFailure(NumericalFailure):
    code = "InversionFailure"


class AllSamplesVanish(NumericalFailure):
    code = "AllSamplesVanish"


class TooFewBins(NumericalFailure):
    code = "TooFewBins"


class StepFailure(NumericalFailure):
    code = "StepFailure"


class InsufficientDecay(NumericalFailure):
    code = "InsufficientDecay"


class NotConverged(NumericalFailure):
    code = "NotConverged"
