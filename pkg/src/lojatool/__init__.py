"""Critical points of real polynomials: splitting, Morse-Bott tests, gradient-inequality exponents."""

__version__ = "0.1.0"

from .errors import InputError, LojaError, NumericalFailure  # noqa: E402
from .flow import (DecayFit, FlowOptions, FlowTrajectory, check_bound, exponent_from_flow,  # noqa: E402
                   fit_decay, integrate, psi_bound)
from .lojasiewicz import (ExponentEstimate, SamplingOptions, direct_sum_extend,  # noqa: E402
                          estimate_sampling, monomial_exponent, quadratic_constant,
                          verify_inequality)
from .morse_bott import (ClassifyOptions, MorseBottVerdict, VerdictKind, blowup_check,  # noqa: E402
                         classify, kernel_split)
from .parse import PolySyntaxError, parse_poly  # noqa: E402
from .poly import Poly  # noqa: E402
from .splitting import (KernelSplit, SplitChart, SplitOptions, factor_quadratic,  # noqa: E402
                        normal_form_residual, remainder_form, solve_branch)

__all__ = [
    "ClassifyOptions", "DecayFit", "ExponentEstimate", "FlowOptions", "FlowTrajectory",
    "InputError", "KernelSplit", "LojaError", "MorseBottVerdict", "NumericalFailure", "Poly",
    "PolySyntaxError", "SamplingOptions", "SplitChart", "SplitOptions", "VerdictKind",
    "blowup_check", "check_bound", "classify", "direct_sum_extend", "estimate_sampling",
    "exponent_from_flow", "factor_quadratic", "fit_decay", "integrate", "kernel_split",
    "monomial_exponent", "normal_form_residual", "parse_poly", "psi_bound",
    "quadratic_constant", "remainder_form", "solve_branch", "verify_inequality",
]
