"""Numerical toolkit for toric nearly-Kähler 6-manifolds.

A potential φ on a domain of ℝ³ defines, through its third-order jet, an
SU(3)-structure on the local model T³ × ℝ³.  The structure is nearly-Kähler
exactly when φ solves a Monge–Ampère-type equation; this package computes the
jets, the forms and their exterior derivatives, checks the structure
equations, and integrates the radial reduction of the equation.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DegenerateStructureError,
    DegreeOverflowError,
    DomainError,
    EvaluationError,
    OutsideU0Error,
    PreconditionError,
    SingularityError,
    ToricNKError,
)
from .exterior import Form, FormJet, interior, k_tensor, wedge  # noqa: E402
from .jets import (  # noqa: E402
    EXACT,
    FINITE_DIFFERENCE,
    Jet3,
    PhiFamily,
    affine_shift,
    finite_difference_jet,
    polynomial_family,
    radial_phi,
    s3s3_phi,
    taylor_family,
)
from .radial import Controls, RadialSolution, RadialState, admissible_window, integrate  # noqa: E402
from .structure import (  # noqa: E402
    admissibility,
    d,
    frame_at,
    hitchin_check,
    ma_residual,
    nk_residuals,
)
