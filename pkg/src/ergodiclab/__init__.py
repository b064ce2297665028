"""Numerical laboratory for Cesaro-mean ergodicity of operator semigroups
on truncated l1 sequence spaces."""

__version__ = "0.1.0"

from .space import (  # noqa: F401
    DualFunctional,
    TruncatedVector,
    basis_vector,
    norm_l1,
    pair,
    project_P,
    project_Q,
    vector,
    zero_vector,
)
from .coeffs import b, integral_b, partial_sum_b, tail_sum_b  # noqa: F401
from .semigroups import (  # noqa: F401
    TruncatedOperator,
    apply_A,
    apply_A_inverse,
    apply_B,
    apply_B_adjoint,
    apply_M,
    apply_N,
    apply_Ndot,
    apply_T,
    kernel_B,
    matrix_B,
)
from .exp_semigroup import PowerBoundedOperator, apply_S, renorm, semigroup_defect_S  # noqa: F401
from .cesaro import (  # noqa: F401
    CesaroCurve,
    QuadratureError,
    cesaro_M,
    cesaro_M_opnorm,
    cesaro_quadrature,
    cesaro_S,
    cesaro_T,
)
from .diagnostics import (  # noqa: F401
    ConvergenceVerdict,
    ErgodicityReport,
    Evidence,
    cauchy_convergence_test,
    kernel_criterion,
    mass_escape_profile,
    sine_criterion,
    uniform_criterion_M,
)
