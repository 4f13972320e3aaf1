"""Exact solver for extending point-singular distributions under equations.

Delta-derivative spaces with their weighted scalar product, a symbolic
operator algebra with pullbacks, exact spectral projections, the extension
solver, the degree calculus, and the on-shell/off-shell map for derivatives
of the Feynman propagator, all over Gaussian rationals.
"""

from .scalar import GaussianRational, rational
from .deltaspace import DeltaVector, Polynomial, enumerate_multi_indices, inner, pair, smap, tmap
from .opalg import (
    OperatorExpr,
    casimir,
    commutator,
    dalembert,
    euler,
    lorentz_generator,
    monomial_derivative,
    operator_equal,
    parity,
    reflection,
)
from .spectral import (
    ExactPolynomial,
    RestrictionMatrix,
    adjoint_restriction,
    kernel_basis,
    minimal_polynomial,
    projection_polynomial,
    projector_onto_kernel,
    pseudoinverse_correction,
    range_membership,
    restrict,
)
from .extension import (
    ExtensionRecord,
    apply_counterterm,
    casimir_correction,
    existence_check,
    homogeneous_extension_unique,
    linearity_precondition,
    multi_commuting_correction,
    onshell_correction,
    order_raising_correction,
    renorm_map,
    verify_casimir_hypotheses,
)
from .chi import (
    ConstCoeffOperator,
    FeynmanConfig,
    alpha_coefficient,
    chi_crosscheck,
    chi_explicit,
    chi_projection,
    lambda_contraction,
    theta_counterterm,
)

__version__ = "0.1.0"
