"""Large-time asymptotics of the first collision time of drifted Brownian
particles, with quadrature and Monte Carlo oracles for the exact tail."""

from .asymptotics import (
    AsymptoticLaw,
    HPrefactor,
    alpha,
    asymptotic_law,
    big_h,
    gamma,
    h_descriptor,
    h_eval,
    leading_term,
    perturbed_det,
    schur_ratio,
    vandermonde,
)
from .constant import (
    AsymptoticRegimeError,
    ConstantReport,
    GramMatrix,
    constant_direct,
    constant_extracted,
    equal_drift_D,
    gram_matrix,
)
from .exact_tail import (
    TailEstimate,
    i_integral,
    km_pfaffian,
    km_survival,
    limit_probability,
    proposition_tail,
    tail_exact,
    tail_n2_closed,
)
from .montecarlo import SimConfig, bridge_noncross, estimate_tail
from .numerics import (
    CapabilityError,
    IntegrationResult,
    NonFiniteIntegrand,
    QuadratureSpec,
    compensated_sum,
    fit_constant,
    tensor_quadrature,
    weyl_quadrature,
)
from .partition import (
    DriftVector,
    ParseError,
    StablePartition,
    StartVector,
    StrongRepresentation,
    coalescing_groups,
    is_irreducible,
    stable_partition,
    strong_representation,
)

__all__ = [name for name in dir() if not name.startswith("_")]
