"""Toolkit for quadratic minimization on the unit sphere.

Enumerates the stationary points of min 1/2 x^T A x + g^T x over the unit
sphere exactly (via the secular equation in A's eigenbasis), measures the
gradient-inequality exponent near each point from sampled lower envelopes,
and runs/classifies first-order descent to demonstrate the implied
convergence rates.
"""

from .descent import (
    DescentTrace,
    RateReport,
    Regime,
    classify_rate,
    rgd_step,
    solve_rgd,
    tail_step_fraction,
    theta_to_regime,
    verify_conditions,
)
from .linalg import (
    EigenDecomp,
    SymMatrix,
    TangentBasis,
    restrict_to_tangent,
    sym_eigh,
    tangent_basis,
)
from .loja import (
    CaseDecomposition,
    LojaEstimate,
    LojaSample,
    case3_decompose,
    directional_probe,
    estimate_exponent,
    measure,
    sample_cap,
    theoretical_bounds,
)
from .problem import (
    GradientKind,
    GradientMeasure,
    Problem,
    SpherePoint,
    euclidean_grad,
    make_case3,
    make_example1,
    make_random,
    min_norm_subgradient,
    multiplier,
    objective,
    phi_matrix,
    riemannian_grad,
)
from .stationary import (
    ContinuumFamily,
    StationaryPoint,
    StationarySet,
    brute_force_stationary,
    classify,
    enumerate_stationary,
)

__version__ = "0.1.0"
