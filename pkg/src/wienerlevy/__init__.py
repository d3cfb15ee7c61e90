"""Local Wiener-Levy synthesis.

Given a measure mu on R^d with pure-point and absolutely-continuous parts, a
compact plane set K, and a real-analytic function h near K, build a finite
total-variation measure nu with nu^(y) = h(mu^(y)) wherever mu^(y) lies in K,
and verify the result against independent oracles.
"""

from .analytic import (
    AnalyticFunction,
    Annulus,
    CompactSet,
    ConjugatePolynomial,
    Disc,
    Holomorphic,
    Piecewise,
    Polygon,
    PowerSeries2D,
    SmoothedExtension,
    UnionSet,
    choose_epsilon,
    continuation_eval,
    dist4,
    extension_eval,
    make_function,
    smooth_step,
)
from .errors import ConfigurationError, DomainError, ValidationError
from .measures import (
    FrequencyBasis,
    GridDensity,
    MixedMeasure,
    PointMeasure,
    conjugate_reflect,
    convolution_power,
    convolve,
    deserialize_measure,
    fourier_at,
    residual_split,
    serialize_measure,
    total_variation,
    truncate_atoms,
)
from .oracle import (
    ResidualStats,
    cauchy_polydisk_value,
    emit_plot_data,
    geometric_inverse,
    residual_report,
)
from .synthesis import (
    SynthesisParams,
    SynthesisReport,
    l1_bound_check,
    lowpass_approximate,
    neumann_assemble,
    regularized_inverse,
    synthesize_density,
    synthesize_mixed,
    synthesize_point,
    verification_points,
)
from .torus import (
    TorusGrid,
    decay_check,
    sample_torus_function,
    select_truncation,
    tau_coefficients,
    theta_coefficients,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
