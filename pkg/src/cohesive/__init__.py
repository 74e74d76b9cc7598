"""Coherent risk measures on finite probability spaces and group capital.

Exact rational arithmetic by default, float64 on request. See the README for
a tour of the public API and the ``cohesive`` command-line tool.
"""
from .errors import (
    CohesiveError,
    ConfigurationError,
    DimensionError,
    PreconditionError,
    SizeError,
    ValidationError,
)
from .group import (
    CapitalReport,
    FixedLiabilityVerdict,
    LiabilityVector,
    OffsettingVerdict,
    PayoffVector,
    aggregate_capital,
    cohesion_condition,
    fixed_liability_cohesion,
    is_admissible,
    minimal_group_capital,
    offsetting_alphas,
    random_split,
    residual_risks,
    standard_payoff,
    verify_offsetting,
)
from .measure import (
    ProbSpace,
    comonotone_check,
    expectation,
    pos_neg_split,
    to_float,
    to_fraction,
)
from .oracle import (
    InstanceSpec,
    brute_force_capital,
    enumerate_band_extremes,
    enumerated_rho,
    random_instance,
)
from .risk import (
    AVaR,
    Band,
    BandSplit,
    LinearityVerdict,
    Vertices,
    avar,
    band_split,
    comonotone_additivity_check,
    lh_decomposition,
    linearity_certificate,
    rho,
    rho_batch,
    rho_eval,
    split_risk,
)

__version__ = "0.1.0"

__all__ = sorted(name for name, obj in globals().items()
                 if not name.startswith("_") and not isinstance(obj, type(errors)))
