"""Logarithmically asymptotically optimal (LAO) testing of multiple hypotheses.

One object: :func:`build_matrix` turns prescribed diagonal exponents into the
full reliability matrix of the optimal test.  K independent objects:
:func:`build_compound` composes per-object tests into a lazily evaluated
reliability tensor.  :mod:`laotest.simulation` checks both against exact and
simulated error probabilities.
"""

from ._logbase import get_log_base, log_base, set_log_base
from .compound import (
    CompoundReliabilityTensor,
    FamilyLabel,
    MultiObjectSpec,
    build_compound,
    check_conditions_multi,
    classify_family,
    compose_tensor,
    family_c_fill,
)
from .probability import (
    Distribution,
    EmpiricalType,
    empirical_type,
    enumerate_types,
    kl_divergence,
    type_class_log_probability,
)
from .projection import (
    BallConstraint,
    ProjectionResult,
    inverse_reliability,
    min_div_in_ball,
    min_div_in_ball_oracle,
    min_div_in_complement,
)
from .simulation import (
    ErrorEstimate,
    ExponentFit,
    compound_exact_error,
    exact_error,
    fit_exponent,
    monte_carlo_error,
)
from .single import (
    ConditionReport,
    DecisionRegions,
    GivenExponents,
    HypothesisSet,
    ReliabilityMatrix,
    build_matrix,
    check_conditions,
    classify,
    stein_row,
)

__version__ = "0.1.0"


def three_binary_hypotheses(log_base: float = 2.0) -> HypothesisSet:
    """Three hypotheses on a binary alphabet used throughout the demos.

    The middle one is (0.85, 0.15); written as (0.85, 0.14) it would not sum to one.
    """
    return HypothesisSet(((0.10, 0.90), (0.85, 0.15), (0.23, 0.77)), log_base)
