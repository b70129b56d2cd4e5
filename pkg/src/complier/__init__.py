"""Randomization-based estimators of complier treatment effects with binary outcomes."""

from .data import (
    CrossTab,
    ObservedSample,
    PotentialTable,
    TrueEstimands,
    ValidatedSample,
    compliance_crosstab,
    transform_mcate_outcomes,
    true_estimands,
    validate_observed,
)
from .estimators import (
    ESTIMANDS,
    METHODS,
    Estimate,
    cob,
    confidence_interval,
    conservative_variance,
    estimate,
    ils_interactions,
    itt_difference_in_means,
    mcate,
    ob_logistic,
    variance_gain_diagnostics,
    wald,
)
from .randomizer import RngStream, complete_randomization, enumerate_assignments
from .simulation import (
    DgpParams,
    McSummaryRow,
    generate_population,
    monte_carlo,
    replay_synthetic_population,
    simulate_records,
    summarize,
)

__version__ = "0.1.0"
