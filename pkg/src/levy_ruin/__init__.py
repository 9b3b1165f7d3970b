"""Finite-time ruin asymptotics and conditioned passage laws for compound Poisson risk models."""

from .asymptotics import (
    BEstimate,
    b_exp_time,
    b_laplace,
    b_quadrature,
    consistent,
    finite_time_ruin_estimate,
    growth_rate,
    segerdahl,
    tail_ratio_diagnostic,
)
from .conditioned import (
    PassageGrid,
    build_passage_grid,
    conditional_mc_reference,
    sample_limit_triple,
    sample_limit_triples,
)
from .errors import (
    BudgetError,
    ConfigError,
    DomainError,
    FallbackWarning,
    GridError,
    NoHitsError,
    RegimeError,
    RejectionBudgetError,
    ResonanceWarning,
)
from .fluctuation import (
    infinite_horizon_constant,
    overshoot_law_cramer,
    overshoot_law_infinite,
    overshoot_law_subordinator,
    ruin_prob_infinite,
    sup_mgf_infinity,
    vigon_check,
)
from .model import (
    Exponential,
    RiskModel,
    TiltedPareto,
    cumulant,
    cumulant_info,
    levy_tail,
    lundberg_root,
    premium_for_cumulant,
)
from .paths import (
    MCEstimate,
    estimate_ruin_prob,
    estimate_sup_mgf,
    estimate_tail_prob,
    first_passage,
    running_sup,
    simulate_batch,
)

__version__ = "0.1.0"
