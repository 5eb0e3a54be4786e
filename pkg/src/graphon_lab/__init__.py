"""graphon_lab: bipartite block-model (graphon) estimation toolkit.

Simulates block-structured interaction matrices with latent row/column
positions, fits block models by alternating minimization (with an exact
network-flow step for minimum cluster sizes), aggregates fits across a
hyperparameter grid by exponential weighting, and evaluates errors
against closed-form oracle risks and theoretical rate curves.
"""

from .core import (
    AssignmentMatrix,
    BlockModel,
    DimensionMismatch,
    EmptyClusterError,
    Graphon,
    NoiseModel,
    ObservationSet,
    block_inner,
    block_sums,
    frobenius_cost,
    group_sums,
    induced_mean,
    induced_sq_norm,
)
from .synthesis import (
    SynthConfig,
    apply_missingness,
    build_theta,
    make_standard_graphon,
    sample_latents,
    sample_observations,
    substream,
    synthesize,
    true_assignments,
)
from .flow import InfeasibleSizeError, min_cost_assignment
from .estimation import (
    FitConfig,
    FitReport,
    assignment_costs,
    kmeans,
    lloyd_fit,
    q_step,
    spectral_init,
    z_step_constrained,
    z_step_constrained_cols,
    z_step_unconstrained,
    z_step_unconstrained_cols,
)
from .aggregation import (
    EwaResult,
    HyperGrid,
    default_grid,
    ewa_aggregate,
    ewa_weights,
    temperature,
)
from .evaluation import (
    MetricReport,
    delta_tilde,
    lift_to_graphon,
    mse_theta,
    oracle_fit,
    oracle_risk_bernoulli,
    pc_l2_sq_distance,
    psi_condition,
    rate_bound,
)
from .experiments import (
    ExperimentResult,
    ExperimentSpec,
    emit_outputs,
    fit_grid,
    hoelder_KL_rule,
    run_ewa_experiment,
    run_experiment,
)

__version__ = "0.1.0"
