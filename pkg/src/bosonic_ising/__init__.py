"""Bosonic Ising optimiser: equilibrium statistics, stimulated Glauber dynamics,
kinetic Monte Carlo annealing and a density-matrix check of the feedback scheme."""

__version__ = "0.1.0"

from .model import (
    DegenerateGroundState,
    EquilibriumStats,
    ProblemInstance,
    StateSpaceTooLarge,
    beta_for_error,
    boltzmann,
    energy,
    equilibrium_stats,
    error_probability,
    fig2_instance,
    fig3b_instance,
    ground_search,
    local_field,
    two_level_instance,
)
from .rates import DynamicsParams, glauber_gamma, log_stimulation_factor, rate_table, transition_log_weight
from .master import (
    StateIndexer,
    equilibration_time_ode,
    evolve_distribution,
    master_rhs,
    rate_equation_two_level,
)
from .kmc import (
    AnnealingSchedule,
    anneal_ensemble,
    ensemble_statistics,
    equilibration_time_kmc,
    kmc_step,
    run_trajectory,
    sample_initial_state,
)
