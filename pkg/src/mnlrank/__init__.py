"""Learning-to-rank bandit simulations under multinomial-logit choice."""

from .assignment import solve_assignment
from .concentration import (
    FiniteDifferenceBound,
    bell_incomplete,
    beta1_squared,
    central_moment_geometric,
    cumulant_coeffs,
    derangement,
    mg_constant,
    theorem1_bound,
    ucb_width_em,
    ucb_width_known,
    ucb_width_weak,
)
from .environment import EpochRecord, make_rng, run_epoch, sample_click, sample_epoch_fast
from .harness import (
    ExperimentConfig,
    ExperimentResult,
    read_trajectories,
    regret_upper_bound_value,
    run_experiment,
    run_replication,
    write_result_csv,
)
from .inference import CountState, EmEstimate, alpha_bar, em_fit, gamma_bar, log_likelihood, update_counts
from .model import (
    Action,
    ProblemInstance,
    RegretTrace,
    click_distribution,
    expected_reward,
    lower_bound_value,
    optimal_action,
    validate_action,
)
from .policies import POLICY_NAMES, make_policy
from .problems import problem_instance

__version__ = "0.1.0"
