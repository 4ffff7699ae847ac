"""Variance-driven curriculum sampling with group-relative advantages,
proportional-fairness category calibration, and a synthetic-learner
simulation harness."""

from .calibration import (
    CategoryState,
    closed_form_q,
    numerical_oracle_q,
    objective_value,
    reference_from_rewards,
    update_category_state,
    weights_from_q,
)
from .core import (
    ProbabilityList,
    PromptRecord,
    RewardGroup,
    compute_advantages,
    compute_variance,
    init_probability_list,
    load_probability_list,
    rescale_batch_variances,
    save_probability_list,
    update_probabilities,
)
from .harness import (
    EnvironmentConfig,
    ExperimentConfig,
    ExperimentResult,
    IterationMetrics,
    ablation_environment,
    compare_strategies,
    run_experiment,
    tier_occupancy,
    tier_peak_iterations,
)
from .sampler import SampledBatch, SamplerConfig, acceptance_probability, sample_batch
from .simenv import (
    SimLearner,
    SimPrompt,
    TierSpec,
    default_tiers,
    generate_rewards,
    make_tiered_dataset,
    train_step,
)

__version__ = "0.1.0"
