"""Simulate an expert predicting against a Gaussian random-walk market paid by
the logarithmic scoring rule, and check the closed-form results numerically."""

__version__ = "0.1.0"

from .analytics import (
    AfterPrediction,
    CumulativeReward,
    FirstPrediction,
    SpeakGapInputs,
    asymptotic_ratio,
    conditional_gap_moments,
    cumulative_expectation_gamma,
    cumulative_expectation_sum,
    first_case_gap_moment,
    log_gamma,
    log_gamma_shift,
    speak_gap,
    speak_gap_coefficients,
)
from .beliefs import (
    UNINFORMED,
    BeliefState,
    GaussianBelief,
    PostPrediction,
    Uninformed,
    after_prediction_variance,
    belief_after_prediction,
    belief_at_prediction,
    expert_belief,
    pre_prediction_belief,
    uninformed_belief,
)
from .errors import (
    ConfigurationError,
    DegenerateBeliefError,
    DomainError,
    ExpertOracleError,
    ParameterError,
    PeriodIndexError,
    ProtocolError,
    SimulationResourceError,
    StateError,
)
from .model import (
    EpisodePath,
    Horizon,
    PathBatch,
    SignalView,
    expert_signal,
    market_signal,
    sample_batch,
    sample_episode,
    signals,
)
from .rng import episode_seed, episode_seeds
from .scoring import (
    UNIT,
    consecutive_expectation,
    distortion_delta,
    excess_log,
    expected_truthful_reward,
    first_prediction_expectation,
    induced_distortion,
    log_score,
)
from .simulator import (
    BatchOutcome,
    EpisodeResult,
    MonteCarloSummary,
    PairedSummary,
    PredictionRecord,
    monte_carlo,
    run_episode,
    run_monte_carlo,
    run_paired,
    run_tournament,
    simulate_batch,
)
from .strategy import (
    SILENT,
    AlwaysSilent,
    DistortOnce,
    Predict,
    Silent,
    SkipOne,
    Strategy,
    StrategyContext,
    ThresholdPolicy,
    TruthfulAlways,
    distort_once,
    make_strategy,
    skip_one,
    threshold_policy,
    truthful_always,
)
from .verify import SUITES, CheckResult, SuiteReport, verify_all, verify_suite
