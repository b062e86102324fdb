"""Fairness-aware contextual-bandit simulation of pain-care recommendations."""

from .environment import (ACTION_DISCOUNTS, ActionId, EnvProfile, FeatureId,
                          Gender, Interaction, RewardModel, expected_reward,
                          load_profile_file, optimal_action, realize_reward,
                          sample_interaction, save_profile)
from .errors import (AggregationError, ConfigurationError,
                     ContractViolationError, DegenerateDataError,
                     FairbanditError, MetricError)
from .metrics import (RunLog, RunSummary, StepRecord,
                      cumulative_optimal_set_fraction, criterion_value,
                      interval_optimal_set_fraction, per_gender_average_reward,
                      read_run_log, suboptimal_fraction, summarize_run,
                      write_run_log)
from .nested import (DEFAULT_FEATURE_SETS, FairnessTracker, FeatureSet,
                     NestedState, PerformanceCriterion, nested_init,
                     nested_step, policy1_feedback, project_context)
from .policies import (ContextVector, LinUCBState, TSState, linucb_init,
                       linucb_select, linucb_update, ts_init, ts_select,
                       ts_update)
from .profiles import (build_calibrated_profile, build_neutral_profile,
                       load_profile)
from .stats import (Alternative, EffectSize, TestResult, ci95, cohens_d,
                    welch_test)

__version__ = "0.1.0"
