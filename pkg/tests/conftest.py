"""Shared fixtures.

The expensive fixture runs the reference experiment once per session:
100 LinUCB runs of 50,000 interactions for each of the six candidate
feature sets on the calibrated profile, keeping run-level summaries and
global reward bounds. Several acceptance criteria and the calibrated-value
example tests read from it.
"""

import numpy as np
import pytest

from fairbandit.experiment import simulate_linucb_run
from fairbandit.harness import make_rngs
from fairbandit.nested import DEFAULT_FEATURE_SETS
from fairbandit.profiles import build_calibrated_profile, build_neutral_profile

ACCEPTANCE_MASTER_SEED = 1
ACCEPTANCE_RUNS = 100
ACCEPTANCE_T = 50_000


@pytest.fixture(scope="session")
def calibrated_profile():
    return build_calibrated_profile()


@pytest.fixture(scope="session")
def neutral_profile():
    return build_neutral_profile()


class PerSetExperiment:
    """Run-level summaries of the reference per-feature-set experiment."""

    def __init__(self):
        n_sets = len(DEFAULT_FEATURE_SETS)
        self.mean_reward = np.zeros((n_sets, ACCEPTANCE_RUNS, 2))
        self.suboptimal = np.zeros((n_sets, ACCEPTANCE_RUNS, 2))
        self.overall_reward = np.zeros((n_sets, ACCEPTANCE_RUNS))
        self.reward_min = np.inf
        self.reward_max = -np.inf
        self.n_rewards = 0

    @property
    def runs(self):
        return ACCEPTANCE_RUNS


@pytest.fixture(scope="session")
def per_set_experiment(calibrated_profile):
    exp = PerSetExperiment()
    for s, fs in enumerate(DEFAULT_FEATURE_SETS):
        for r in range(ACCEPTANCE_RUNS):
            env_rng, _ = make_rngs(ACCEPTANCE_MASTER_SEED, s, r)
            log, _state = simulate_linucb_run(
                calibrated_profile, fs, 0.3, ACCEPTANCE_T, env_rng)
            for g in (0, 1):
                mask = log.gender == g
                exp.mean_reward[s, r, g] = log.reward[mask].mean()
                exp.suboptimal[s, r, g] = (~log.is_optimal_action[mask]).mean()
            exp.overall_reward[s, r] = log.reward.mean()
            exp.reward_min = min(exp.reward_min, float(log.reward.min()))
            exp.reward_max = max(exp.reward_max, float(log.reward.max()))
            exp.n_rewards += len(log)
    return exp
