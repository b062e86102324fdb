"""Two-level recommendation policy.

Level 1 runs Beta-Bernoulli Thompson Sampling over candidate feature sets;
level 2 runs one LinUCB instance per feature set (each sized to its set)
over the three care recommendations. The realized reward updates the chosen
set's LinUCB directly; level 1 receives a feedback value that blends the
clipped reward with one minus the running gender gap of the chosen set, so
both utility and fairness steer feature-set selection. With utility weight
1 the level-1 feedback is exactly the clipped raw reward.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .environment import (ActionId, EnvProfile, FeatureId, Gender, Interaction,
                          N_FEATURES)
from .errors import ConfigurationError
from .metrics import StepRecord
from .policies import (ContextVector, LinUCBState, TSState, linucb_init,
                       linucb_select, linucb_update, ts_init, ts_select,
                       ts_update)


@dataclass(frozen=True)
class FeatureSet:
    """A candidate context: at least three distinct features, canonical order."""

    id: int
    members: tuple[FeatureId, ...]

    def __post_init__(self) -> None:
        if len(self.members) < 3:
            raise ConfigurationError("a feature set needs at least three features")
        if len(set(self.members)) != len(self.members):
            raise ConfigurationError("feature set members must be distinct")
        ordered = tuple(sorted(FeatureId(m) for m in self.members))
        object.__setattr__(self, "members", ordered)

    @property
    def dimension(self) -> int:
        return len(self.members)

    def member_indices(self) -> np.ndarray:
        return np.array([int(m) for m in self.members], dtype=np.int64)


def _fs(set_id: int, members) -> FeatureSet:
    return FeatureSet(id=set_id, members=tuple(FeatureId(m) for m in members))


#: The six competing feature sets, ids 0..5. Set 0 is the full context;
#: 1 drops both pain-interference features; 2 drops the first one; 3 drops
#: the second; 4 drops both sleep features; 5 drops the steps-goal feature.
DEFAULT_FEATURE_SETS: tuple[FeatureSet, ...] = (
    _fs(0, [0, 1, 2, 3, 4, 5, 6, 7]),
    _fs(1, [0, 1, 2, 3, 4, 7]),
    _fs(2, [0, 1, 2, 3, 4, 6, 7]),
    _fs(3, [0, 1, 2, 3, 4, 5, 7]),
    _fs(4, [0, 1, 2, 5, 6, 7]),
    _fs(5, [1, 2, 3, 4, 5, 6, 7]),
)


@dataclass
class PerformanceCriterion:
    """Weights of the utility and fairness halves; they must sum to one."""

    utility_weight: float = 0.5
    fairness_weight: float = 0.5

    def __post_init__(self) -> None:
        if self.utility_weight < 0.0 or self.fairness_weight < 0.0:
            raise ConfigurationError("criterion weights must be >= 0")
        if abs(self.utility_weight + self.fairness_weight - 1.0) > 1e-9:
            raise ConfigurationError("criterion weights must sum to 1")


@dataclass
class FairnessTracker:
    """Running per-(feature set, gender) reward counts and means."""

    counts: np.ndarray  # (S, 2) int64
    means: np.ndarray   # (S, 2) float64

    @classmethod
    def empty(cls, n_sets: int) -> "FairnessTracker":
        return cls(counts=np.zeros((n_sets, 2), dtype=np.int64),
                   means=np.zeros((n_sets, 2)))

    def update(self, set_id: int, gender: Gender, reward: float) -> None:
        g = int(gender)
        self.counts[set_id, g] += 1
        self.means[set_id, g] += (reward - self.means[set_id, g]) / self.counts[set_id, g]

    def gap(self, set_id: int) -> float:
        """|running man mean - woman mean|; 0 until both genders observed."""
        if self.counts[set_id, 0] > 0 and self.counts[set_id, 1] > 0:
            return float(abs(self.means[set_id, 0] - self.means[set_id, 1]))
        return 0.0


@dataclass
class NestedState:
    feature_sets: tuple[FeatureSet, ...]
    level1: TSState
    level2: list[LinUCBState]
    tracker: FairnessTracker
    criterion: PerformanceCriterion
    steps_taken: int = 0


def nested_init(feature_sets, priors, alpha: float,
                criterion: PerformanceCriterion | None = None) -> NestedState:
    """Build the two-level state: TS over sets, one LinUCB per set."""
    feature_sets = tuple(feature_sets)
    if len(feature_sets) < 1:
        raise ConfigurationError("at least one feature set is required")
    if len(priors) != len(feature_sets):
        raise ConfigurationError(
            f"got {len(priors)} priors for {len(feature_sets)} feature sets")
    if criterion is None:
        criterion = PerformanceCriterion()
    return NestedState(
        feature_sets=feature_sets,
        level1=ts_init(priors),
        level2=[linucb_init(fs.dimension, alpha) for fs in feature_sets],
        tracker=FairnessTracker.empty(len(feature_sets)),
        criterion=criterion,
    )


def project_context(interaction: Interaction, feature_set: FeatureSet) -> ContextVector:
    """Extract the set's members from the 8-feature vector, canonical order."""
    return interaction.features[feature_set.member_indices()]


def policy1_feedback(criterion: PerformanceCriterion, reward: float,
                     tracker: FairnessTracker, chosen_set: int,
                     gender: Gender) -> float:
    """Level-1 feedback in [0, 1]: blended clipped reward and fairness term.

    The tracker must already include this step's reward. With utility
    weight 1 this returns clip(reward, 0, 1), the raw-reward behaviour.
    """
    r = min(max(reward, 0.0), 1.0)
    gap = tracker.gap(chosen_set)
    value = criterion.utility_weight * r + criterion.fairness_weight * (1.0 - gap)
    return min(max(value, 0.0), 1.0)


def nested_step(state: NestedState, interaction: Interaction, profile: EnvProfile,
                env_rng: np.random.Generator,
                policy_rng: np.random.Generator) -> StepRecord:
    """Run one two-level decision step and record it.

    Draw order: level-1 selection consumes one Beta sample per set from
    ``policy_rng``; the realized reward consumes one normal from ``env_rng``;
    the level-1 update consumes one uniform from ``policy_rng``. Keeping the
    environment stream separate makes a single-set nested run bit-identical
    to plain LinUCB on that set under a shared environment seed.
    """
    from .environment import optimal_action, realize_reward  # local to avoid cycle

    set_id = ts_select(state.level1, policy_rng)
    fs = state.feature_sets[set_id]
    x = project_context(interaction, fs)
    action, _ = linucb_select(state.level2[set_id], x)
    reward = realize_reward(profile, interaction, ActionId(action), env_rng)
    linucb_update(state.level2[set_id], action, x, reward)
    state.tracker.update(set_id, interaction.gender, reward)
    feedback = policy1_feedback(state.criterion, reward, state.tracker,
                                set_id, interaction.gender)
    ts_update(state.level1, set_id, feedback, policy_rng)
    state.steps_taken += 1

    opt = optimal_action(profile, interaction)
    opt_set = None
    if profile.optimal_feature_set_index is not None:
        opt_set = fs.id == profile.optimal_feature_set_index
    return StepRecord(
        t=state.steps_taken,
        set_id=fs.id,
        action=ActionId(action),
        reward=reward,
        gender=interaction.gender,
        cluster=interaction.cluster,
        session=interaction.session,
        is_optimal_action=ActionId(action) == opt,
        is_optimal_set=opt_set,
    )
