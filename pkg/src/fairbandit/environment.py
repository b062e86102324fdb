"""Synthetic pain-care interaction environment.

Generates patient interactions (gender, cluster, session, eight features in
[0, 1]) and stochastic rewards for the three care recommendations, and acts
as the ground-truth oracle for the optimal recommendation. The generative
recipe: feature values are clipped Gaussians around per-(gender, cluster,
session) means, rewards are a clipped linear model per action plus clipped
Gaussian noise, and resource-intensive actions carry additive discounts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import ConfigurationError

PROFILE_SCHEMA_VERSION = 1

N_FEATURES = 8
N_ACTIONS = 3
N_CLUSTERS = 3
N_SESSIONS = 10

#: Additive reward discounts for the 15- and 45-minute therapist sessions.
ACTION_DISCOUNTS = (0.0, -0.02, -0.06)


class FeatureId(IntEnum):
    """The eight patient features, in canonical order."""

    STEPS_GOAL_PCT = 0
    PAIN_INTENSITY_CHANGE = 1
    CBT_SKILL_PRACTICE = 2
    SLEEP_QUALITY = 3
    SLEEP_DURATION = 4
    PAIN_INTERFERE_1 = 5
    PAIN_INTERFERE_2 = 6
    SESSION_NUMBER = 7


class Gender(IntEnum):
    MAN = 0
    WOMAN = 1


class ActionId(IntEnum):
    """Care recommendations: IVR call, 15-minute call, 45-minute call."""

    IVR_CALL = 0
    PHONE_15 = 1
    PHONE_45 = 2

    @property
    def discount(self) -> float:
        return ACTION_DISCOUNTS[self.value]


_JSON_FEATURE_NAMES = [f.name.lower() for f in FeatureId]
_JSON_GENDER_NAMES = [g.name.lower() for g in Gender]
_JSON_ACTION_NAMES = [a.name.lower() for a in ActionId]


@dataclass
class Interaction:
    """One patient interaction: group labels plus the 8-feature context."""

    gender: Gender
    cluster: int
    session: int
    features: np.ndarray

    def validate(self) -> None:
        if not 1 <= self.cluster <= N_CLUSTERS:
            raise ConfigurationError(f"cluster must be in 1..{N_CLUSTERS}")
        if not 1 <= self.session <= N_SESSIONS:
            raise ConfigurationError(f"session must be in 1..{N_SESSIONS}")
        if self.features.shape != (N_FEATURES,):
            raise ConfigurationError("features must be an 8-vector")
        if np.any(self.features < 0.0) or np.any(self.features > 1.0):
            raise ConfigurationError("feature values must lie in [0, 1]")


@dataclass
class RewardModel:
    """Per-action linear reward: clip(intercept + weights . x, 0, 1) + noise."""

    weights: np.ndarray        # (3, 8)
    intercepts: np.ndarray     # (3,)
    noise_stds: np.ndarray     # (3,)

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.intercepts = np.asarray(self.intercepts, dtype=np.float64)
        self.noise_stds = np.asarray(self.noise_stds, dtype=np.float64)
        if self.weights.shape != (N_ACTIONS, N_FEATURES):
            raise ConfigurationError("weights must have shape (3, 8)")
        if self.intercepts.shape != (N_ACTIONS,):
            raise ConfigurationError("intercepts must have shape (3,)")
        if self.noise_stds.shape != (N_ACTIONS,):
            raise ConfigurationError("noise_stds must have shape (3,)")
        if np.any(self.noise_stds < 0.0):
            raise ConfigurationError("noise standard deviations must be >= 0")


@dataclass
class EnvProfile:
    """Full generative specification of interactions and rewards.

    Feature means/stds are indexed ``[gender, cluster-1, session-1, feature]``.
    ``optimal_feature_set_index`` is ground truth for the nested experiment,
    established by offline calibration; ``None`` means uncalibrated.
    """

    woman_proportion: float
    cluster_distribution: np.ndarray           # (3,)
    session_distribution: np.ndarray           # (10,)
    feature_means: np.ndarray                  # (2, 3, 10, 8)
    feature_stds: np.ndarray                   # (2, 3, 10, 8)
    reward_model: RewardModel
    optimal_feature_set_index: int | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.cluster_distribution = np.asarray(self.cluster_distribution, dtype=np.float64)
        self.session_distribution = np.asarray(self.session_distribution, dtype=np.float64)
        self.feature_means = np.asarray(self.feature_means, dtype=np.float64)
        self.feature_stds = np.asarray(self.feature_stds, dtype=np.float64)
        self._validated = False

    def validate(self) -> "EnvProfile":
        if self._validated:
            return self
        if not 0.0 <= self.woman_proportion <= 1.0:
            raise ConfigurationError("woman_proportion must lie in [0, 1]")
        for name, dist, n in (("cluster_distribution", self.cluster_distribution, N_CLUSTERS),
                              ("session_distribution", self.session_distribution, N_SESSIONS)):
            if dist.shape != (n,):
                raise ConfigurationError(f"{name} must have length {n}")
            if np.any(dist < 0.0):
                raise ConfigurationError(f"{name} must be non-negative")
            if abs(float(dist.sum()) - 1.0) > 1e-9:
                raise ConfigurationError(f"{name} must sum to 1 within 1e-9")
        shape = (2, N_CLUSTERS, N_SESSIONS, N_FEATURES)
        if self.feature_means.shape != shape or self.feature_stds.shape != shape:
            raise ConfigurationError(f"feature means/stds must have shape {shape}")
        if np.any(self.feature_means < 0.0) or np.any(self.feature_means > 1.0):
            raise ConfigurationError("feature means must lie in [0, 1]")
        if np.any(self.feature_stds < 0.0):
            raise ConfigurationError("feature stds must be >= 0")
        self._validated = True
        return self

    # cached cumulative distributions for the sampling kernel
    def _sampling_arrays(self):
        self.validate()
        return (float(self.woman_proportion),
                np.cumsum(self.cluster_distribution),
                np.cumsum(self.session_distribution),
                self.feature_means, self.feature_stds)

    def _reward_arrays(self):
        rm = self.reward_model
        return rm.weights, rm.intercepts, np.asarray(ACTION_DISCOUNTS), rm.noise_stds


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def sample_interaction(profile: EnvProfile, rng: np.random.Generator) -> Interaction:
    """Draw one interaction from the profile.

    Gender is Bernoulli(woman_proportion), cluster and session follow the
    profile distributions, and each feature is clip(mean + N(0, std), 0, 1)
    with the session feature overwritten by (session - 1) / 9.
    """
    wp, ccum, scum, means, stds = profile._sampling_arrays()
    g, c, s, x = _kernels.sample_interaction_kernel(wp, ccum, scum, means, stds, rng)
    return Interaction(gender=Gender(g), cluster=int(c) + 1, session=int(s) + 1,
                       features=x)


def expected_reward(profile: EnvProfile, interaction: Interaction,
                    action: ActionId) -> float:
    """Deterministic expected reward: clipped base plus the action discount."""
    w, icept, disc, _ = profile._reward_arrays()
    return float(_kernels.expected_reward_kernel(
        w, icept, disc, interaction.features, int(action)))


def realize_reward(profile: EnvProfile, interaction: Interaction,
                   action: ActionId, rng: np.random.Generator) -> float:
    """Stochastic reward: clip(base + N(0, sigma_a), 0, 1) + discount.

    The result lies in [-0.06, 1.0]; the clip is applied before the discount.
    """
    w, icept, disc, noise = profile._reward_arrays()
    return float(_kernels.realize_reward_kernel(
        w, icept, disc, noise, interaction.features, int(action), rng))


def optimal_action(profile: EnvProfile, interaction: Interaction) -> ActionId:
    """Argmax of expected (discounted) reward, ties broken by lowest index."""
    w, icept, disc, _ = profile._reward_arrays()
    return ActionId(int(_kernels.optimal_action_kernel(
        w, icept, disc, interaction.features)))


# ---------------------------------------------------------------------------
# JSON serialization
# ---------------------------------------------------------------------------

def profile_to_dict(profile: EnvProfile) -> dict:
    """JSON document with means/stds keyed 'gender.cluster.session.feature'."""
    profile.validate()
    means: dict[str, float] = {}
    stds: dict[str, float] = {}
    for g in Gender:
        for c in range(N_CLUSTERS):
            for s in range(N_SESSIONS):
                for f in FeatureId:
                    key = f"{_JSON_GENDER_NAMES[g]}.{c + 1}.{s + 1}.{_JSON_FEATURE_NAMES[f]}"
                    means[key] = float(profile.feature_means[g, c, s, f])
                    stds[key] = float(profile.feature_stds[g, c, s, f])
    rm = profile.reward_model
    actions = {}
    for a in ActionId:
        actions[_JSON_ACTION_NAMES[a]] = {
            "weights": {_JSON_FEATURE_NAMES[f]: float(rm.weights[a, f]) for f in FeatureId},
            "intercept": float(rm.intercepts[a]),
            "noise_std": float(rm.noise_stds[a]),
        }
    return {
        "schema_version": PROFILE_SCHEMA_VERSION,
        "woman_proportion": float(profile.woman_proportion),
        "cluster_distribution": [float(p) for p in profile.cluster_distribution],
        "session_distribution": [float(p) for p in profile.session_distribution],
        "feature_means": means,
        "feature_stds": stds,
        "reward_model": actions,
        "optimal_feature_set_index": profile.optimal_feature_set_index,
        "metadata": profile.metadata,
    }


def profile_from_dict(doc: dict) -> EnvProfile:
    version = doc.get("schema_version")
    if version != PROFILE_SCHEMA_VERSION:
        raise ConfigurationError(
            f"unsupported profile schema_version {version!r} "
            f"(expected {PROFILE_SCHEMA_VERSION})")
    shape = (2, N_CLUSTERS, N_SESSIONS, N_FEATURES)
    means = np.empty(shape)
    stds = np.empty(shape)
    try:
        for g in Gender:
            for c in range(N_CLUSTERS):
                for s in range(N_SESSIONS):
                    for f in FeatureId:
                        key = (f"{_JSON_GENDER_NAMES[g]}.{c + 1}.{s + 1}."
                               f"{_JSON_FEATURE_NAMES[f]}")
                        means[g, c, s, f] = doc["feature_means"][key]
                        stds[g, c, s, f] = doc["feature_stds"][key]
        actions = doc["reward_model"]
        weights = np.empty((N_ACTIONS, N_FEATURES))
        intercepts = np.empty(N_ACTIONS)
        noise = np.empty(N_ACTIONS)
        for a in ActionId:
            entry = actions[_JSON_ACTION_NAMES[a]]
            for f in FeatureId:
                weights[a, f] = entry["weights"][_JSON_FEATURE_NAMES[f]]
            intercepts[a] = entry["intercept"]
            noise[a] = entry["noise_std"]
        profile = EnvProfile(
            woman_proportion=doc["woman_proportion"],
            cluster_distribution=np.asarray(doc["cluster_distribution"]),
            session_distribution=np.asarray(doc["session_distribution"]),
            feature_means=means,
            feature_stds=stds,
            reward_model=RewardModel(weights, intercepts, noise),
            optimal_feature_set_index=doc.get("optimal_feature_set_index"),
            metadata=doc.get("metadata", {}),
        )
    except KeyError as exc:
        raise ConfigurationError(f"profile document missing key: {exc}") from exc
    return profile.validate()


def save_profile(profile: EnvProfile, path: str | Path) -> None:
    Path(path).write_text(json.dumps(profile_to_dict(profile), indent=1) + "\n")


def load_profile_file(path: str | Path) -> EnvProfile:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"invalid profile JSON in {path}: {exc}") from exc
    return profile_from_dict(doc)
