"""Named environment profiles.

Two profiles ship with the package:

* ``neutral`` - men and women share every distribution and the reward
  structure carries no gender-differential term; useful for smoke tests
  and as the base profile for calibration exercises.
* ``calibrated`` - its generative constants are tuned so that LinUCB runs
  over the six candidate feature sets reproduce a clear gender-fairness
  pattern: one feature set favours women, several favour men, one is
  neutral, and the combined utility/fairness criterion singles out one
  optimal feature set for the nested experiment.

How the calibrated recipe works. Rewards are linear per action with zero
intercepts: w_a = kappa_a * u + w_common, so a single "need intensity"
score v = u . x decides which recommendation is optimal via two fixed
thresholds (0.02 / kappa_1 and 0.04 / (kappa_2 - kappa_1), where the
discounted advantages cross zero), while the common weights carry the
reward level. Men's mean need score sits midway between the thresholds.

Gender structure. Women's means for the steps-goal and pain-interference
features are shifted, moving their need scores up by about 0.1. A policy
that sees those features absorbs the shifts exactly (the model class
contains the truth), so the full feature set stays neutral: its residual
reward-level difference is cancelled by the common sleep-duration weight
against the gender gap in sleep-duration means, and its residual
estimation-geometry difference is cancelled by the gender contrast in
sleep-duration spread. A policy that omits a shifted feature imputes the
pooled, mostly-male mean and systematically mis-scores women, which makes
the sets that drop pain-interference or steps-goal features favour men.
The sleep-quality feature is informative with a much wider spread for men
than for women, so the one candidate set that omits it loses more
information about men, mis-serves them more often, and favours women.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .environment import (EnvProfile, FeatureId, RewardModel, N_CLUSTERS,
                          N_FEATURES, N_SESSIONS, load_profile_file)
from .errors import ConfigurationError


@dataclass
class ProfileDesign:
    """Tunable constants behind the calibrated profile."""

    woman_proportion: float = 0.125

    # need-intensity direction over the eight features
    u: tuple = (-0.75, 0.12, -0.12, -1.05, 0.0, 0.95, 0.92, 0.25)
    # per-action sensitivity to the need score v = u . x; with zero
    # intercepts the discounted-advantage thresholds are pinned at
    # v = 0.02 / kappa_1 and v = 0.04 / (kappa_2 - kappa_1)
    kappas: tuple = (0.0, 0.212, 0.424)

    # common-weight proportions over features; the builder scales them so
    # the mean undiscounted base reward under uniform actions hits the
    # target level. The sleep-duration and pain-interference-1 entries are
    # pinned (excluded from scaling): multiplied against the gender gaps in
    # those features' means they equalize the genders' reward levels on the
    # full feature set.
    w_common_props: tuple = (0.0, 0.18, 0.20, 0.22, 0.0, 0.0, 0.0, 0.12)
    common_sleep_duration: float = 0.0
    common_pain1: float = -0.1665
    target_uniform_base: float = 0.436

    # men's baseline feature means and stds (session feature deterministic)
    base_means: tuple = (0.50, 0.50, 0.55, 0.50, 0.60, 0.50, 0.50, 0.0)
    base_stds: tuple = (0.18, 0.15, 0.17, 0.19, 0.10, 0.18, 0.18, 0.0)

    # gender contrasts on the two sleep features: women's sleep quality is
    # much less dispersed than men's; women's sleep duration matches men's
    # location but its spread is the estimation-geometry balance knob
    woman_sleep_quality_std: float = 0.06
    woman_sleep_duration_mean: float = 0.56
    woman_sleep_duration_std: float = 0.10

    # cell structure of the sleep-quality feature (shared by gender)
    sleep_quality_cluster_amp: float = 0.03
    sleep_quality_session_amp: float = 0.02

    # women's constant mean offsets on steps-goal and pain-interference
    woman_shift_steps: float = 0.0
    woman_shift_pain1: float = 0.075
    woman_shift_pain2: float = 0.0

    # Cluster-keyed offsets of the steps-goal / pain-interference means.
    # Clusters are latent (no feature encodes them), so a policy that omits
    # one of these features cannot impute a patient's cluster offset, while
    # a policy that sees the feature absorbs it exactly. Men's offsets on
    # steps-goal and pain-interference-1 are chosen orthogonal to the need
    # direction (u0*a0 + u5*a5 = 0 per cluster) and their pain-2 offset is
    # zero: whichever single feature is omitted, the remaining one acts as
    # an exact proxy for a man's missing content, so men stay well served.
    # Women's offsets rotate through the features with independent signs,
    # so no such proxy exists for them and every omission mis-serves them.
    man_cluster_amp_steps: float = 0.12
    woman_cluster_amp_steps: float = 0.14
    woman_cluster_amp_pain1: float = 0.10
    woman_cluster_amp_pain2: float = 0.13
    # sign patterns over the three clusters per feature
    woman_cluster_signs_steps: tuple = (1.0, -1.0, 0.0)
    woman_cluster_signs_pain1: tuple = (0.0, 1.0, -1.0)
    woman_cluster_signs_pain2: tuple = (-1.0, 0.0, 1.0)

    noise_stds: tuple = (0.27, 0.27, 0.27)

    metadata: dict = field(default_factory=dict)


def _zero_sum_pattern(weights_session, weights_cluster) -> np.ndarray:
    """A smooth (cluster, session) cell pattern with zero mean."""
    pat = np.zeros((N_CLUSTERS, N_SESSIONS))
    for c in range(N_CLUSTERS):
        for s in range(N_SESSIONS):
            pat[c, s] = weights_cluster[c] + weights_session[s]
    return pat - pat.mean()


def _session_feature_values() -> np.ndarray:
    return np.arange(N_SESSIONS) / 9.0


def _feature_mean_tables(design: ProfileDesign):
    """Means and stds indexed [gender, cluster, session, feature]."""
    shape = (2, N_CLUSTERS, N_SESSIONS, N_FEATURES)
    means = np.zeros(shape)
    stds = np.zeros(shape)
    x7 = _session_feature_values()

    sq_pattern = _zero_sum_pattern(
        weights_session=design.sleep_quality_session_amp
        * np.linspace(1.0, -1.0, N_SESSIONS),
        weights_cluster=design.sleep_quality_cluster_amp
        * np.array([-1.0, 0.0, 1.0]))

    shift_by_feature = {
        int(FeatureId.STEPS_GOAL_PCT): design.woman_shift_steps,
        int(FeatureId.PAIN_INTERFERE_1): design.woman_shift_pain1,
        int(FeatureId.PAIN_INTERFERE_2): design.woman_shift_pain2,
    }
    f_steps = int(FeatureId.STEPS_GOAL_PCT)
    f_pain1 = int(FeatureId.PAIN_INTERFERE_1)
    f_pain2 = int(FeatureId.PAIN_INTERFERE_2)

    # men: orthogonal-pair cluster offsets (a5 solved from u0*a0 + u5*a5 = 0)
    man_sign = (1.0, 0.0, -1.0)
    man_a0 = design.man_cluster_amp_steps
    man_a5 = -design.u[f_steps] * man_a0 / design.u[f_pain1]

    woman_cluster = {
        f_steps: (design.woman_cluster_amp_steps,
                  design.woman_cluster_signs_steps),
        f_pain1: (design.woman_cluster_amp_pain1,
                  design.woman_cluster_signs_pain1),
        f_pain2: (design.woman_cluster_amp_pain2,
                  design.woman_cluster_signs_pain2),
    }

    for g in (0, 1):
        for c in range(N_CLUSTERS):
            for s in range(N_SESSIONS):
                m = np.array(design.base_means, dtype=np.float64)
                sd = np.array(design.base_stds, dtype=np.float64)
                m[int(FeatureId.SLEEP_QUALITY)] += sq_pattern[c, s]
                if g == 0:
                    m[f_steps] += man_sign[c] * man_a0
                    m[f_pain1] += man_sign[c] * man_a5
                else:
                    sd[int(FeatureId.SLEEP_QUALITY)] = design.woman_sleep_quality_std
                    m[int(FeatureId.SLEEP_DURATION)] = design.woman_sleep_duration_mean
                    sd[int(FeatureId.SLEEP_DURATION)] = design.woman_sleep_duration_std
                    for f, shift in shift_by_feature.items():
                        amp, signs = woman_cluster[f]
                        m[f] += shift + signs[c] * amp
                m[int(FeatureId.SESSION_NUMBER)] = x7[s]
                sd[int(FeatureId.SESSION_NUMBER)] = 0.0
                means[g, c, s] = m
                stds[g, c, s] = sd

    if np.any(means < 0.0) or np.any(means > 1.0):
        raise ConfigurationError("designed feature means leave [0, 1]")
    return means, stds


def _reward_model(design: ProfileDesign) -> RewardModel:
    """Zero-intercept linear rewards: w_a = kappa_a * u + w_common.

    Keeping the intercepts at zero means the through-the-origin linear
    model the bandit fits contains the truth exactly, so converged policies
    are unbiased and the design knobs act as intended. The common-weight
    scale is solved so that the population mean of the undiscounted base
    reward under uniformly random actions lands on the configured target.
    """
    u = np.array(design.u, dtype=np.float64)
    kappas = np.array(design.kappas, dtype=np.float64)
    props = np.array(design.w_common_props, dtype=np.float64)
    if (props[int(FeatureId.SLEEP_DURATION)] != 0.0
            or props[int(FeatureId.PAIN_INTERFERE_1)] != 0.0):
        raise ConfigurationError(
            "set the sleep-duration / pain-interference-1 common weights via "
            "their pinned fields")

    # population feature means (gender-mixed, uniform cells)
    x7_mean = float(np.mean(_session_feature_values()))
    mean_m = np.array(design.base_means, dtype=np.float64)
    mean_m[int(FeatureId.SESSION_NUMBER)] = x7_mean
    mean_w = mean_m.copy()
    mean_w[int(FeatureId.SLEEP_DURATION)] = design.woman_sleep_duration_mean
    mean_w[int(FeatureId.STEPS_GOAL_PCT)] += design.woman_shift_steps
    mean_w[int(FeatureId.PAIN_INTERFERE_1)] += design.woman_shift_pain1
    mean_w[int(FeatureId.PAIN_INTERFERE_2)] += design.woman_shift_pain2
    pop_mean = ((1.0 - design.woman_proportion) * mean_m
                + design.woman_proportion * mean_w)

    fixed = float(np.mean(kappas)) * float(u @ pop_mean)
    fixed += design.common_sleep_duration * pop_mean[int(FeatureId.SLEEP_DURATION)]
    fixed += design.common_pain1 * pop_mean[int(FeatureId.PAIN_INTERFERE_1)]
    prop_level = float(props @ pop_mean)
    if prop_level <= 0.0:
        raise ConfigurationError("common-weight proportions carry no level")
    scale = (design.target_uniform_base - fixed) / prop_level
    w_common = scale * props
    w_common[int(FeatureId.SLEEP_DURATION)] = design.common_sleep_duration
    w_common[int(FeatureId.PAIN_INTERFERE_1)] = design.common_pain1

    weights = np.empty((3, N_FEATURES))
    for a in range(3):
        weights[a] = kappas[a] * u + w_common
    return RewardModel(weights=weights, intercepts=np.zeros(3),
                       noise_stds=np.array(design.noise_stds))


def build_profile(design: ProfileDesign,
                  optimal_feature_set_index: int | None = None,
                  metadata: dict | None = None) -> EnvProfile:
    means, stds = _feature_mean_tables(design)
    profile = EnvProfile(
        woman_proportion=design.woman_proportion,
        cluster_distribution=np.full(N_CLUSTERS, 1.0 / N_CLUSTERS),
        session_distribution=np.full(N_SESSIONS, 1.0 / N_SESSIONS),
        feature_means=means,
        feature_stds=stds,
        reward_model=_reward_model(design),
        optimal_feature_set_index=optimal_feature_set_index,
        metadata=metadata if metadata is not None else dict(design.metadata),
    )
    return profile.validate()


def build_neutral_profile() -> EnvProfile:
    """Gender-blind profile: women's distributions copy men's everywhere."""
    design = ProfileDesign(
        woman_sleep_quality_std=ProfileDesign.base_stds[3],
        woman_sleep_duration_mean=ProfileDesign.base_means[4],
        woman_sleep_duration_std=ProfileDesign.base_stds[4],
        woman_shift_steps=0.0,
        woman_shift_pain1=0.0,
        woman_shift_pain2=0.0,
    )
    return build_profile(design, metadata={
        "name": "neutral",
        "description": "no gender-differential structure; uncalibrated",
    })


def build_calibrated_profile() -> EnvProfile:
    """The tuned profile; constants frozen from the offline calibration run.

    The optimal feature set index and the criterion table below come from
    the shipped calibration procedure (24 LinUCB runs of 50,000 steps per
    candidate set, equal-weight utility/fairness criterion, master seed
    20260810); the full set won with a non-overlapping 95% interval over
    the runner-up.
    """
    design = ProfileDesign()
    return build_profile(
        design,
        optimal_feature_set_index=0,
        metadata={
            "name": "calibrated",
            "hypothesis_config": {
                "women_better": [4],
                "women_worse": [1, 2, 3, 5],
                "neutral": [0],
            },
            "calibration": {
                "criterion_means": {
                    "0": 0.73072, "1": 0.71828, "2": 0.72609,
                    "3": 0.72683, "4": 0.72061, "5": 0.72729,
                },
                "runs_per_set": 24,
                "t": 50000,
                "master_seed": 20260810,
                "utility_weight": 0.5,
                "fairness_weight": 0.5,
                "warning": None,
            },
        })


PROFILE_BUILDERS = {
    "neutral": build_neutral_profile,
    "calibrated": build_calibrated_profile,
}


def load_profile(name_or_path: str | Path) -> EnvProfile:
    """Resolve a built-in profile name or load a profile JSON file.

    Anything that is not a registered name is treated as a path; missing or
    unreadable files surface as OSError (the CLI maps that to exit code 2),
    while structurally invalid documents raise ConfigurationError.
    """
    key = str(name_or_path)
    if key in PROFILE_BUILDERS:
        return PROFILE_BUILDERS[key]()
    return load_profile_file(Path(name_or_path))
