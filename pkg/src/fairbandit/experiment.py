"""Single-run simulation engines.

These drive the compiled kernels for a whole run and return a columnar
``RunLog``. They consume random numbers in exactly the same order as the
step-level operations (``sample_interaction`` -> select -> ``realize_reward``
-> update), so a trace produced here equals one produced by composing the
public single-step API, bit for bit.

Each run takes two independent streams: ``env_rng`` drives interactions and
reward noise, ``policy_rng`` drives Thompson Sampling draws. Plain LinUCB
never touches the policy stream, which is what makes the single-set nested
run reduce to plain LinUCB exactly.
"""

from __future__ import annotations

import numpy as np

from . import _kernels
from .environment import ACTION_DISCOUNTS, EnvProfile
from .metrics import RunLog
from .nested import FeatureSet, NestedState
from .policies import LinUCBState, linucb_init


def _alloc_outputs(t_steps: int):
    return dict(
        action_out=np.empty(t_steps, dtype=np.int8),
        reward_out=np.empty(t_steps, dtype=np.float64),
        gender_out=np.empty(t_steps, dtype=np.int8),
        cluster_out=np.empty(t_steps, dtype=np.int8),
        session_out=np.empty(t_steps, dtype=np.int8),
        opt_action_out=np.empty(t_steps, dtype=np.bool_),
    )


def simulate_linucb_run(profile: EnvProfile, feature_set: FeatureSet,
                        alpha: float, t_steps: int,
                        env_rng: np.random.Generator,
                        state: LinUCBState | None = None
                        ) -> tuple[RunLog, LinUCBState]:
    """Run plain LinUCB on one feature set for ``t_steps`` interactions."""
    wp, ccum, scum, means, stds = profile._sampling_arrays()
    rm = profile.reward_model
    if state is None:
        state = linucb_init(feature_set.dimension, alpha)
    out = _alloc_outputs(t_steps)
    _kernels.run_linucb_kernel(
        t_steps, feature_set.member_indices(), float(alpha),
        wp, ccum, scum, means, stds,
        rm.weights, rm.intercepts, np.asarray(ACTION_DISCOUNTS), rm.noise_stds,
        state.a_mat, state.a_inv, state.b, state.update_counts, env_rng,
        **out)
    opt_index = profile.optimal_feature_set_index
    if opt_index is None:
        opt_set = np.full(t_steps, -1, dtype=np.int8)
    else:
        opt_set = np.full(t_steps, int(feature_set.id == opt_index), dtype=np.int8)
    log = RunLog(
        t=np.arange(1, t_steps + 1, dtype=np.int64),
        set_id=np.full(t_steps, feature_set.id, dtype=np.int64),
        action=out["action_out"],
        reward=out["reward_out"],
        gender=out["gender_out"],
        cluster=out["cluster_out"],
        session=out["session_out"],
        is_optimal_action=out["opt_action_out"],
        is_optimal_set=opt_set,
    )
    return log, state


def simulate_nested_run(profile: EnvProfile, state: NestedState, t_steps: int,
                        env_rng: np.random.Generator,
                        policy_rng: np.random.Generator) -> RunLog:
    """Run the two-level policy for ``t_steps`` interactions, mutating ``state``."""
    wp, ccum, scum, means, stds = profile._sampling_arrays()
    rm = profile.reward_model
    sets = state.feature_sets
    n_sets = len(sets)
    d_max = max(fs.dimension for fs in sets)
    n_actions = state.level2[0].n_actions

    set_members = np.zeros((n_sets, d_max), dtype=np.int64)
    set_sizes = np.empty(n_sets, dtype=np.int64)
    a_mat = np.zeros((n_sets, n_actions, d_max, d_max))
    a_inv = np.zeros((n_sets, n_actions, d_max, d_max))
    b = np.zeros((n_sets, n_actions, d_max))
    counts = np.zeros((n_sets, n_actions), dtype=np.int64)
    for s, fs in enumerate(sets):
        d = fs.dimension
        set_members[s, :d] = fs.member_indices()
        set_sizes[s] = d
        l2 = state.level2[s]
        a_mat[s, :, :d, :d] = l2.a_mat
        a_inv[s, :, :d, :d] = l2.a_inv
        b[s, :, :d] = l2.b
        counts[s] = l2.update_counts
        # identity padding keeps the unused block harmless
        for i in range(d, d_max):
            a_mat[s, :, i, i] = 1.0
            a_inv[s, :, i, i] = 1.0

    declared_ids = np.array([fs.id for fs in sets], dtype=np.int64)
    opt_arm = -1
    if profile.optimal_feature_set_index is not None:
        hits = np.nonzero(declared_ids == profile.optimal_feature_set_index)[0]
        if hits.size:
            opt_arm = int(hits[0])

    out = _alloc_outputs(t_steps)
    set_out = np.empty(t_steps, dtype=np.int64)
    opt_set_out = np.empty(t_steps, dtype=np.int8)
    _kernels.run_nested_kernel(
        t_steps, set_members, set_sizes, float(state.level2[0].alpha),
        float(state.criterion.utility_weight), float(state.criterion.fairness_weight),
        opt_arm if profile.optimal_feature_set_index is not None else -2,
        wp, ccum, scum, means, stds,
        rm.weights, rm.intercepts, np.asarray(ACTION_DISCOUNTS), rm.noise_stds,
        state.level1.alphas, state.level1.betas,
        a_mat, a_inv, b, counts,
        state.tracker.counts, state.tracker.means,
        env_rng, policy_rng,
        set_out, out["action_out"], out["reward_out"], out["gender_out"],
        out["cluster_out"], out["session_out"], out["opt_action_out"], opt_set_out)

    for s, fs in enumerate(sets):
        d = fs.dimension
        l2 = state.level2[s]
        l2.a_mat[:] = a_mat[s, :, :d, :d]
        l2.a_inv[:] = a_inv[s, :, :d, :d]
        l2.b[:] = b[s, :, :d]
        l2.update_counts[:] = counts[s]
    start = state.steps_taken
    state.steps_taken += t_steps

    return RunLog(
        t=np.arange(start + 1, start + t_steps + 1, dtype=np.int64),
        set_id=declared_ids[set_out],
        action=out["action_out"],
        reward=out["reward_out"],
        gender=out["gender_out"],
        cluster=out["cluster_out"],
        session=out["session_out"],
        is_optimal_action=out["opt_action_out"],
        is_optimal_set=opt_set_out,
    )
