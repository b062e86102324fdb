"""Compiled inner loops.

Every numerical path in the package funnels through these kernels: the
public operations wrap them one call at a time, and the run engines in
``experiment`` drive them in a loop. Sharing one implementation keeps
single-step calls and full runs bit-identical for the same random streams.

Random stream discipline (fixed so traces replay exactly):

* one interaction consumes 3 uniforms (gender, cluster, session) then
  8 normals (feature noise, session feature overwritten afterwards);
* one realized reward consumes 1 normal;
* one Thompson selection over K arms consumes K beta draws;
* one Thompson update consumes 1 uniform (the Bernoulli trial).
"""

from __future__ import annotations

import numpy as np
from numba import njit

# Recompute the cached inverse from scratch after this many rank-one
# updates per action; bounds Sherman-Morrison drift well below 1e-9.
INVERSE_REFRESH_EVERY = 256


# ---------------------------------------------------------------------------
# environment
# ---------------------------------------------------------------------------

@njit(cache=True)
def draw_categorical(cumulative, rng):
    u = rng.random()
    for i in range(cumulative.shape[0]):
        if u < cumulative[i]:
            return i
    return cumulative.shape[0] - 1


@njit(cache=True)
def sample_interaction_kernel(woman_proportion, cluster_cum, session_cum,
                              means, stds, rng):
    """Draw (gender, cluster0, session0, features) from the profile.

    ``cluster0``/``session0`` are zero-based; the feature vector is clipped
    to [0, 1] and the session feature is overwritten with session0 / 9.
    """
    g = 1 if rng.random() < woman_proportion else 0
    c = draw_categorical(cluster_cum, rng)
    s = draw_categorical(session_cum, rng)
    x = np.empty(8)
    for f in range(8):
        v = means[g, c, s, f] + rng.normal(0.0, stds[g, c, s, f])
        if v < 0.0:
            v = 0.0
        elif v > 1.0:
            v = 1.0
        x[f] = v
    x[7] = s / 9.0
    return g, c, s, x


@njit(cache=True)
def base_reward_kernel(weights, intercepts, x, action):
    """Undiscounted expected reward: clip(intercept + w . x, 0, 1)."""
    v = intercepts[action]
    for f in range(x.shape[0]):
        v += weights[action, f] * x[f]
    if v < 0.0:
        v = 0.0
    elif v > 1.0:
        v = 1.0
    return v


@njit(cache=True)
def expected_reward_kernel(weights, intercepts, discounts, x, action):
    return base_reward_kernel(weights, intercepts, x, action) + discounts[action]


@njit(cache=True)
def optimal_action_kernel(weights, intercepts, discounts, x):
    best = 0
    best_val = expected_reward_kernel(weights, intercepts, discounts, x, 0)
    for a in range(1, discounts.shape[0]):
        v = expected_reward_kernel(weights, intercepts, discounts, x, a)
        if v > best_val:
            best_val = v
            best = a
    return best


@njit(cache=True)
def realize_reward_kernel(weights, intercepts, discounts, noise_stds,
                          x, action, rng):
    base = base_reward_kernel(weights, intercepts, x, action)
    v = base + rng.normal(0.0, noise_stds[action])
    if v < 0.0:
        v = 0.0
    elif v > 1.0:
        v = 1.0
    return v + discounts[action]


# ---------------------------------------------------------------------------
# LinUCB
# ---------------------------------------------------------------------------

@njit(cache=True)
def linucb_scores_kernel(a_inv, b, alpha, x, scores):
    """Fill ``scores`` with theta_a . x + alpha * sqrt(x' A_a^-1 x); return argmax."""
    n_actions = b.shape[0]
    d = x.shape[0]
    best = 0
    best_score = -np.inf
    for a in range(n_actions):
        mean = 0.0
        quad = 0.0
        for i in range(d):
            row_b = 0.0
            row_x = 0.0
            for j in range(d):
                row_b += a_inv[a, i, j] * b[a, j]
                row_x += a_inv[a, i, j] * x[j]
            mean += row_b * x[i]
            quad += row_x * x[i]
        if quad < 0.0:
            quad = 0.0
        s = mean + alpha * np.sqrt(quad)
        scores[a] = s
        if s > best_score:
            best_score = s
            best = a
    return best


@njit(cache=True)
def linucb_update_kernel(a_mat, a_inv, b, counts, action, x, reward):
    """In-place A += x x', b += r x, Sherman-Morrison refresh of the inverse."""
    d = x.shape[0]
    for i in range(d):
        for j in range(d):
            a_mat[action, i, j] += x[i] * x[j]
        b[action, i] += reward * x[i]
    ainv_x = np.empty(d)
    denom = 1.0
    for i in range(d):
        s = 0.0
        for j in range(d):
            s += a_inv[action, i, j] * x[j]
        ainv_x[i] = s
        denom += s * x[i]
    for i in range(d):
        for j in range(d):
            a_inv[action, i, j] -= ainv_x[i] * ainv_x[j] / denom
    counts[action] += 1
    if counts[action] % INVERSE_REFRESH_EVERY == 0:
        a_inv[action] = np.linalg.inv(a_mat[action])


# ---------------------------------------------------------------------------
# Thompson Sampling
# ---------------------------------------------------------------------------

@njit(cache=True)
def ts_select_kernel(alphas, betas, rng, samples):
    best = 0
    best_val = -np.inf
    for a in range(alphas.shape[0]):
        v = rng.beta(alphas[a], betas[a])
        samples[a] = v
        if v > best_val:
            best_val = v
            best = a
    return best


@njit(cache=True)
def ts_update_kernel(alphas, betas, arm, reward, rng):
    """Bernoulli trial with success probability ``reward``; returns the outcome."""
    if rng.random() < reward:
        alphas[arm] += 1.0
        return 1
    betas[arm] += 1.0
    return 0


# ---------------------------------------------------------------------------
# run engines
# ---------------------------------------------------------------------------

@njit(cache=True)
def run_linucb_kernel(t_steps, members, alpha,
                      woman_proportion, cluster_cum, session_cum,
                      means, stds, weights, intercepts, discounts, noise_stds,
                      a_mat, a_inv, b, counts, env_rng,
                      action_out, reward_out, gender_out, cluster_out,
                      session_out, opt_action_out):
    """Plain LinUCB on one feature set for ``t_steps`` interactions.

    Mutates the policy state arrays in place and fills the per-step logs.
    """
    d = members.shape[0]
    x_s = np.empty(d)
    scores = np.empty(b.shape[0])
    for t in range(t_steps):
        g, c, s, x = sample_interaction_kernel(
            woman_proportion, cluster_cum, session_cum, means, stds, env_rng)
        for i in range(d):
            x_s[i] = x[members[i]]
        action = linucb_scores_kernel(a_inv, b, alpha, x_s, scores)
        reward = realize_reward_kernel(
            weights, intercepts, discounts, noise_stds, x, action, env_rng)
        linucb_update_kernel(a_mat, a_inv, b, counts, action, x_s, reward)
        opt = optimal_action_kernel(weights, intercepts, discounts, x)
        action_out[t] = action
        reward_out[t] = reward
        gender_out[t] = g
        cluster_out[t] = c + 1
        session_out[t] = s + 1
        opt_action_out[t] = action == opt


@njit(cache=True)
def run_nested_kernel(t_steps, set_members, set_sizes, alpha,
                      utility_weight, fairness_weight, optimal_set_index,
                      woman_proportion, cluster_cum, session_cum,
                      means, stds, weights, intercepts, discounts, noise_stds,
                      ts_alphas, ts_betas,
                      a_mat, a_inv, b, counts,
                      tracker_counts, tracker_means,
                      env_rng, policy_rng,
                      set_out, action_out, reward_out, gender_out,
                      cluster_out, session_out, opt_action_out, opt_set_out):
    """Two-level run: Thompson Sampling over feature sets above per-set LinUCB.

    Level-2 state arrays are padded to the widest set; only the leading
    ``set_sizes[s]`` rows/columns of set ``s`` are touched. Pass
    ``optimal_set_index`` -2 for "unknown": ``opt_set_out`` is then -1
    instead of a 0/1 flag.
    """
    n_sets = set_sizes.shape[0]
    n_actions = b.shape[1]
    d_max = set_members.shape[1]
    x_s = np.empty(d_max)
    samples = np.empty(n_sets)
    scores = np.empty(n_actions)
    for t in range(t_steps):
        g, c, s, x = sample_interaction_kernel(
            woman_proportion, cluster_cum, session_cum, means, stds, env_rng)
        chosen_set = ts_select_kernel(ts_alphas, ts_betas, policy_rng, samples)
        d = set_sizes[chosen_set]
        for i in range(d):
            x_s[i] = x[set_members[chosen_set, i]]
        action = linucb_scores_kernel(
            a_inv[chosen_set], b[chosen_set], alpha, x_s[:d], scores)
        reward = realize_reward_kernel(
            weights, intercepts, discounts, noise_stds, x, action, env_rng)
        linucb_update_kernel(a_mat[chosen_set], a_inv[chosen_set],
                             b[chosen_set], counts[chosen_set],
                             action, x_s[:d], reward)
        # running per-set, per-gender reward means feed the fairness term
        tracker_counts[chosen_set, g] += 1
        tracker_means[chosen_set, g] += (
            reward - tracker_means[chosen_set, g]) / tracker_counts[chosen_set, g]
        if tracker_counts[chosen_set, 0] > 0 and tracker_counts[chosen_set, 1] > 0:
            gap = abs(tracker_means[chosen_set, 0] - tracker_means[chosen_set, 1])
        else:
            gap = 0.0
        r_clip = reward
        if r_clip < 0.0:
            r_clip = 0.0
        elif r_clip > 1.0:
            r_clip = 1.0
        feedback = utility_weight * r_clip + fairness_weight * (1.0 - gap)
        if feedback < 0.0:
            feedback = 0.0
        elif feedback > 1.0:
            feedback = 1.0
        ts_update_kernel(ts_alphas, ts_betas, chosen_set, feedback, policy_rng)
        opt = optimal_action_kernel(weights, intercepts, discounts, x)
        set_out[t] = chosen_set
        action_out[t] = action
        reward_out[t] = reward
        gender_out[t] = g
        cluster_out[t] = c + 1
        session_out[t] = s + 1
        opt_action_out[t] = action == opt
        if optimal_set_index == -2:
            opt_set_out[t] = -1
        else:
            opt_set_out[t] = 1 if chosen_set == optimal_set_index else 0
