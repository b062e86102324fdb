"""Base decision policies: LinUCB and Beta-Bernoulli Thompson Sampling.

LinUCB keeps, per action, the ridge design matrix A = I + sum(x x') and the
response vector b = sum(r x); selection scores are theta . x plus an
exploration bonus alpha * sqrt(x' A^-1 x). Thompson Sampling keeps one Beta
posterior per arm, updated through a Bernoulli trial on the (clipped)
reward. Both break argmax ties toward the lowest index so that runs replay
deterministically.

States are single-owner mutable values; the update operations mutate in
place and return the state for convenience.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import ConfigurationError, ContractViolationError

POLICY_SCHEMA_VERSION = 1

#: Context vectors are plain float arrays with entries in [0, 1].
ContextVector = np.ndarray


@dataclass
class LinUCBState:
    """Per-action design matrices and response vectors plus the alpha knob.

    ``a_inv`` caches the inverses, maintained by Sherman-Morrison updates and
    recomputed exactly every ``_kernels.INVERSE_REFRESH_EVERY`` updates per
    action; ``a_mat`` always holds the exact I + sum(x x').
    """

    alpha: float
    d: int
    n_actions: int
    a_mat: np.ndarray         # (K, d, d)
    a_inv: np.ndarray         # (K, d, d)
    b: np.ndarray             # (K, d)
    update_counts: np.ndarray  # (K,) int64

    def copy(self) -> "LinUCBState":
        return LinUCBState(self.alpha, self.d, self.n_actions,
                           self.a_mat.copy(), self.a_inv.copy(),
                           self.b.copy(), self.update_counts.copy())


@dataclass
class TSState:
    """Beta posterior parameters, one (alpha, beta) pair per arm."""

    alphas: np.ndarray
    betas: np.ndarray

    @property
    def n_arms(self) -> int:
        return self.alphas.shape[0]

    def copy(self) -> "TSState":
        return TSState(self.alphas.copy(), self.betas.copy())


# ---------------------------------------------------------------------------
# LinUCB operations
# ---------------------------------------------------------------------------

def linucb_init(d: int, alpha: float, n_actions: int = 3) -> LinUCBState:
    """Fresh state: identity matrices, zero vectors."""
    if d < 1:
        raise ConfigurationError("context dimension d must be >= 1")
    if alpha < 0.0:
        raise ConfigurationError("alpha must be >= 0")
    if n_actions < 1:
        raise ConfigurationError("n_actions must be >= 1")
    eye = np.eye(d)
    return LinUCBState(
        alpha=float(alpha), d=int(d), n_actions=int(n_actions),
        a_mat=np.repeat(eye[None, :, :], n_actions, axis=0),
        a_inv=np.repeat(eye[None, :, :], n_actions, axis=0),
        b=np.zeros((n_actions, d)),
        update_counts=np.zeros(n_actions, dtype=np.int64),
    )


def _check_context(state: LinUCBState, context: ContextVector) -> np.ndarray:
    x = np.asarray(context, dtype=np.float64)
    if x.shape != (state.d,):
        raise ContractViolationError(
            f"context dimension {x.shape} does not match state d={state.d}")
    return x


def linucb_select(state: LinUCBState, context: ContextVector) -> tuple[int, np.ndarray]:
    """Return (argmax action, per-action scores); does not mutate the state."""
    x = _check_context(state, context)
    scores = np.empty(state.n_actions)
    action = _kernels.linucb_scores_kernel(state.a_inv, state.b,
                                           state.alpha, x, scores)
    return int(action), scores


def linucb_update(state: LinUCBState, action: int, context: ContextVector,
                  reward: float) -> LinUCBState:
    """A_a += x x', b_a += reward * x for the chosen action only."""
    x = _check_context(state, context)
    if not 0 <= int(action) < state.n_actions:
        raise ContractViolationError(f"action {action} out of range")
    _kernels.linucb_update_kernel(state.a_mat, state.a_inv, state.b,
                                  state.update_counts, int(action), x,
                                  float(reward))
    return state


# ---------------------------------------------------------------------------
# Thompson Sampling operations
# ---------------------------------------------------------------------------

def ts_init(priors: Sequence[tuple[float, float]]) -> TSState:
    """Store the given Beta(alpha, beta) priors verbatim."""
    if len(priors) < 1:
        raise ConfigurationError("at least one arm is required")
    alphas = np.array([float(a) for a, _ in priors])
    betas = np.array([float(b) for _, b in priors])
    if np.any(alphas <= 0.0) or np.any(betas <= 0.0):
        raise ConfigurationError("Beta parameters must be > 0")
    return TSState(alphas=alphas, betas=betas)


def ts_select(state: TSState, rng: np.random.Generator) -> int:
    """Sample each arm's posterior, return the argmax arm; no mutation."""
    samples = np.empty(state.n_arms)
    return int(_kernels.ts_select_kernel(state.alphas, state.betas, rng, samples))


def ts_update(state: TSState, arm: int, reward: float,
              rng: np.random.Generator) -> TSState:
    """Bernoulli trial with success probability ``reward``; increment one side."""
    if not 0 <= int(arm) < state.n_arms:
        raise ContractViolationError(f"arm {arm} out of range")
    if not 0.0 <= reward <= 1.0:
        raise ContractViolationError(
            f"ts_update reward must lie in [0, 1], got {reward}")
    _kernels.ts_update_kernel(state.alphas, state.betas, int(arm),
                              float(reward), rng)
    return state


# ---------------------------------------------------------------------------
# checkpoint serialization
# ---------------------------------------------------------------------------

def linucb_state_to_dict(state: LinUCBState) -> dict:
    """Versioned JSON document; matrices stored row-major.

    The cached inverse is stored too so a resumed run replays bit-identically.
    """
    return {
        "schema_version": POLICY_SCHEMA_VERSION,
        "policy": "linucb",
        "alpha": state.alpha,
        "d": state.d,
        "n_actions": state.n_actions,
        "a_mat": state.a_mat.tolist(),
        "a_inv": state.a_inv.tolist(),
        "b": state.b.tolist(),
        "update_counts": state.update_counts.tolist(),
    }


def linucb_state_from_dict(doc: dict) -> LinUCBState:
    if doc.get("schema_version") != POLICY_SCHEMA_VERSION or doc.get("policy") != "linucb":
        raise ConfigurationError("not a supported LinUCB checkpoint document")
    d = int(doc["d"])
    n_actions = int(doc["n_actions"])
    state = LinUCBState(
        alpha=float(doc["alpha"]), d=d, n_actions=n_actions,
        a_mat=np.asarray(doc["a_mat"], dtype=np.float64),
        a_inv=np.asarray(doc["a_inv"], dtype=np.float64),
        b=np.asarray(doc["b"], dtype=np.float64),
        update_counts=np.asarray(doc["update_counts"], dtype=np.int64),
    )
    if state.a_mat.shape != (n_actions, d, d) or state.b.shape != (n_actions, d):
        raise ConfigurationError("checkpoint arrays have inconsistent shapes")
    return state


def ts_state_to_dict(state: TSState) -> dict:
    return {
        "schema_version": POLICY_SCHEMA_VERSION,
        "policy": "thompson",
        "alphas": state.alphas.tolist(),
        "betas": state.betas.tolist(),
    }


def ts_state_from_dict(doc: dict) -> TSState:
    if doc.get("schema_version") != POLICY_SCHEMA_VERSION or doc.get("policy") != "thompson":
        raise ConfigurationError("not a supported Thompson Sampling checkpoint document")
    state = TSState(alphas=np.asarray(doc["alphas"], dtype=np.float64),
                    betas=np.asarray(doc["betas"], dtype=np.float64))
    if state.alphas.shape != state.betas.shape or state.alphas.ndim != 1:
        raise ConfigurationError("checkpoint arrays have inconsistent shapes")
    return state
