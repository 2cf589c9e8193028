"""Matched filter, conventional SIC, and blind adaptive SIC detectors.

These are the readable reference implementations; the Monte Carlo engine runs
a compiled equivalent (see _kernels) that is tested for decision equality
against this module.

The adaptive despreader minimizes the constant-modulus cost (z^2 - gamma)^2
per branch, then rescales its soft output by the chip-amplitude ratio of code
to weights before cancellation, so the cancellation term tracks the user's
actual received amplitude without training symbols.
"""

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .codes import SpreadingCode
from .frame import ReceivedFrame

WEIGHT_DIVERGENCE_LIMIT = 1e6


class CombinerKind(Enum):
    MRC = "mrc"  # lambda = true branch gain (perfect CSI)
    EGC = "egc"  # lambda = 1


class CmaDivergence(RuntimeError):
    """Despreader weights left the finite/bounded region; trial must abort."""


@dataclass(frozen=True)
class DespreaderState:
    weights: np.ndarray  # [N]
    mu: float
    gamma: float = 1.0

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "weights", w)
        # mu = 0 is allowed so the frozen-weights equivalence checks can run
        if self.mu < 0:
            raise ValueError(f"mu must be >= 0, got {self.mu}")


@dataclass(frozen=True)
class StageTrace:
    user: int
    z: np.ndarray  # soft output per branch
    alpha: np.ndarray  # scaling per branch (ones for CSIC)
    Z: float
    decision: int
    residual_energy: float


def init_despreader_states(codes, L: int, mu: float, gamma: float = 1.0):
    """Fresh per-(user, branch) states with weights at the user's code."""
    return [
        [DespreaderState(weights=c.chips.copy(), mu=mu, gamma=gamma) for _ in range(L)]
        for c in codes
    ]


def mf_despread(frame: ReceivedFrame, code: SpreadingCode) -> np.ndarray:
    if frame.chips.shape[1] != code.N:
        raise ValueError("code length does not match frame")
    return frame.chips @ code.chips


def rank_users(frame: ReceivedFrame, codes) -> np.ndarray:
    """Users by descending combined MF branch power, ties by ascending index."""
    K = len(codes)
    metric = np.empty(K)
    for k, code in enumerate(codes):
        z = mf_despread(frame, code)
        metric[k] = float(np.dot(z, z))
    return np.array(sorted(range(K), key=lambda k: (-metric[k], k)), dtype=np.int64)


def _branch_weights(combiner: CombinerKind, gains_k: np.ndarray) -> np.ndarray:
    if combiner is CombinerKind.MRC:
        return np.asarray(gains_k, dtype=np.float64)
    return np.ones(len(gains_k))


def csic_detect_and_cancel(frame, order, codes, gains, combiner):
    """Detect users strongest-first, subtracting each soft MF respread."""
    K = len(codes)
    if sorted(order) != list(range(K)):
        raise ValueError("order must be a permutation of all users")
    L = frame.chips.shape[0]
    residual = frame.chips.copy()
    decisions = np.zeros(K, dtype=np.int64)
    trace = []
    for u in order:
        code = codes[u]
        z = residual @ code.chips
        lam = _branch_weights(combiner, gains[u])
        Z = combine(z, lam)
        decisions[u] = hard_decision(Z)
        for l in range(L):
            residual[l] -= z[l] * code.chips
        trace.append(
            StageTrace(
                user=int(u),
                z=z,
                alpha=np.ones(L),
                Z=Z,
                decision=int(decisions[u]),
                residual_energy=float(np.sum(residual * residual)),
            )
        )
    return decisions, trace


def cm_cost(z: float, gamma: float = 1.0) -> float:
    return float((z * z - gamma) ** 2)


def cm_error(z: float, gamma: float) -> float:
    return float(z * (z * z - gamma))


def cma_update(
    state: DespreaderState, residual_chips: np.ndarray, z: float
) -> DespreaderState:
    """Stochastic-gradient step on the constant-modulus cost."""
    e = cm_error(z, state.gamma)
    w = state.weights - state.mu * residual_chips * e
    if not np.all(np.isfinite(w)) or np.max(np.abs(w)) > WEIGHT_DIVERGENCE_LIMIT:
        raise CmaDivergence("CMA divergence: despreader weights unbounded")
    return replace(state, weights=w)


def scaling_factor(state: DespreaderState, code: SpreadingCode) -> float:
    """Mean chip amplitude of the code over mean amplitude of the weights."""
    w_mean = float(np.mean(np.abs(state.weights)))
    if w_mean == 0:
        raise ValueError("degenerate despreader: all-zero weights")
    c_mean = float(np.mean(np.abs(code.chips)))
    return c_mean / w_mean


def asic_stage(frame_residual, states_k, code, m):
    """One user's adaptive stage over all branches.

    Per branch: despread with the adaptive weights, take the CMA gradient
    step, rescale by the post-update chip-amplitude ratio, cancel.  Returns
    (z per branch, new residual, updated states, alpha per branch).
    """
    L = frame_residual.shape[0]
    z = np.empty(L)
    alpha = np.empty(L)
    new_residual = frame_residual.copy()
    updated = []
    for l in range(L):
        st = states_k[l]
        z[l] = float(np.dot(st.weights, frame_residual[l]))
        st = cma_update(st, frame_residual[l], z[l])
        alpha[l] = scaling_factor(st, code)
        new_residual[l] -= alpha[l] * z[l] * code.chips
        updated.append(st)
    return z, new_residual, updated, alpha


def combine(z: np.ndarray, lam: np.ndarray) -> float:
    if len(z) != len(lam):
        raise ValueError("combiner weight length does not match branches")
    return float(np.dot(z, lam))


def hard_decision(Z: float) -> int:
    if not np.isfinite(Z):
        raise ValueError(f"decision statistic must be finite, got {Z}")
    return 1 if Z >= 0 else -1


def asic_receive_symbol(frame, states, codes, gains, combiner):
    """Full adaptive SIC pass over one symbol: rank, stage per user, combine.

    ``states`` is [K][L] keyed by user identity; ranking is recomputed every
    symbol while weights persist across symbols.
    """
    K = len(codes)
    order = rank_users(frame, codes)
    residual = frame.chips.copy()
    decisions = np.zeros(K, dtype=np.int64)
    new_states = list(states)
    trace = []
    for u in order:
        z, residual, updated, alpha = asic_stage(
            residual, states[u], codes[u], frame.symbol_index
        )
        new_states[u] = updated
        lam = _branch_weights(combiner, gains[u])
        Z = combine(z, lam)
        decisions[u] = hard_decision(Z)
        trace.append(
            StageTrace(
                user=int(u),
                z=z,
                alpha=alpha,
                Z=Z,
                decision=int(decisions[u]),
                residual_energy=float(np.sum(residual * residual)),
            )
        )
    return decisions, trace, new_states
