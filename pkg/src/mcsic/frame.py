"""Per-symbol received chip matrix synthesis.

The discrete model is real valued: carrier and fading phases are assumed
perfectly known and compensated, so each user contributes
sqrt(P_k/L) * g_{k,l}(m) * b_k(m) * c_k(n) per branch, plus white noise.
"""

from dataclasses import dataclass

import numpy as np

from .codes import SpreadingCode


@dataclass(frozen=True)
class UserSource:
    bits: np.ndarray  # +-1 per symbol
    power: float  # linear
    code: SpreadingCode

    def __post_init__(self):
        bits = np.asarray(self.bits)
        object.__setattr__(self, "bits", bits)
        if not np.all(np.abs(bits) == 1):
            raise ValueError("bits must be exactly +-1")
        if self.power < 0:
            raise ValueError(f"power must be >= 0, got {self.power}")


@dataclass(frozen=True)
class ReceivedFrame:
    chips: np.ndarray  # [L, N]
    symbol_index: int

    def __post_init__(self):
        if not np.all(np.isfinite(self.chips)):
            raise ValueError("frame chips must be finite")


def synthesize_frame(
    sources,
    gains: np.ndarray,
    sigma: float,
    rng: np.random.Generator,
    symbol_index: int = 0,
) -> ReceivedFrame:
    """Sum all users' spread contributions for one symbol and add noise.

    ``gains`` is [K, L] for this symbol; user k sends bit
    ``sources[k].bits[symbol_index]``.
    """
    gains = np.asarray(gains, dtype=np.float64)
    K, L = gains.shape
    if len(sources) != K:
        raise ValueError(f"{len(sources)} sources but gains for {K} users")
    if np.any(gains < 0):
        raise ValueError("gains must be nonnegative")
    N = sources[0].code.N
    for s in sources:
        if s.code.N != N:
            raise ValueError(f"mismatched code lengths: {s.code.N} vs {N}")

    chips = np.zeros((L, N))
    for k, src in enumerate(sources):
        amp = np.sqrt(src.power / L) * float(src.bits[symbol_index])
        for l in range(L):
            chips[l] += amp * gains[k, l] * src.code.chips
    if sigma > 0:
        chips += sigma * rng.standard_normal((L, N))
    return ReceivedFrame(chips=chips, symbol_index=symbol_index)


def sigma_from_ebn0(ebn0_db: float, P_desired: float) -> float:
    """Noise standard deviation for a target Eb/N0 at the desired user's power."""
    if not P_desired > 0:
        raise ValueError(f"P_desired must be > 0, got {P_desired}")
    return float(np.sqrt(P_desired / (2.0 * 10.0 ** (ebn0_db / 10.0))))
