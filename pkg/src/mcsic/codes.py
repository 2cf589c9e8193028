"""Spreading sequences: length-31 Gold family plus a tiny Walsh set for hand checks.

All users share one code family.  Chips are antipodal and scaled to 1/sqrt(N)
so every code has unit energy over a symbol.
"""

from dataclasses import dataclass, field

import numpy as np

# preferred pair of degree-5 primitive polynomials, bit j = coefficient of x^j
POLY_A = 0b100101  # x^5 + x^2 + 1
POLY_B = 0b111101  # x^5 + x^4 + x^3 + x^2 + 1

GOLD_N = 31
GOLD_FAMILY_SIZE = 33


@dataclass(frozen=True)
class SpreadingCode:
    chips: np.ndarray
    family_index: int
    N: int

    def __post_init__(self):
        chips = np.asarray(self.chips, dtype=np.float64)
        chips.setflags(write=False)
        object.__setattr__(self, "chips", chips)
        if chips.shape != (self.N,):
            raise ValueError(f"expected {self.N} chips, got shape {chips.shape}")
        scale = 1.0 / np.sqrt(self.N)
        if not np.all(np.abs(chips) == scale):
            raise ValueError("chip magnitudes must all equal 1/sqrt(N)")
        energy = float(np.dot(chips, chips))
        if abs(energy - 1.0) > 1e-12:
            raise ValueError(f"code energy {energy} not within 1e-12 of 1")


@dataclass(frozen=True)
class GoldFamily:
    codes: list = field(repr=False)
    preferred_pair: tuple

    def codes_for_users(self, K: int) -> list:
        # user k always gets family member k, regardless of power ordering
        if not 1 <= K <= len(self.codes):
            raise ValueError(f"K={K} outside 1..{len(self.codes)}")
        return self.codes[:K]


def generate_mseq(polynomial: int, seed_state: int) -> np.ndarray:
    """Run a Fibonacci LFSR and return one full period as a 0/1 vector.

    ``polynomial`` is a bit-mask with bit j holding the coefficient of x^j;
    the degree is taken from the top set bit.  ``seed_state`` bit j is the
    j-th output, so the first emitted bit is bit 0 of the seed.
    """
    if seed_state == 0:
        raise ValueError("degenerate LFSR state")
    degree = polynomial.bit_length() - 1
    if degree < 2:
        raise ValueError(f"polynomial 0b{polynomial:b} has degree {degree}")
    period = (1 << degree) - 1
    if seed_state >= (1 << degree):
        raise ValueError(f"seed 0b{seed_state:b} wider than {degree} bits")
    taps = [j for j in range(degree) if (polynomial >> j) & 1]

    state = [(seed_state >> j) & 1 for j in range(degree)]
    initial = tuple(state)
    out = np.empty(period, dtype=np.int8)
    for n in range(period):
        out[n] = state[0]
        fb = 0
        for j in taps:
            fb ^= state[j]
        state = state[1:] + [fb]
        # a primitive polynomial cycles through all 2^degree - 1 nonzero
        # states; an early return to the seed means a shorter period
        if tuple(state) == initial and n != period - 1:
            raise ValueError(
                f"polynomial 0b{polynomial:b} is not primitive "
                f"(period {n + 1} < {period})"
            )
    return out


def _antipodal(bits: np.ndarray) -> np.ndarray:
    # 0 -> +1/sqrt(N), 1 -> -1/sqrt(N)
    n = bits.shape[0]
    return np.where(bits == 0, 1.0, -1.0) / np.sqrt(n)


def generate_gold_family(pair: tuple = (POLY_A, POLY_B)) -> GoldFamily:
    """Build the 33-member Gold family for a degree-5 preferred pair.

    Members 0..30 are m1 XOR (m2 advanced by i); members 31 and 32 are the
    two m-sequences themselves.  The combinations come first because any two
    of them (and any of them with m1) are mutually near-orthogonal at zero
    shift, which keeps low-index user sets well conditioned.  The family is
    rejected unless every distinct pair at every shift lands in the
    three-valued Gold spectrum.
    """
    poly_a, poly_b = pair
    m1 = generate_mseq(poly_a, 0b00001)
    m2 = generate_mseq(poly_b, 0b00001)
    if m1.shape[0] != GOLD_N or m2.shape[0] != GOLD_N:
        raise ValueError("preferred pair must have degree 5")

    members = [np.bitwise_xor(m1, np.roll(m2, -i)) for i in range(GOLD_N)]
    members.append(m1)
    members.append(m2)

    chips = np.stack([_antipodal(m) for m in members])
    _check_three_valued(chips, pair)

    codes = [
        SpreadingCode(chips=chips[i], family_index=i, N=GOLD_N)
        for i in range(GOLD_FAMILY_SIZE)
    ]
    return GoldFamily(codes=codes, preferred_pair=(poly_a, poly_b))


def _check_three_valued(chips: np.ndarray, pair: tuple) -> None:
    # exhaustive: every distinct pair, every cyclic shift
    count, n = chips.shape
    allowed = {-9, -1, 7}
    for shift in range(n):
        corr = chips @ np.roll(chips, -shift, axis=1).T
        raw = np.rint(corr * n).astype(np.int64)
        for i in range(count):
            for j in range(i + 1, count):
                if int(raw[i, j]) not in allowed:
                    raise ValueError(
                        f"pair 0b{pair[0]:b}, 0b{pair[1]:b} is not preferred: "
                        f"members {i},{j} at shift {shift} correlate to "
                        f"{int(raw[i, j])}"
                    )


def cross_correlation(a: SpreadingCode, b: SpreadingCode, shift: int) -> float:
    """Periodic cross-correlation sum_n a(n) * b((n + shift) mod N)."""
    if a.N != b.N:
        raise ValueError(f"code lengths differ: {a.N} vs {b.N}")
    return float(np.dot(a.chips, np.roll(b.chips, -shift)))


def walsh4_codes() -> list:
    """Four orthogonal length-4 codes for brute-force oracle tests."""
    h = np.array(
        [
            [1, 1, 1, 1],
            [1, -1, 1, -1],
            [1, 1, -1, -1],
            [1, -1, -1, 1],
        ],
        dtype=np.float64,
    )
    return [
        SpreadingCode(chips=h[i] / 2.0, family_index=i, N=4) for i in range(4)
    ]
