"""Closed-form and exhaustive reference results used to validate the simulator."""

from dataclasses import dataclass
from math import comb, sqrt

import numpy as np

from .receivers import CombinerKind

BRUTE_FORCE_MAX_USERS = 4
BRUTE_FORCE_MAX_N = 8


@dataclass(frozen=True)
class DiversityBerQuery:
    ebn0_db: float
    L: int
    combiner: CombinerKind

    def __post_init__(self):
        if self.L < 1:
            raise ValueError(f"L must be >= 1, got {self.L}")


def su_mrc_ber(ebn0_db: float, L: int) -> float:
    """BPSK bit error rate, L-branch MRC over independent flat Rayleigh fading.

    Total Eb/N0 is split evenly across branches, so the per-branch average
    SNR is 10^(ebn0/10) / L.
    """
    if L < 1:
        raise ValueError(f"L must be >= 1, got {L}")
    gamma_c = 10.0 ** (ebn0_db / 10.0) / L
    p = 0.5 * (1.0 - sqrt(gamma_c / (1.0 + gamma_c)))
    return p**L * sum(comb(L - 1 + i, i) * (1.0 - p) ** i for i in range(L))


def brute_force_multiuser(
    bits,
    codes,
    powers,
    gains,
    receiver_kind: str,
    combiner: CombinerKind = CombinerKind.EGC,
    noise=None,
    mu: float = 0.0,
    gamma: float = 1.0,
):
    """Direct plain-loop evaluation of one symbol for any of the receivers.

    Kept deliberately free of shared code with the receiver module so the
    two can cross-check each other.  ``noise``, if given, is a fixed [L, N]
    matrix added to the synthesized chips.  Returns +-1 decisions per user.
    """
    K = len(bits)
    N = codes[0].N
    if K > BRUTE_FORCE_MAX_USERS or N > BRUTE_FORCE_MAX_N:
        raise ValueError(f"instance too large: K={K}, N={N}")
    L = len(gains[0])

    r = [[0.0] * N for _ in range(L)]
    for l in range(L):
        for n in range(N):
            acc = 0.0
            for k in range(K):
                acc += (
                    sqrt(powers[k] / L)
                    * gains[k][l]
                    * bits[k]
                    * float(codes[k].chips[n])
                )
            if noise is not None:
                acc += float(noise[l][n])
            r[l][n] = acc

    def despread(vec, weights):
        return sum(weights[n] * vec[n] for n in range(N))

    def lam(k, l):
        return float(gains[k][l]) if combiner is CombinerKind.MRC else 1.0

    def decide(Z):
        return 1 if Z >= 0 else -1

    decisions = [0] * K
    if receiver_kind == "mf":
        for k in range(K):
            Z = sum(lam(k, l) * despread(r[l], codes[k].chips) for l in range(L))
            decisions[k] = decide(Z)
        return decisions

    metric = [
        sum(despread(r[l], codes[k].chips) ** 2 for l in range(L)) for k in range(K)
    ]
    order = sorted(range(K), key=lambda k: (-metric[k], k))

    if receiver_kind == "csic":
        for k in order:
            Z = 0.0
            for l in range(L):
                z = despread(r[l], codes[k].chips)
                Z += lam(k, l) * z
                for n in range(N):
                    r[l][n] -= z * float(codes[k].chips[n])
            decisions[k] = decide(Z)
        return decisions

    if receiver_kind == "asic":
        weights = [[list(codes[k].chips) for _ in range(L)] for k in range(K)]
        c_mean = [sum(abs(float(c)) for c in codes[k].chips) / N for k in range(K)]
        for k in order:
            Z = 0.0
            for l in range(L):
                w = weights[k][l]
                z = despread(r[l], w)
                e = z * (z * z - gamma)
                for n in range(N):
                    w[n] -= mu * r[l][n] * e
                w_mean = sum(abs(wn) for wn in w) / N
                alpha = c_mean[k] / w_mean
                Z += lam(k, l) * z
                for n in range(N):
                    r[l][n] -= alpha * z * float(codes[k].chips[n])
            decisions[k] = decide(Z)
        return decisions

    raise ValueError(f"unknown receiver kind {receiver_kind!r}")
