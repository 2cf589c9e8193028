"""Compiled per-trial symbol loop.

One kernel covers all three receivers so paired comparisons reuse identical
realizations.  Arithmetic is plain sequential IEEE (no fastmath): results are
bit-reproducible and the decision stream matches the reference implementations
in receivers.py (asserted by tests on random instances).
"""

import numpy as np
from numba import njit

RECEIVER_MF = 0
RECEIVER_CSIC = 1
RECEIVER_ASIC = 2

WEIGHT_LIMIT = 1e6


@njit(cache=True)
def run_trial(
    codes,  # [K, N] chip matrix
    amps,  # [K] sqrt(P_k / L)
    gains,  # [M, K, L] fading amplitudes
    bits,  # [M, K] +-1
    noise,  # [M, L, N] standard normal, scaled by sigma here
    sigma,
    receiver,
    use_mrc,
    mu,
    gamma,
    weights,  # [K, L, N] adaptive state, mutated in place
    warmup,
    measure,  # [K] bool
):
    """Returns (errors, measured_symbols, fault, sign_flips).

    A fault (weights non-finite or beyond WEIGHT_LIMIT) aborts the trial
    immediately; the caller discards the partial counts.
    """
    M, K, L = gains.shape
    N = codes.shape[1]
    r = np.empty((L, N))
    metric = np.empty(K)
    order = np.empty(K, np.int64)
    errors = np.int64(0)
    counted = np.int64(0)
    flips = np.int64(0)
    sqrt_n = np.sqrt(N)

    for m in range(M):
        for l in range(L):
            for n in range(N):
                r[l, n] = sigma * noise[m, l, n]
        for k in range(K):
            for l in range(L):
                a = amps[k] * gains[m, k, l] * bits[m, k]
                for n in range(N):
                    r[l, n] += a * codes[k, n]

        if receiver == RECEIVER_MF:
            for k in range(K):
                Z = 0.0
                for l in range(L):
                    s = 0.0
                    for n in range(N):
                        s += r[l, n] * codes[k, n]
                    lam = gains[m, k, l] if use_mrc else 1.0
                    Z += lam * s
                d = 1.0 if Z >= 0.0 else -1.0
                if m >= warmup and measure[k]:
                    counted += 1
                    if d != bits[m, k]:
                        errors += 1
            continue

        # rank by combined matched-filter branch power, strongest first,
        # ties by ascending user index (stable insertion sort)
        for k in range(K):
            acc = 0.0
            for l in range(L):
                s = 0.0
                for n in range(N):
                    s += r[l, n] * codes[k, n]
                acc += s * s
            metric[k] = acc
            order[k] = k
        for i in range(1, K):
            key_idx = order[i]
            key = metric[key_idx]
            j = i - 1
            while j >= 0 and metric[order[j]] < key:
                order[j + 1] = order[j]
                j -= 1
            order[j + 1] = key_idx

        for idx in range(K):
            k = order[idx]
            Z = 0.0
            if receiver == RECEIVER_CSIC:
                for l in range(L):
                    s = 0.0
                    for n in range(N):
                        s += r[l, n] * codes[k, n]
                    lam = gains[m, k, l] if use_mrc else 1.0
                    Z += lam * s
                    for n in range(N):
                        r[l, n] -= s * codes[k, n]
            else:
                for l in range(L):
                    s = 0.0
                    for n in range(N):
                        s += weights[k, l, n] * r[l, n]
                    e = s * (s * s - gamma)
                    wsum = 0.0
                    ok = True
                    for n in range(N):
                        w = weights[k, l, n] - mu * r[l, n] * e
                        weights[k, l, n] = w
                        aw = abs(w)
                        wsum += aw
                        if not np.isfinite(w) or aw > WEIGHT_LIMIT:
                            ok = False
                    if not ok:
                        return errors, counted, np.int64(1), flips
                    dotc = 0.0
                    for n in range(N):
                        dotc += weights[k, l, n] * codes[k, n]
                    if dotc <= 0.0:
                        flips += 1
                    alpha = sqrt_n / wsum  # (1/sqrt(N)) / (wsum / N)
                    lam = gains[m, k, l] if use_mrc else 1.0
                    Z += lam * s
                    x = alpha * s
                    for n in range(N):
                        r[l, n] -= x * codes[k, n]
            d = 1.0 if Z >= 0.0 else -1.0
            if m >= warmup and measure[k]:
                counted += 1
                if d != bits[m, k]:
                    errors += 1

    return errors, counted, np.int64(0), flips
