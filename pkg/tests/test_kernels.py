"""Compiled trial loop against the per-symbol receiver modules.

The fast path must make, symbol for symbol, the decisions the plain
implementations make, so every case here demands exact error-count equality
rather than statistical agreement.
"""

import numpy as np
import pytest

from mcsic import _kernels
from mcsic.channel import FadingSpec, generate_fading
from mcsic.codes import generate_gold_family
from mcsic.frame import ReceivedFrame, sigma_from_ebn0
from mcsic.receivers import (
    CombinerKind,
    asic_receive_symbol,
    combine,
    csic_detect_and_cancel,
    hard_decision,
    init_despreader_states,
    mf_despread,
    rank_users,
)

FAMILY = generate_gold_family()

RECEIVER_CODE = {
    "mf": _kernels.RECEIVER_MF,
    "csic": _kernels.RECEIVER_CSIC,
    "asic": _kernels.RECEIVER_ASIC,
}


def build_chips(m, chips_matrix, amps, gains, bits, noise, sigma):
    # mirror the kernel's construction order exactly: noise first, then one
    # user at a time, so both paths see bitwise identical frames
    K = chips_matrix.shape[0]
    r = sigma * noise[m]
    for k in range(K):
        for l in range(r.shape[0]):
            a = amps[k] * gains[m, k, l] * bits[m, k]
            r[l] = r[l] + a * chips_matrix[k]
    return r


def reference_trial(codes, amps, gains, bits, noise, sigma, receiver, combiner, mu, warmup, measure):
    M, K, L = gains.shape
    chips_matrix = np.stack([c.chips for c in codes])
    states = init_despreader_states(codes, L, mu)
    errors = 0
    counted = 0
    for m in range(M):
        frame = ReceivedFrame(
            chips=build_chips(m, chips_matrix, amps, gains, bits, noise, sigma),
            symbol_index=0,
        )
        if receiver == "mf":
            decisions = np.empty(K, dtype=np.int64)
            for k in range(K):
                z = mf_despread(frame, codes[k])
                lam = gains[m, k] if combiner is CombinerKind.MRC else np.ones(L)
                decisions[k] = hard_decision(combine(z, lam))
        elif receiver == "csic":
            order = rank_users(frame, codes)
            decisions, _ = csic_detect_and_cancel(frame, order, codes, gains[m], combiner)
        else:
            decisions, _, states = asic_receive_symbol(frame, states, codes, gains[m], combiner)
        if m >= warmup:
            for k in range(K):
                if measure[k]:
                    counted += 1
                    if decisions[k] != bits[m, k]:
                        errors += 1
    return errors, counted


def random_instance(rng, K, M, receiver, combiner, mu, warmup, measure):
    codes = FAMILY.codes_for_users(K)
    chips_matrix = np.stack([c.chips for c in codes])
    N = chips_matrix.shape[1]
    L = 2
    powers = rng.uniform(0.25, 4.0, K)
    amps = np.sqrt(powers / L)
    gains = np.abs(rng.standard_normal((M, K, L)))
    bits = (2.0 * rng.integers(0, 2, (M, K)) - 1.0).astype(np.float64)
    noise = rng.standard_normal((M, L, N))
    sigma = sigma_from_ebn0(rng.uniform(5.0, 20.0), 1.0)

    weights = np.tile(chips_matrix[:, None, :], (1, L, 1)).astype(np.float64)
    got = _kernels.run_trial(
        chips_matrix,
        amps,
        gains,
        bits,
        noise,
        sigma,
        RECEIVER_CODE[receiver],
        combiner is CombinerKind.MRC,
        mu,
        1.0,
        weights,
        warmup,
        measure,
    )
    want = reference_trial(
        codes, amps, gains, bits, noise, sigma, receiver, combiner, mu, warmup, measure
    )
    return got, want


CASES = [
    ("mf", CombinerKind.MRC, 1, 0.0, 101),
    ("mf", CombinerKind.EGC, 4, 0.0, 102),
    ("mf", CombinerKind.MRC, 6, 0.0, 103),
    ("csic", CombinerKind.EGC, 1, 0.0, 104),
    ("csic", CombinerKind.MRC, 4, 0.0, 105),
    ("csic", CombinerKind.EGC, 6, 0.0, 106),
    ("asic", CombinerKind.MRC, 1, 1e-3, 107),
    ("asic", CombinerKind.EGC, 4, 1e-3, 108),
    ("asic", CombinerKind.MRC, 5, 1e-4, 109),
    ("asic", CombinerKind.EGC, 6, 3e-4, 110),
]


class TestDecisionEquality:
    @pytest.mark.parametrize("receiver,combiner,K,mu,seed", CASES)
    def test_counts_match_reference(self, receiver, combiner, K, mu, seed):
        rng = np.random.default_rng(seed)
        measure = np.ones(K, dtype=np.bool_)
        got, want = random_instance(rng, K, 300, receiver, combiner, mu, 0, measure)
        errors, counted, fault, _ = got
        assert fault == 0
        assert (errors, counted) == want
        assert counted == 300 * K

    def test_warmup_and_measured_subset(self):
        rng = np.random.default_rng(99)
        K = 5
        measure = np.zeros(K, dtype=np.bool_)
        measure[0] = True
        got, want = random_instance(rng, K, 240, "asic", CombinerKind.MRC, 1e-3, 40, measure)
        errors, counted, fault, _ = got
        assert fault == 0
        assert (errors, counted) == want
        assert counted == 200

    def test_wide_instance_all_receivers(self):
        rng = np.random.default_rng(2024)
        K, M, L = 20, 120, 2
        codes = FAMILY.codes_for_users(K)
        chips_matrix = np.stack([c.chips for c in codes])
        N = chips_matrix.shape[1]
        powers = rng.uniform(1.0, 10.0, K)
        amps = np.sqrt(powers / L)
        gains = np.abs(rng.standard_normal((M, K, L)))
        bits = (2.0 * rng.integers(0, 2, (M, K)) - 1.0).astype(np.float64)
        noise = rng.standard_normal((M, L, N))
        sigma = sigma_from_ebn0(20.0, 1.0)
        measure = np.ones(K, dtype=np.bool_)
        for receiver, mu in (("mf", 0.0), ("csic", 0.0), ("asic", 1e-4)):
            weights = np.tile(chips_matrix[:, None, :], (1, L, 1)).astype(np.float64)
            errors, counted, fault, _ = _kernels.run_trial(
                chips_matrix, amps, gains, bits, noise, sigma,
                RECEIVER_CODE[receiver], True, mu, 1.0, weights, 0, measure,
            )
            want = reference_trial(
                codes, amps, gains, bits, noise, sigma, receiver,
                CombinerKind.MRC, mu, 0, measure,
            )
            assert fault == 0
            assert (int(errors), int(counted)) == want, receiver

    def test_deterministic(self):
        rng = np.random.default_rng(5)
        K = 3
        measure = np.ones(K, dtype=np.bool_)
        first, _ = random_instance(rng, K, 100, "asic", CombinerKind.EGC, 1e-3, 0, measure)
        rng = np.random.default_rng(5)
        second, _ = random_instance(rng, K, 100, "asic", CombinerKind.EGC, 1e-3, 0, measure)
        assert tuple(first) == tuple(second)


class TestWeightSignAnchor:
    def test_no_sign_reversal_at_nominal_settings(self):
        # full-load equal-power operation at the design step size: the
        # adaptive weights must never turn against their own code over 1e5
        # symbols of correlated fading
        K, L, M = 20, 2, 100_000
        codes = FAMILY.codes_for_users(K)
        chips_matrix = np.stack([c.chips for c in codes])
        N = chips_matrix.shape[1]
        rng = np.random.default_rng(31337)
        real = generate_fading(FadingSpec(fD_Tb=0.003, rho=0.0, L=L), K, M, rng)
        gains = np.ascontiguousarray(np.transpose(real.gains, (2, 0, 1)))
        bits = (2.0 * rng.integers(0, 2, (M, K)) - 1.0).astype(np.float64)
        noise = rng.standard_normal((M, L, N))
        amps = np.sqrt(np.ones(K) / L)
        sigma = sigma_from_ebn0(20.0, 1.0)
        weights = np.tile(chips_matrix[:, None, :], (1, L, 1)).astype(np.float64)
        measure = np.ones(K, dtype=np.bool_)
        errors, counted, fault, flips = _kernels.run_trial(
            chips_matrix, amps, gains, bits, noise, sigma,
            _kernels.RECEIVER_ASIC, True, 1e-4, 1.0, weights, 500, measure,
        )
        assert fault == 0
        assert flips == 0
        assert counted == (M - 500) * K
        assert np.all(np.isfinite(weights))

    def test_runaway_step_size_faults(self):
        K, L, M = 8, 2, 400
        codes = FAMILY.codes_for_users(K)
        chips_matrix = np.stack([c.chips for c in codes])
        N = chips_matrix.shape[1]
        rng = np.random.default_rng(77)
        gains = np.abs(rng.standard_normal((M, K, L))) + 0.5
        bits = (2.0 * rng.integers(0, 2, (M, K)) - 1.0).astype(np.float64)
        noise = rng.standard_normal((M, L, N))
        amps = np.sqrt(np.full(K, 4.0) / L)
        weights = np.tile(chips_matrix[:, None, :], (1, L, 1)).astype(np.float64)
        measure = np.ones(K, dtype=np.bool_)
        _, _, fault, _ = _kernels.run_trial(
            chips_matrix, amps, gains, bits, noise, 0.05,
            _kernels.RECEIVER_ASIC, False, 50.0, 1.0, weights, 0, measure,
        )
        assert fault == 1
