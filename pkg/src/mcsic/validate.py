"""Self-contained property and oracle checks behind ``mcsic validate``.

Every check is a named function returning (ok, detail).  The suite avoids
long Monte Carlo runs; the whole thing is budgeted to finish within a
minute on one core.
"""

import sys
import time

import numpy as np

from .analytic import brute_force_multiuser, su_mrc_ber
from .channel import FadingSpec, bessel_j0, generate_fading
from .codes import SpreadingCode, cross_correlation, generate_gold_family, walsh4_codes
from .config import ReceiverKind, ScenarioConfig
from .engine import format_row, run_scenario
from .frame import ReceivedFrame
from .receivers import (
    CombinerKind,
    DespreaderState,
    asic_receive_symbol,
    asic_stage,
    cm_error,
    csic_detect_and_cancel,
    hard_decision,
    init_despreader_states,
    mf_despread,
    rank_users,
)

GOLD_MEMBER_A = "1000010010110011111000110111010"
GOLD_MEMBER_B = "1000011001001111101110001010110"

# su_mrc_ber at (ebn0_db, L), frozen from the closed form
SU_FROZEN = {
    (0, 1): 1.464466094067262e-01,
    (10, 1): 2.3268705377203824e-02,
    (20, 1): 2.4814048950054235e-03,
    (0, 2): 1.150998205402495e-01,
    (10, 2): 5.528246696725031e-03,
    (20, 2): 7.256408530659911e-05,
}


def check_gold_family():
    """Exhaustive three-valued cross-correlation and the frozen pair."""
    family = generate_gold_family()  # construction re-verifies every pair
    got_a = "".join("0" if c > 0 else "1" for c in family.codes[31].chips)
    got_b = "".join("0" if c > 0 else "1" for c in family.codes[32].chips)
    if got_a != GOLD_MEMBER_A or got_b != GOLD_MEMBER_B:
        return False, "preferred pair chip patterns drifted"
    for k in range(31):
        raw = round(cross_correlation(family.codes[k], family.codes[(k + 1) % 31], 0) * 31)
        if raw != -1:
            return False, f"zero-shift correlation of combined codes {k} broke: {raw}"
    energy = float(np.dot(family.codes[0].chips, family.codes[0].chips))
    if abs(energy - 1.0) > 1e-12:
        return False, f"unit energy violated: {energy}"
    return True, "33 codes, every pair three-valued"


def check_walsh_orthogonality():
    codes = walsh4_codes()
    for i in range(4):
        for j in range(4):
            want = 1.0 if i == j else 0.0
            got = float(np.dot(codes[i].chips, codes[j].chips))
            if abs(got - want) > 1e-12:
                return False, f"walsh ({i},{j}) correlation {got}"
    return True, "4x4 exact orthogonality"


def check_single_user_formula():
    for (ebn0, L), want in SU_FROZEN.items():
        got = su_mrc_ber(float(ebn0), L)
        if abs(got - want) > 1e-12 * max(want, 1.0):
            return False, f"su_mrc_ber({ebn0},{L}) = {got!r}, frozen {want!r}"
    return True, f"{len(SU_FROZEN)} frozen values reproduced"


def check_fading_statistics():
    """Doppler autocorrelation against J0 and branch correlation against rho."""
    M = 400_000
    rng = np.random.default_rng(7)
    real = generate_fading(FadingSpec(fD_Tb=0.003, rho=0.0, L=2), 1, M, rng)
    u = real.gains[0, 0] * np.exp(1j * real.phases[0, 0])
    u = u - np.mean(u)
    denom = float(np.mean(np.abs(u) ** 2))
    for lag in (1, 10, 40, 100):
        got = float(np.real(np.mean(u[: M - lag] * np.conj(u[lag:])))) / denom
        want = bessel_j0(2.0 * np.pi * 0.003 * lag)
        if abs(got - want) > 0.02:
            return False, f"autocorrelation at lag {lag}: {got:.4f} vs {want:.4f}"

    rng = np.random.default_rng(13)
    real = generate_fading(FadingSpec(fD_Tb=0.45, rho=0.8, L=2), 1, M, rng)
    a = real.gains[0, 0] * np.exp(1j * real.phases[0, 0])
    b = real.gains[0, 1] * np.exp(1j * real.phases[0, 1])
    a = a - np.mean(a)
    b = b - np.mean(b)
    got = float(
        np.abs(np.mean(a * np.conj(b)))
        / np.sqrt(np.mean(np.abs(a) ** 2) * np.mean(np.abs(b) ** 2))
    )
    if abs(got - 0.8) > 0.01:
        return False, f"branch correlation {got:.4f} vs 0.8"
    return True, "J0 autocorrelation and rho=0.8 branch correlation in tolerance"


def check_cma_gradient():
    """Analytic constant-modulus gradient against central differences."""
    rng = np.random.default_rng(23)
    h = 1e-5
    checked = 0
    for _ in range(400):
        z = float(rng.uniform(-2.0, 2.0))
        gamma = float(rng.uniform(0.5, 2.0))
        analytic = 4.0 * cm_error(z, gamma)
        numeric = (((z + h) ** 2 - gamma) ** 2 - ((z - h) ** 2 - gamma) ** 2) / (2 * h)
        if abs(analytic) < 1e-3:
            continue
        checked += 1
        if abs(numeric - analytic) / abs(analytic) > 1e-6:
            return False, f"gradient mismatch at z={z:.4f}, gamma={gamma:.4f}"
    if checked <= 300:
        return False, f"only {checked} usable gradient points"
    return True, f"{checked} gradient points within 1e-6"


def check_asic_fixed_point():
    """Weights at c/(A g) recover the bit exactly and cancel to nothing."""
    code = generate_gold_family().codes[0]
    power, bit = 0.49, -1.0
    g = np.array([0.8, 1.3])
    L = 2
    amp = np.sqrt(power / L)
    chips = np.stack([amp * g[l] * bit * code.chips for l in range(L)])
    states = [
        DespreaderState(weights=code.chips / (amp * g[l]), mu=0.0) for l in range(L)
    ]
    z, residual, _, alpha = asic_stage(chips, states, code, 0)
    if np.max(np.abs(z - bit)) > 1e-10:
        return False, f"fixed-point output off: {z}"
    if np.max(np.abs(alpha - amp * g)) > 1e-10:
        return False, f"fixed-point scaling off: {alpha}"
    if np.max(np.abs(residual)) > 1e-10:
        return False, f"residual left: {np.max(np.abs(residual))}"
    return True, "exact cancellation to 1e-10"


def check_mu_zero_equivalence():
    """A frozen adaptive receiver is the soft canceller, decision for decision."""
    K, L = 8, 2
    codes = generate_gold_family().codes_for_users(K)
    rng = np.random.default_rng(41)
    states = init_despreader_states(codes, L, mu=0.0)
    for m in range(200):
        chips = rng.standard_normal((L, codes[0].N))
        gains = np.abs(rng.standard_normal((K, L)))
        frame = ReceivedFrame(chips=chips, symbol_index=m)
        order = rank_users(frame, codes)
        want, _ = csic_detect_and_cancel(frame, order, codes, gains, CombinerKind.MRC)
        got, _, states = asic_receive_symbol(frame, states, codes, gains, CombinerKind.MRC)
        if not np.array_equal(got, want):
            return False, f"decisions diverged at symbol {m}"
    return True, "200 symbols, identical decisions"


def _toy_codes(rng, K, N):
    # distinct up to negation: a code and its antipodal twin despread to an
    # exactly-zero statistic after soft cancellation, a degenerate tie no
    # real family contains
    chosen = []
    seen = set()
    while len(chosen) < K:
        pattern = rng.integers(0, 2, N)
        key = tuple(int(b) for b in pattern)
        anti = tuple(1 - b for b in key)
        if key in seen or anti in seen:
            continue
        seen.add(key)
        chips = np.where(pattern > 0, 1.0, -1.0) / np.sqrt(N)
        chosen.append(SpreadingCode(chips=chips, family_index=len(chosen), N=N))
    return chosen


def _receiver_chain(bits, codes, powers, gains, kind, combiner, noise, mu):
    K = len(codes)
    L = gains.shape[1]
    chips = noise.copy()
    for k in range(K):
        amp = np.sqrt(powers[k] / L) * bits[k]
        for l in range(L):
            chips[l] += amp * gains[k, l] * codes[k].chips
    frame = ReceivedFrame(chips=chips, symbol_index=0)
    if kind == "mf":
        out = np.empty(K, dtype=np.int64)
        for k in range(K):
            z = mf_despread(frame, codes[k])
            lam = gains[k] if combiner is CombinerKind.MRC else np.ones(L)
            out[k] = hard_decision(float(np.dot(z, lam)))
        return out
    if kind == "csic":
        order = rank_users(frame, codes)
        out, _ = csic_detect_and_cancel(frame, order, codes, gains, combiner)
        return out
    states = init_despreader_states(codes, L, mu=mu)
    out, _, _ = asic_receive_symbol(frame, states, codes, gains, combiner)
    return out


def check_brute_force_oracle():
    """Receiver-chain decisions against the flat enumeration oracle."""
    rng = np.random.default_rng(101)
    for trial in range(10_000):
        kind = ("mf", "csic", "asic")[trial % 3]
        K = int(rng.integers(1, 5))
        N = int(rng.choice([4, 8]))
        codes = _toy_codes(rng, K, N)
        bits = 2.0 * rng.integers(0, 2, K) - 1.0
        powers = rng.uniform(0.25, 4.0, K)
        gains = np.abs(rng.standard_normal((K, 2))) + 0.05
        noise = 0.3 * rng.standard_normal((2, N))
        combiner = CombinerKind.MRC if trial % 2 else CombinerKind.EGC
        mu = 0.001 if kind == "asic" else 0.0
        want = brute_force_multiuser(
            bits, codes, powers, gains, kind, combiner=combiner, noise=noise, mu=mu
        )
        got = _receiver_chain(bits, codes, powers, gains, kind, combiner, noise, mu)
        if not np.array_equal(got, want):
            return False, f"oracle mismatch on instance {trial} ({kind})"
    return True, "10000 instances, zero mismatches"


def _tiny_config(seed):
    return ScenarioConfig(
        scenario="tinycheck",
        K=4,
        receiver=ReceiverKind.CSIC,
        combiner=CombinerKind.EGC,
        ebn0_db=10.0,
        max_symbols=3000,
        target_errors=0,
        trial_symbols=1500,
        warmup_symbols=100,
        seed=seed,
    )


def check_csv_determinism():
    """The same seeded scenario twice gives byte-identical output."""
    first = "\n".join(",".join(format_row(r)) for r in run_scenario([_tiny_config(5)]))
    second = "\n".join(",".join(format_row(r)) for r in run_scenario([_tiny_config(5)]))
    if first != second:
        return False, "repeated run produced different bytes"
    reseeded = "\n".join(",".join(format_row(r)) for r in run_scenario([_tiny_config(6)]))
    if reseeded == first:
        return False, "different seeds produced identical bytes"
    return True, "byte-identical across repeats, seed-sensitive"


CHECKS = (
    ("gold_family", check_gold_family),
    ("walsh_orthogonality", check_walsh_orthogonality),
    ("single_user_formula", check_single_user_formula),
    ("fading_statistics", check_fading_statistics),
    ("cma_gradient", check_cma_gradient),
    ("asic_fixed_point", check_asic_fixed_point),
    ("mu_zero_equivalence", check_mu_zero_equivalence),
    ("brute_force_oracle", check_brute_force_oracle),
    ("csv_determinism", check_csv_determinism),
)


def run_all(stream=None):
    """Run every check, print one PASS/FAIL line each, return failed names."""
    out = sys.stdout if stream is None else stream
    failures = []
    started = time.monotonic()
    for name, fn in CHECKS:
        t0 = time.monotonic()
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashed check is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        dt = time.monotonic() - t0
        print(f"{'PASS' if ok else 'FAIL'} {name} ({dt:.1f}s) {detail}", file=out)
        if not ok:
            failures.append(name)
    total = time.monotonic() - started
    print(
        f"{len(CHECKS) - len(failures)}/{len(CHECKS)} checks passed in {total:.1f}s",
        file=out,
    )
    return failures
