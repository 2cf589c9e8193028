"""Monte Carlo driver: trial scheduling, error accumulation, CSV output.

Symbols are simulated in fixed-size trials.  Every point that shares the same
realization inputs (users, fading, noise budget, seed) is folded into one
group whose trials are generated once and replayed through each receiver
variant, so compared curves see literally identical interference and noise.

Trial t of a group draws from four independent substreams seeded by
(seed, K, L, N, t, tag).  Eb/N0, rho, mu, and the near-far spread are kept
out of the seed material: noise is drawn unit-variance and scaled later,
branch mixing happens after synthesis, and power profiles transform a raw
uniform draw.  Sweeping any of them therefore reuses common randomness.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .channel import FadingSpec, generate_fading
from .codes import generate_gold_family
from .config import MU_RULE, PointSpec, ReceiverKind, expand_config
from .frame import sigma_from_ebn0
from .receivers import CombinerKind

STREAM_BITS = 0
STREAM_FADING = 1
STREAM_NOISE = 2
STREAM_POWERS = 3

GAMMA = 1.0

CSV_COLUMNS = (
    "scenario",
    "receiver",
    "combiner",
    "K",
    "ebn0_db",
    "rho",
    "mu",
    "omega_db",
    "user_group",
    "errors",
    "symbols",
    "ber",
    "ci95",
    "faults",
)

_RECEIVER_CODES = {
    ReceiverKind.MF: _kernels.RECEIVER_MF,
    ReceiverKind.CSIC: _kernels.RECEIVER_CSIC,
    ReceiverKind.ASIC: _kernels.RECEIVER_ASIC,
}


def stream_rng(seed, K, L, N, trial_index, tag) -> np.random.Generator:
    """Independent generator for one (trial, purpose) substream."""
    ss = np.random.SeedSequence([seed, K, L, N, trial_index, tag])
    return np.random.default_rng(ss)


def step_size_rule(config) -> float:
    """Resolve the adaptive step size for a config whose sweeps are fixed.

    Explicit values win; otherwise 1e-4 under equal power, scaled down by
    the linear near-far spread so the strongest interferer adapts at the
    equal-power rate.
    """
    if config.mu != MU_RULE:
        mu = float(config.mu)
        if not mu > 0:
            raise ValueError(f"mu must be > 0, got {mu}")
        return mu
    if config.nearfar_omega_db == 0:
        return 1e-4
    return 1e-4 / 10.0 ** (config.nearfar_omega_db / 10.0)


def assign_powers(K: int, omega_db: float, rng: np.random.Generator) -> np.ndarray:
    """Per-user transmit powers for one trial.

    User 0 is the measured unit-power user.  With a near-far spread of
    omega_db, every interferer draws a power uniformly inside (1, omega],
    so user 0 is always the weakest.
    """
    if omega_db < 0:
        raise ValueError(f"omega_db must be >= 0, got {omega_db}")
    if omega_db == 0:
        return np.ones(K)
    omega = 10.0 ** (omega_db / 10.0)
    powers = np.empty(K)
    powers[0] = 1.0
    u = rng.random(K - 1)
    powers[1:] = 1.0 + (1.0 - u) * (omega - 1.0)
    return powers


def wilson_halfwidth(errors: int, n: int, z: float = 1.96) -> float:
    """Half-width of the Wilson score interval around errors/n."""
    if n == 0:
        return 0.0
    p = errors / n
    return (
        z
        * math.sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n))
        / (1.0 + z * z / n)
    )


@dataclass(frozen=True)
class BerEstimate:
    errors: int
    symbols: int  # measured symbol observations (the BER denominator)
    faults: int  # trials aborted by despreader divergence
    ber: float
    ci95_halfwidth: float


@dataclass(frozen=True)
class ResultRow:
    point: PointSpec
    estimate: BerEstimate


@lru_cache(maxsize=None)
def _chip_matrix(K: int) -> np.ndarray:
    family = generate_gold_family()
    chips = np.stack([c.chips for c in family.codes_for_users(K)])
    chips.flags.writeable = False
    return chips


def _group_key(p: PointSpec):
    return (
        p.K,
        p.L,
        p.N,
        p.rho,
        p.omega_db,
        p.fD_Tb,
        p.max_symbols,
        p.target_errors,
        p.seed,
        p.warmup_symbols,
        p.trial_symbols,
    )


def _variant_key(p: PointSpec):
    return (p.receiver, p.combiner, p.ebn0_db, p.mu, p.measured_users)


def _trial_lengths(max_symbols: int, trial_symbols: int):
    n_full, rest = divmod(max_symbols, trial_symbols)
    lengths = [trial_symbols] * n_full
    if rest:
        lengths.append(rest)
    return lengths


def _run_trial_job(args):
    """Simulate one trial for every variant of a group.  Runs in a worker."""
    (seed, K, L, N, rho, omega_db, fD_Tb, trial_index, M, warmup, variants) = args
    chips = _chip_matrix(K)

    bits_rng = stream_rng(seed, K, L, N, trial_index, STREAM_BITS)
    bits = (2.0 * bits_rng.integers(0, 2, size=(M, K)) - 1.0).astype(np.float64)

    fading_rng = stream_rng(seed, K, L, N, trial_index, STREAM_FADING)
    realization = generate_fading(FadingSpec(fD_Tb=fD_Tb, rho=rho, L=L), K, M, fading_rng)
    gains = np.ascontiguousarray(np.transpose(realization.gains, (2, 0, 1)))

    noise_rng = stream_rng(seed, K, L, N, trial_index, STREAM_NOISE)
    noise = noise_rng.standard_normal((M, L, N))

    powers_rng = stream_rng(seed, K, L, N, trial_index, STREAM_POWERS)
    powers = assign_powers(K, omega_db, powers_rng)
    amps = np.sqrt(powers / L)

    counts = []
    for receiver, combiner, ebn0_db, mu, measured in variants:
        sigma = sigma_from_ebn0(ebn0_db, 1.0)
        measure = np.ones(K, dtype=np.bool_)
        if measured == "weakest":
            measure[1:] = False
        weights = np.tile(chips[:, None, :], (1, L, 1)).astype(np.float64)
        errors, counted, fault, _flips = _kernels.run_trial(
            chips,
            amps,
            gains,
            bits,
            noise,
            sigma,
            _RECEIVER_CODES[receiver],
            combiner is CombinerKind.MRC,
            mu,
            GAMMA,
            weights,
            warmup,
            measure,
        )
        if fault:
            counts.append((0, 0, 1))
        else:
            counts.append((int(errors), int(counted), 0))
    return trial_index, counts


def _truncation_index(trial_counts, n_variants, target):
    """First trial index at which every variant has reached the error
    target, or None if the processed prefix never gets there."""
    if target <= 0:
        return None
    totals = [0] * n_variants
    remaining = n_variants
    for t in range(len(trial_counts)):
        for v in range(n_variants):
            before = totals[v]
            totals[v] = before + trial_counts[t][v][0]
            if before < target <= totals[v]:
                remaining -= 1
        if remaining == 0:
            return t
    return None


def _run_group(base: PointSpec, variants, workers: int):
    """Run one realization group; returns a BerEstimate per variant."""
    lengths = _trial_lengths(base.max_symbols, base.trial_symbols)

    def job(t):
        return (
            base.seed,
            base.K,
            base.L,
            base.N,
            base.rho,
            base.omega_db,
            base.fD_Tb,
            t,
            lengths[t],
            base.warmup_symbols,
            tuple(variants),
        )

    trial_counts = []
    if workers <= 1:
        for t in range(len(lengths)):
            trial_counts.append(_run_trial_job(job(t))[1])
            if _truncation_index(trial_counts, len(variants), base.target_errors) is not None:
                break
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            launched = 0
            while launched < len(lengths):
                wave = range(launched, min(launched + workers, len(lengths)))
                for _, counts in pool.map(_run_trial_job, [job(t) for t in wave]):
                    trial_counts.append(counts)
                launched = wave.stop
                if _truncation_index(trial_counts, len(variants), base.target_errors) is not None:
                    break

    # the stop index depends only on per-trial counts, never on wave size,
    # so the same seed gives byte-identical output at any worker count
    stop = _truncation_index(trial_counts, len(variants), base.target_errors)
    used = trial_counts if stop is None else trial_counts[: stop + 1]

    estimates = []
    for v in range(len(variants)):
        errors = sum(c[v][0] for c in used)
        symbols = sum(c[v][1] for c in used)
        faults = sum(c[v][2] for c in used)
        ber = errors / symbols if symbols else 0.0
        estimates.append(
            BerEstimate(
                errors=errors,
                symbols=symbols,
                faults=faults,
                ber=ber,
                ci95_halfwidth=wilson_halfwidth(errors, symbols),
            )
        )
    return estimates


def run_points(points, workers: int = 1):
    """Estimate BER for each fully resolved point, preserving input order."""
    groups = {}
    for i, p in enumerate(points):
        groups.setdefault(_group_key(p), []).append(i)

    estimates = [None] * len(points)
    for indices in groups.values():
        variant_keys = []
        variant_of = []
        for i in indices:
            key = _variant_key(points[i])
            if key not in variant_keys:
                variant_keys.append(key)
            variant_of.append(variant_keys.index(key))
        group_estimates = _run_group(points[indices[0]], variant_keys, workers)
        for i, v in zip(indices, variant_of):
            estimates[i] = group_estimates[v]
    return estimates


def run_point(point: PointSpec, workers: int = 1) -> BerEstimate:
    return run_points([point], workers)[0]


def run_scenario(configs, workers: int = 1):
    """Expand configs, run everything, and return rows in sweep order."""
    points = [p for config in configs for p in expand_config(config)]
    estimates = run_points(points, workers)
    return [ResultRow(point=p, estimate=e) for p, e in zip(points, estimates)]


def _fmt(value) -> str:
    return "%g" % value


def format_row(row: ResultRow) -> list:
    p, e = row.point, row.estimate
    return [
        p.scenario,
        p.receiver.value,
        p.combiner.value,
        str(p.K),
        _fmt(p.ebn0_db),
        _fmt(p.rho),
        _fmt(p.mu),
        _fmt(p.omega_db),
        p.measured_users,
        str(e.errors),
        str(e.symbols),
        "%.10e" % e.ber,
        "%.10e" % e.ci95_halfwidth,
        str(e.faults),
    ]


def write_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(format_row(row)) + "\n")


def total_faults(rows) -> int:
    return sum(r.estimate.faults for r in rows)
