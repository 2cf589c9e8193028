"""Scenario configuration: schema, validation, experiment presets, file parsing.

A config holds one receiver/combiner pair; fields K, ebn0_db, rho, and mu may
be sweep lists.  Config files are flat key=value text; list values use
brackets, receiver/combiner lists expand into one config per pair.
"""

import math
from dataclasses import dataclass, replace
from enum import Enum

from .codes import GOLD_FAMILY_SIZE, GOLD_N
from .receivers import CombinerKind


class ConfigError(ValueError):
    """Invalid scenario configuration or config file."""


class ReceiverKind(Enum):
    MF = "mf"
    CSIC = "csic"
    ASIC = "asic"


MU_RULE = "rule"  # resolve mu from the near-far step-size rule

DEFAULT_SEED = 1
DEFAULT_TRIAL_SYMBOLS = 20_000
DEFAULT_WARMUP = 500
DEFAULT_MAX_SYMBOLS = 5_000_000
DEFAULT_TARGET_ERRORS = 200


def _as_tuple(value):
    if isinstance(value, (list, tuple)):
        return tuple(value)
    return (value,)


@dataclass(frozen=True)
class ScenarioConfig:
    K: object  # int or sweep list
    receiver: ReceiverKind
    combiner: CombinerKind
    ebn0_db: object = 20.0  # real or sweep list
    rho: object = 0.0  # real or sweep list
    mu: object = MU_RULE  # real, sweep list, or MU_RULE
    nearfar_omega_db: float = 0.0  # 0 = equal power
    L: int = 2
    N: int = GOLD_N
    fD_Tb: float = 0.003
    max_symbols: int = DEFAULT_MAX_SYMBOLS
    target_errors: int = DEFAULT_TARGET_ERRORS
    seed: int = DEFAULT_SEED
    measured_users: str = "all"  # or "weakest"
    warmup_symbols: int = DEFAULT_WARMUP
    trial_symbols: int = DEFAULT_TRIAL_SYMBOLS
    scenario: str = "custom"

    def __post_init__(self):
        if self.N != GOLD_N:
            raise ConfigError(f"only N={GOLD_N} spreading is supported, got {self.N}")
        for K in _as_tuple(self.K):
            if not isinstance(K, int) or not 1 <= K <= GOLD_FAMILY_SIZE:
                raise ConfigError(
                    f"K must be an integer in 1..{GOLD_FAMILY_SIZE}, got {K}"
                )
        if self.L < 1:
            raise ConfigError(f"L must be >= 1, got {self.L}")
        for rho in _as_tuple(self.rho):
            if not 0.0 <= rho <= 1.0:
                raise ConfigError(f"rho must be in [0,1], got {rho}")
        for ebn0 in _as_tuple(self.ebn0_db):
            if not _is_finite_number(ebn0):
                raise ConfigError(f"ebn0_db must be finite, got {ebn0}")
        if self.mu != MU_RULE:
            for mu in _as_tuple(self.mu):
                if not mu > 0:
                    raise ConfigError(f"mu must be > 0, got {mu}")
        if self.nearfar_omega_db < 0:
            raise ConfigError(
                f"nearfar_omega_db must be >= 0, got {self.nearfar_omega_db}"
            )
        if not self.fD_Tb > 0:
            raise ConfigError(f"fD_Tb must be > 0, got {self.fD_Tb}")
        if self.max_symbols < 1:
            raise ConfigError(f"max_symbols must be >= 1, got {self.max_symbols}")
        # 0 disables early stopping; reported points need a real error target
        if self.target_errors != 0 and self.target_errors < 100:
            raise ConfigError(
                f"target_errors must be 0 or >= 100, got {self.target_errors}"
            )
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.measured_users not in ("all", "weakest"):
            raise ConfigError(
                f"measured_users must be 'all' or 'weakest', got {self.measured_users!r}"
            )
        if self.warmup_symbols < 0:
            raise ConfigError(f"warmup_symbols must be >= 0, got {self.warmup_symbols}")
        if not 0 < self.trial_symbols <= self.max_symbols:
            raise ConfigError(
                f"trial_symbols must be in 1..max_symbols, got {self.trial_symbols}"
            )
        if self.warmup_symbols >= self.trial_symbols:
            raise ConfigError("warmup_symbols must be smaller than trial_symbols")


def _is_finite_number(x) -> bool:
    try:
        return math.isfinite(float(x))
    except (TypeError, ValueError):
        return False


@dataclass(frozen=True)
class PointSpec:
    """One fully resolved simulation point (all sweeps fixed)."""

    scenario: str
    receiver: ReceiverKind
    combiner: CombinerKind
    K: int
    L: int
    N: int
    ebn0_db: float
    rho: float
    mu: float
    omega_db: float
    fD_Tb: float
    max_symbols: int
    target_errors: int
    seed: int
    measured_users: str
    warmup_symbols: int
    trial_symbols: int


def expand_config(config: ScenarioConfig):
    """Resolve sweeps into the flat point list, K outer, mu innermost."""
    from .engine import step_size_rule  # cycle: engine owns the mu rule

    points = []
    for K in _as_tuple(config.K):
        for ebn0 in _as_tuple(config.ebn0_db):
            for rho in _as_tuple(config.rho):
                for mu in _as_tuple(config.mu):
                    resolved = replace(
                        config, K=K, ebn0_db=float(ebn0), rho=float(rho), mu=mu
                    )
                    points.append(
                        PointSpec(
                            scenario=config.scenario,
                            receiver=config.receiver,
                            combiner=config.combiner,
                            K=K,
                            L=config.L,
                            N=config.N,
                            ebn0_db=float(ebn0),
                            rho=float(rho),
                            mu=step_size_rule(resolved),
                            omega_db=float(config.nearfar_omega_db),
                            fD_Tb=config.fD_Tb,
                            max_symbols=config.max_symbols,
                            target_errors=config.target_errors,
                            seed=config.seed,
                            measured_users=config.measured_users,
                            warmup_symbols=config.warmup_symbols,
                            trial_symbols=config.trial_symbols,
                        )
                    )
    return points


ALL_RECEIVERS = (ReceiverKind.MF, ReceiverKind.CSIC, ReceiverKind.ASIC)
BOTH_COMBINERS = (CombinerKind.MRC, CombinerKind.EGC)

# step sizes for the step-size sweep; brackets the optimum reported for K=24
MU_GRID = (1e-5, 3e-5, 1e-4, 3e-4, 6e-4, 1.3e-3, 3e-3)


def _grid(name, receivers, combiners, **kwargs):
    return [
        ScenarioConfig(scenario=name, receiver=r, combiner=c, **kwargs)
        for c in combiners
        for r in receivers
    ]


def build_presets():
    presets = {}
    presets["fig3"] = _grid(
        "fig3",
        ALL_RECEIVERS,
        BOTH_COMBINERS,
        K=20,
        ebn0_db=[5.0, 10.0, 15.0, 20.0],
    )
    presets["fig4"] = _grid(
        "fig4",
        ALL_RECEIVERS,
        BOTH_COMBINERS,
        K=[4, 8, 12, 16, 20, 24, 28],
        ebn0_db=20.0,
    )
    presets["fig5"] = _grid(
        "fig5",
        ALL_RECEIVERS,
        (CombinerKind.MRC,),
        K=20,
        ebn0_db=[5.0, 10.0, 15.0, 20.0],
        nearfar_omega_db=10.0,
        mu=1e-5,
        measured_users="weakest",
        warmup_symbols=2000,
        trial_symbols=100_000,
    )
    # the near-far spread is a per-config scalar, so the omega sweep is a
    # config per spread value rather than a sweepable field
    presets["fig6"] = [
        cfg
        for omega in (0.0, 5.0, 10.0, 15.0, 20.0)
        for cfg in _grid(
            "fig6",
            ALL_RECEIVERS,
            (CombinerKind.MRC,),
            K=20,
            ebn0_db=20.0,
            nearfar_omega_db=omega,
            measured_users="weakest",
            warmup_symbols=2000,
            trial_symbols=100_000,
        )
    ]
    presets["fig7"] = _grid(
        "fig7",
        (ReceiverKind.ASIC,),
        (CombinerKind.MRC,),
        K=[10, 16, 20, 24],
        ebn0_db=20.0,
        mu=list(MU_GRID),
    )
    presets["fig8"] = _grid(
        "fig8",
        (ReceiverKind.ASIC,),
        (CombinerKind.MRC,),
        K=[10, 20],
        ebn0_db=20.0,
        rho=[0.0, 0.2, 0.4, 0.6, 0.8],
    )
    return presets


PRESET_DESCRIPTIONS = {
    "fig3": "BER vs Eb/N0, K=20, three receivers, both combiners",
    "fig4": "user capacity: BER vs K at 20 dB, both combiners",
    "fig5": "near-far: BER vs Eb/N0 for the weakest user, omega=10 dB",
    "fig6": "near-far: weakest-user BER vs omega at 20 dB, mu=0.0001/omega",
    "fig7": "step-size sweep at 20 dB, MRC, K in {10,16,20,24}",
    "fig8": "subcarrier correlation sweep at 20 dB, K in {10,20}",
}


def get_preset(name: str, seed=None):
    presets = build_presets()
    if name not in presets:
        raise ConfigError(
            f"unknown preset {name!r}; available: {', '.join(sorted(presets))}"
        )
    configs = presets[name]
    if seed is not None:
        configs = [replace(c, seed=seed) for c in configs]
    return configs


def _parse_scalar(text: str):
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def _parse_value(text: str):
    text = text.strip()
    if text.startswith("["):
        if not text.endswith("]"):
            raise ConfigError(f"unterminated list: {text!r}")
        inner = text[1:-1].strip()
        if not inner:
            raise ConfigError("empty sweep list")
        return [_parse_scalar(part) for part in inner.split(",")]
    return _parse_scalar(text)


_CONFIG_KEYS = {
    "scenario",
    "K",
    "L",
    "N",
    "receiver",
    "combiner",
    "ebn0_db",
    "rho",
    "mu",
    "nearfar_omega_db",
    "omega_db",
    "fD_Tb",
    "max_symbols",
    "target_errors",
    "seed",
    "measured_users",
    "warmup_symbols",
    "trial_symbols",
}


def _to_receiver(token) -> ReceiverKind:
    try:
        return ReceiverKind(str(token).lower())
    except ValueError:
        raise ConfigError(f"unknown receiver {token!r}") from None


def _to_combiner(token) -> CombinerKind:
    try:
        return CombinerKind(str(token).lower())
    except ValueError:
        raise ConfigError(f"unknown combiner {token!r}") from None


def parse_config_file(path) -> list:
    """Read a flat key=value scenario file into a list of configs.

    ``receiver`` and ``combiner`` may be lists; the file expands into one
    config per (combiner, receiver) pair, everything else shared.
    """
    raw = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, _, value = stripped.partition("=")
            key = key.strip()
            if key not in _CONFIG_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            if key in raw:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            raw[key] = _parse_value(value)

    if "K" not in raw:
        raise ConfigError(f"{path}: missing required key 'K'")
    if "omega_db" in raw:  # accepted alias
        raw["nearfar_omega_db"] = raw.pop("omega_db")

    receivers = [_to_receiver(t) for t in _as_tuple(raw.pop("receiver", "asic"))]
    combiners = [_to_combiner(t) for t in _as_tuple(raw.pop("combiner", "egc"))]

    mu = raw.pop("mu", MU_RULE)
    if isinstance(mu, str) and mu != MU_RULE:
        raise ConfigError(f"mu must be a number, a list, or '{MU_RULE}', got {mu!r}")

    kwargs = dict(raw)
    for int_key in (
        "L",
        "N",
        "max_symbols",
        "target_errors",
        "seed",
        "warmup_symbols",
        "trial_symbols",
    ):
        if int_key in kwargs:
            value = kwargs[int_key]
            if not isinstance(value, int):
                raise ConfigError(f"{int_key} must be an integer, got {value!r}")
    try:
        return [
            ScenarioConfig(receiver=r, combiner=c, mu=mu, **kwargs)
            for c in combiners
            for r in receivers
        ]
    except TypeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
