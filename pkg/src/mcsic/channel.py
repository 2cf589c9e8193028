"""Correlated flat Rayleigh fading (Jakes Doppler spectrum) and receiver noise.

Each (user, subcarrier) process is a sum of 64 randomized sinusoids sampled
once per symbol.  Inter-subcarrier correlation is imposed afterwards by mixing
the independent processes with the lower-triangular square root of the target
correlation matrix, so the Doppler shape and the branch correlation factor.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.special import j0 as _scipy_j0

DEFAULT_OSCILLATORS = 64


def bessel_j0(x: float) -> float:
    """Zero-order Bessel function of the first kind."""
    return float(_scipy_j0(x))


def convert_df_to_rho(df_over_dfc: float) -> float:
    """Zero-lag branch correlation for a given subcarrier spacing over
    coherence bandwidth."""
    if df_over_dfc < 0:
        raise ValueError(f"spacing ratio must be >= 0, got {df_over_dfc}")
    return 1.0 / np.sqrt(1.0 + df_over_dfc * df_over_dfc)


@dataclass(frozen=True)
class FadingSpec:
    fD_Tb: float
    rho: float
    L: int
    num_oscillators: int = DEFAULT_OSCILLATORS

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must be in [0,1], got {self.rho}")
        if not self.fD_Tb > 0:
            raise ValueError(f"fD_Tb must be > 0, got {self.fD_Tb}")
        if self.L < 1 or self.num_oscillators < 1:
            raise ValueError("L and num_oscillators must be >= 1")


@dataclass(frozen=True)
class ChannelRealization:
    gains: np.ndarray  # [K, L, M], nonnegative amplitudes
    phases: np.ndarray  # [K, L, M], compensated downstream


@njit(cache=True)
def _sos_synthesize(theta, phi, psi, omega, M, out_re, out_im):
    # one Doppler-shaped complex process: out = (sum cos(w_c t + phi_m)
    # + j sum cos(w_s t + psi_m)) / sqrt(n_osc), t = 0..M-1
    n_osc = phi.shape[0]
    for m in range(M):
        out_re[m] = 0.0
        out_im[m] = 0.0
    quarter = 4.0 * n_osc
    for i in range(n_osc):
        alpha = (2.0 * np.pi * (i + 1) - np.pi + theta) / quarter
        wc = omega * np.cos(alpha)
        ws = omega * np.sin(alpha)
        cos_wc = np.cos(wc)
        sin_wc = np.sin(wc)
        cos_ws = np.cos(ws)
        sin_ws = np.sin(ws)
        ci = np.cos(phi[i])
        si = np.sin(phi[i])
        cq = np.cos(psi[i])
        sq = np.sin(psi[i])
        for m in range(M):
            if m > 0 and m % 4096 == 0:
                # periodic exact refresh keeps rotation drift below 1e-12
                ci = np.cos(wc * m + phi[i])
                si = np.sin(wc * m + phi[i])
                cq = np.cos(ws * m + psi[i])
                sq = np.sin(ws * m + psi[i])
            out_re[m] += ci
            out_im[m] += cq
            ci, si = ci * cos_wc - si * sin_wc, si * cos_wc + ci * sin_wc
            cq, sq = cq * cos_ws - sq * sin_ws, sq * cos_ws + cq * sin_ws
    scale = 1.0 / np.sqrt(n_osc)
    for m in range(M):
        out_re[m] *= scale
        out_im[m] *= scale


def _mixing_matrix(L: int, rho: float) -> np.ndarray:
    if rho == 1.0:
        # fully correlated branches share one process
        a = np.zeros((L, L))
        a[:, 0] = 1.0
        return a
    corr = np.full((L, L), rho)
    np.fill_diagonal(corr, 1.0)
    return np.linalg.cholesky(corr)


def generate_fading(
    spec: FadingSpec, K: int, M: int, rng: np.random.Generator
) -> ChannelRealization:
    """Draw K independent users' L-branch correlated fading over M symbols.

    The random draws do not depend on rho (mixing happens after synthesis),
    so a fixed stream yields common fading across correlation sweeps.
    """
    if M < 1 or K < 1:
        raise ValueError("K and M must be >= 1")
    L = spec.L
    n_osc = spec.num_oscillators
    omega = 2.0 * np.pi * spec.fD_Tb

    raw_re = np.empty((L, M))
    raw_im = np.empty((L, M))
    mixed = np.empty((K, L, M), dtype=np.complex128)
    mix = _mixing_matrix(L, spec.rho)
    for k in range(K):
        for l in range(L):
            theta = rng.uniform(-np.pi, np.pi)
            phi = rng.uniform(-np.pi, np.pi, n_osc)
            psi = rng.uniform(-np.pi, np.pi, n_osc)
            _sos_synthesize(theta, phi, psi, omega, M, raw_re[l], raw_im[l])
        raw = raw_re + 1j * raw_im
        mixed[k] = mix @ raw.reshape(L, M)
    gains = np.abs(mixed)
    phases = np.angle(mixed)
    return ChannelRealization(gains=gains, phases=phases)


def awgn_chips(shape, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """White Gaussian chip noise, standard deviation sigma per entry."""
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return np.zeros(shape)
    return sigma * rng.standard_normal(shape)
