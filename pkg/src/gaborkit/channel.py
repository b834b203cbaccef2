"""WSSUS doubly dispersive channels on Z_N.

Delays are in samples, Doppler shifts in DFT bins, and delays act circularly.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np


@dataclass(frozen=True)
class ScatteringSpec:
    """Exponential delay profile times a Jakes-type Doppler spectrum.

    ``alpha`` is the amplitude at delay ``tau0`` relative to delay 0,
    ``beta`` in ``[0, 1)`` moves the Doppler spectrum from flat (0) toward the
    U-shaped Jakes spectrum.  ``fading`` is ``"ricean"`` (LOS tap of weight
    ``los_weight``) or ``"rayleigh"`` (no LOS tap).
    """

    tau0: int = 0
    nu0: int = 0
    alpha: float = 0.5
    beta: float = 0.5
    fading: str = "ricean"
    los_weight: float = 1.0

    def __post_init__(self):
        if self.tau0 < 0 or self.nu0 < 0:
            raise ValueError("tau0 and nu0 must be nonnegative")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if not 0 <= self.beta < 1:
            raise ValueError("beta must lie in [0, 1)")
        if self.fading not in ("ricean", "rayleigh"):
            raise ValueError(f"unknown fading {self.fading!r}")
        if self.los_weight < 0:
            raise ValueError("los_weight must be nonnegative")

    @property
    def shape(self) -> tuple:
        return (self.tau0 + 1, 2 * self.nu0 + 1)

    @property
    def los_tap(self) -> float:
        return float(np.sqrt(self.los_weight)) if self.fading == "ricean" else 0.0

    @property
    def has_scatter(self) -> bool:
        # a Ricean channel without spread is the pure LOS identity
        return self.fading == "rayleigh" or self.tau0 > 0 or self.nu0 > 0

    def validate(self, N: int) -> None:
        if self.tau0 >= N or 2 * self.nu0 + 1 > N:
            raise ValueError(f"tau0={self.tau0}, nu0={self.nu0} exceed a grid of size {N}")
        if self.tau0 * self.nu0 >= N:
            raise ValueError("channel is not underspread on this grid (tau0 * nu0 >= N)")

    def to_dict(self) -> dict:
        return asdict(self)


def delay_profile(spec: ScatteringSpec) -> np.ndarray:
    tau = np.arange(spec.tau0 + 1)
    if spec.tau0 == 0:
        return np.ones(1)
    return spec.alpha ** (tau / spec.tau0)


def jakes(spec: ScatteringSpec) -> np.ndarray:
    """``(1 - beta x^2)^(-1/2)`` at ``x = nu/nu0``, clipped at ``1 - 1/(4 nu0)``."""
    if spec.nu0 == 0:
        return np.ones(1)
    x = np.arange(-spec.nu0, spec.nu0 + 1) / spec.nu0
    edge = 1 - 1 / (4 * spec.nu0)
    x = np.clip(x, -edge, edge)
    return (1 - spec.beta * x ** 2) ** -0.5


def scattering_function(spec: ScatteringSpec, N: int) -> np.ndarray:
    """Scattered power over ``(delay, Doppler)``, normalized to unit total.

    The LOS tap is kept separately (see :attr:`ScatteringSpec.los_tap`).  A
    Ricean spec with ``tau0 = nu0 = 0`` has no scattered part and returns zeros.
    """
    spec.validate(N)
    S = np.outer(delay_profile(spec), jakes(spec))
    if not spec.has_scatter:
        return np.zeros_like(S)
    return S / S.sum()


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    spreading: np.ndarray
    los_tap: complex
    nu0: int
    seed: object = None

    @property
    def tau0(self) -> int:
        return self.spreading.shape[0] - 1

    @property
    def delays(self) -> np.ndarray:
        return np.arange(self.spreading.shape[0])

    @property
    def dopplers(self) -> np.ndarray:
        return np.arange(-self.nu0, self.nu0 + 1)

    def to_csv(self, path) -> None:
        T, V = np.meshgrid(self.delays, self.dopplers, indexing="ij")
        s = self.spreading
        rows = np.column_stack([T.ravel(), V.ravel(), s.real.ravel(), s.imag.ravel()])
        np.savetxt(path, rows, delimiter=",", header=f"tau,nu,re,im  # los={self.los_tap}", comments="",
                   fmt=["%d", "%d", "%.17g", "%.17g"])


def identity_channel() -> ChannelRealization:
    return ChannelRealization(np.zeros((1, 1), dtype=complex), 1.0, 0)


def single_tap(tau: int, nu: int, weight: complex = 1.0) -> ChannelRealization:
    """Channel with one scatterer at ``(tau, nu)`` and no LOS tap."""
    n0 = abs(nu)
    S = np.zeros((tau + 1, 2 * n0 + 1), dtype=complex)
    S[tau, nu + n0] = weight
    return ChannelRealization(S, 0.0, n0)


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def realize(spec: ScatteringSpec, N: int, seed=None) -> ChannelRealization:
    """Draw ``sqrt(S) * CN(0, 1)`` independently per cell."""
    S = scattering_function(spec, N)
    rng = _rng(seed)
    z = (rng.standard_normal(S.shape) + 1j * rng.standard_normal(S.shape)) / np.sqrt(2)
    return ChannelRealization(np.sqrt(S) * z, spec.los_tap, spec.nu0, seed if not isinstance(seed, np.random.Generator) else None)


def apply_channel(ch: ChannelRealization, s) -> np.ndarray:
    """``r[t] = los s[t] + sum S(tau, nu) s[t - tau] exp(2 pi i nu t / N)``."""
    s = np.asarray(s, dtype=complex)
    N = s.size
    t = np.arange(N)
    r = ch.los_tap * s
    for it, tau in enumerate(ch.delays):
        row = ch.spreading[it]
        if not np.any(row):
            continue
        sh = np.roll(s, tau)
        # Doppler superposition for this delay as one multiplier
        mult = np.exp(2j * np.pi * np.outer(t, ch.dopplers) / N) @ row
        r = r + mult * sh
    return r


def weyl_symbol(ch: ChannelRealization, points, N: int) -> np.ndarray:
    """``S_H(lam, nu) = los + sum S(tau, v) exp(-2 pi i (tau nu - v lam) / N)``.

    ``points`` is an ``(M, 2)`` array of ``(time, frequency)`` positions in
    samples and bins; non-integer positions are allowed.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    lam, mu = pts[:, 0], pts[:, 1]
    tau = ch.delays.astype(float)
    v = ch.dopplers.astype(float)
    ph_tau = np.exp(-2j * np.pi * np.outer(mu, tau) / N)
    ph_v = np.exp(2j * np.pi * np.outer(lam, v) / N)
    return np.einsum("mt,tv,mv->m", ph_tau, ch.spreading, ph_v) + ch.los_tap


def add_awgn(s, variance: float, seed=None) -> np.ndarray:
    """Add circular complex white noise of per-sample variance ``variance``."""
    s = np.asarray(s, dtype=complex)
    if variance < 0:
        raise ValueError("variance must be nonnegative")
    if variance == 0:
        return s.copy()
    rng = _rng(seed)
    n = rng.standard_normal(s.shape) + 1j * rng.standard_normal(s.shape)
    return s + np.sqrt(variance / 2) * n
