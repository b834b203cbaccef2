"""OFDM-family modulators and demodulators on Z_N with one-tap equalization.

Symbols are flat arrays ordered like :attr:`IntegerLattice.points`
(``k`` outer, ``l`` inner).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import gcd
from typing import Optional

import numpy as np

from .channel import add_awgn, apply_channel, weyl_symbol
from .gabor import GaborSystem, ebfdm_pair
from .lattice import IntegerLattice

SNIR_CAP = 160.0
# relative error treated as exact recovery: a few thousand ulps of round-off
PERFECT_RTOL = 1e-11


def qpsk(M: int, rng) -> np.ndarray:
    """Unit-modulus QPSK symbols."""
    re = rng.choice([-1.0, 1.0], M)
    im = rng.choice([-1.0, 1.0], M)
    return (re + 1j * im) / np.sqrt(2)


def as_grid(c, lattice: IntegerLattice) -> np.ndarray:
    """View flat symbols as ``(N/a, N/b)``."""
    return np.asarray(c).reshape(lattice.n_time, lattice.n_freq)


def _rect_synth(g, a: int, b: int, C) -> np.ndarray:
    """``sum_{k,m} C[k, m] roll(g, k a) exp(2 pi i m b j / N)``.

    Upsampled inverse DFT over ``m`` per time slot, times the shifted window.
    """
    N = g.size
    P = N // b
    # u_k[j] = sum_m C[k, m] exp(2 pi i m j / P), periodic with period P
    u = np.fft.ifft(C, n=P, axis=1) * P
    u = np.tile(u, (1, b))
    s = np.zeros(N, dtype=complex)
    for k in range(C.shape[0]):
        s += np.roll(g, k * a) * u[k]
    return s


class Transceiver:
    """Pulse-shaped multicarrier system on an integer lattice.

    ``tx`` and ``rx`` are the transmit and receive windows.  ``ref_points``
    are the time-frequency positions where the channel symbol is sampled for
    equalization.
    """

    mode = "generic"

    def __init__(self, tx, rx, lattice: IntegerLattice, ref_points=None):
        self.tx = np.asarray(tx, dtype=complex)
        self.rx = np.asarray(rx, dtype=complex)
        self.lattice = lattice
        self._ref = None if ref_points is None else np.asarray(ref_points, dtype=float)

    @property
    def N(self) -> int:
        return self.lattice.N

    @property
    def n_symbols(self) -> int:
        return self.lattice.size

    @property
    def ref_points(self) -> np.ndarray:
        return self.lattice.points.astype(float) if self._ref is None else self._ref

    @cached_property
    def tx_matrix(self) -> np.ndarray:
        return GaborSystem(self.tx, self.lattice).synthesis

    @cached_property
    def rx_matrix(self) -> np.ndarray:
        if self.rx is self.tx:
            return self.tx_matrix
        return GaborSystem(self.rx, self.lattice).synthesis

    def _check(self, c):
        c = np.asarray(c, dtype=complex).ravel()
        if c.size != self.n_symbols:
            raise ValueError(f"expected {self.n_symbols} symbols, got {c.size}")
        return c

    def modulate(self, c) -> np.ndarray:
        """Fast synthesis, decomposing the lattice into offset rectangular sublattices."""
        c = self._check(c)
        lat = self.lattice
        C = as_grid(c, lat)
        if lat.c == 0:
            return _rect_synth(self.tx, lat.a, lat.b, C)
        q = lat.a // gcd(lat.a, lat.c)
        shift = (q * lat.c // lat.a) % lat.n_time
        s = np.zeros(self.N, dtype=complex)
        j = np.arange(self.N)
        K = lat.n_time
        for r in range(q):
            ls = np.arange(r, lat.n_freq, q)
            m = np.arange(ls.size)
            # point (k, r + q m) sits in slot k' = k + m * shift of sublattice r
            Cr = np.zeros((K, ls.size), dtype=complex)
            for mi in m:
                Cr[:, mi] = np.roll(C[:, ls[mi]], mi * shift)
            g_r = np.roll(self.tx, r * lat.c)
            s += np.exp(2j * np.pi * r * lat.b * j / self.N) * _rect_synth(g_r, lat.a, q * lat.b, Cr)
        return s

    def modulate_direct(self, c) -> np.ndarray:
        return self.tx_matrix @ self._check(c)

    def demodulate(self, r) -> np.ndarray:
        """``c~_i = <r, rx_i>``."""
        return self.rx_matrix.conj().T @ np.asarray(r, dtype=complex)


class PSOFDM(Transceiver):
    mode = "psofdm"

    def __init__(self, pulse, lattice: IntegerLattice):
        pulse = np.asarray(pulse, dtype=complex)
        super().__init__(pulse, pulse, lattice)


class LOFDM(PSOFDM):
    """Pulse-shaped system on a lattice with a nonzero time offset ``c``."""

    mode = "lofdm"


class EBFDM(Transceiver):
    mode = "ebfdm"

    def __init__(self, base, lattice: IntegerLattice, p: float):
        tx, rx = ebfdm_pair(base, lattice, p)
        self.p = p
        super().__init__(tx, rx, lattice)


class CPOFDM(Transceiver):
    """Rectangular-window OFDM with a cyclic prefix.

    Useful symbol length is ``Tu = N/b``; each slot of ``a`` samples carries a
    prefix of ``cp_len`` samples followed by ``Tu`` samples.  The receiver
    drops the prefix.  Symbol ``k`` is referenced at the centre of its useful
    part.
    """

    mode = "cpofdm"

    def __init__(self, N: int, a: int, b: int, cp_len: int):
        lat = IntegerLattice(N, a, b)
        Tu = N // b
        if cp_len < 0:
            raise ValueError("cp_len must be nonnegative")
        if cp_len + Tu > a:
            raise ValueError(f"cp_len + N/b = {cp_len + Tu} exceeds the slot length a = {a}")
        tx = np.zeros(N)
        tx[:cp_len + Tu] = 1 / np.sqrt(Tu)
        rx = np.zeros(N)
        rx[cp_len:cp_len + Tu] = 1 / np.sqrt(Tu)
        pts = lat.points.astype(float)
        pts[:, 0] = lat.indices[:, 0] * a + cp_len + Tu / 2
        self.cp_len = cp_len
        super().__init__(tx, rx, lat, pts)


def equalize(c_tilde, S_H, sigma2: float = 0.0, return_flags: bool = False):
    """One-tap equalizer ``d = c~ / (S_H + sigma2)``.

    ``sigma2`` is added to the complex symbol as written.  Where the
    denominator vanishes the output is 0 and flagged.
    """
    c_tilde = np.asarray(c_tilde, dtype=complex)
    den = np.asarray(S_H, dtype=complex) + sigma2
    bad = den == 0
    d = np.where(bad, 0.0, c_tilde / np.where(bad, 1.0, den))
    return (d, bad) if return_flags else d


def relative_error(c, d) -> float:
    c = np.asarray(c)
    return float(np.linalg.norm(c - np.asarray(d)) / np.linalg.norm(c))


def snir(c, d, perfect_rtol: float = PERFECT_RTOL) -> float:
    """``-10 log10(||c - d|| / ||c||)`` in dB.

    Recovery with relative error at round-off level (``<= perfect_rtol``)
    counts as perfect and returns :data:`SNIR_CAP`.
    """
    e = relative_error(c, d)
    if e <= perfect_rtol:
        return SNIR_CAP
    return float(min(SNIR_CAP, -10 * np.log10(e)))


@dataclass
class TrialResult:
    snir: float
    symbols: np.ndarray
    recovered: np.ndarray


def run_link(trx: Transceiver, c, channel=None, noise_var: float = 0.0, noise_rng=None,
             sigma2: Optional[float] = None) -> TrialResult:
    """Modulate, pass through ``channel`` and AWGN, demodulate and equalize."""
    s = trx.modulate(c)
    r = s if channel is None else apply_channel(channel, s)
    r = add_awgn(r, noise_var, noise_rng)
    ct = trx.demodulate(r)
    S = np.ones(trx.n_symbols) if channel is None else weyl_symbol(channel, trx.ref_points, trx.N)
    d = equalize(ct, S, noise_var if sigma2 is None else sigma2)
    return TrialResult(snir(c, d), np.asarray(c), d)
