"""Discrete Gabor analysis on Z_N.

Signals are plain complex arrays of length ``N``.  Sample ``j`` sits at time
``t_j = j_c * dt`` with ``j_c`` the centred index in ``[-N/2, N/2)``, so the
origin is index 0.  With the default ``dt = 1/sqrt(N)`` the time and
frequency grids coincide and the unitary DFT samples the continuous Fourier
transform.

The atom at lattice point ``(x, w)`` is ``roll(g, x) * exp(2 pi i w j / N)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np
from scipy.linalg import expm

from .lattice import IntegerLattice, LatticeGenerator, realize, transition_params


class NotRieszError(np.linalg.LinAlgError):
    """Gram matrix is singular: the system is not a Riesz sequence."""


class SpectralBoundViolation(RuntimeError):
    pass


# -- grids and basic operators ------------------------------------------------

def default_dt(N: int) -> float:
    return 1.0 / np.sqrt(N)


def centered_index(N: int) -> np.ndarray:
    return (np.arange(N) + N // 2) % N - N // 2


def times(N: int, dt: Optional[float] = None) -> np.ndarray:
    return centered_index(N) * (default_dt(N) if dt is None else dt)


def freqs(N: int, dt: Optional[float] = None) -> np.ndarray:
    dt = default_dt(N) if dt is None else dt
    return centered_index(N) / (N * dt)


def gaussian(N: int, sigma: float = 1.0, dt: Optional[float] = None, periods: int = 3) -> np.ndarray:
    """Periodized, unit-norm samples of ``(2 sigma)^(1/4) exp(-pi sigma t^2)``."""
    if N < 2:
        raise ValueError("N must be at least 2")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    dt = default_dt(N) if dt is None else dt
    j = np.arange(N)
    g = np.zeros(N)
    for p in range(-periods, periods + 1):
        t = (j + p * N) * dt
        g += (2 * sigma) ** 0.25 * np.exp(-np.pi * sigma * t ** 2)
    return g / np.linalg.norm(g)


def dft(f) -> np.ndarray:
    return np.fft.fft(f, norm="ortho")


def idft(f) -> np.ndarray:
    return np.fft.ifft(f, norm="ortho")


def atom(f, x: int, w: int) -> np.ndarray:
    """Time shift by ``x`` samples then modulation by ``w`` bins."""
    f = np.asarray(f)
    N = f.size
    return np.roll(f, x) * np.exp(2j * np.pi * w * np.arange(N) / N)


def tf_shift(f, k: int, l: int, lattice: IntegerLattice) -> np.ndarray:
    """Atom at lattice index ``(k, l)``."""
    x = (k * lattice.a + l * lattice.c) % lattice.N
    return atom(f, x, l * lattice.b)


def _trig_eval(f, pos) -> np.ndarray:
    """Band-limited trigonometric interpolant of ``f`` at fractional sample positions."""
    f = np.asarray(f, dtype=complex)
    N = f.size
    F = np.fft.fft(f) / N
    k = centered_index(N).astype(float)
    if N % 2 == 0:
        # split the Nyquist bin so real input stays real
        ny = N // 2
        F = np.append(F, F[ny] / 2)
        F[ny] /= 2
        k = np.append(k, float(ny))
    pos = np.asarray(pos, dtype=float)
    out = np.empty(pos.size, dtype=complex)
    step = max(1, 2 ** 22 // k.size)
    for s in range(0, pos.size, step):
        out[s:s + step] = np.exp(2j * np.pi * np.outer(pos[s:s + step], k) / N) @ F
    return out


def resample(f, dt_from: float, dt_to: float, N_to: Optional[int] = None) -> np.ndarray:
    """Resample a unit-norm signal from spacing ``dt_from`` to ``dt_to``.

    The scale ``sqrt(dt_to / dt_from)`` keeps the discrete norm equal to the
    continuous ``L2`` norm of the represented function.
    """
    f = np.asarray(f)
    N_to = f.size if N_to is None else N_to
    r = dt_to / dt_from
    return np.sqrt(r) * _trig_eval(f, centered_index(N_to) * r)


def dilate(f, alpha: float) -> np.ndarray:
    """``sqrt(alpha) f(alpha t)`` via band-limited interpolation; any real ``alpha > 0``."""
    if not alpha > 0:
        raise ValueError("dilation factor must be positive")
    if alpha > 1:
        # compressing in time would sample past the period; stretch the spectrum instead
        return idft(resample(dft(f), 1.0, 1.0 / alpha))
    return resample(f, 1.0, alpha)


def chirp(f, beta: float, dt: Optional[float] = None) -> np.ndarray:
    """Multiply by ``exp(-pi i beta t^2)``."""
    f = np.asarray(f)
    t = times(f.size, dt)
    return f * np.exp(-1j * np.pi * beta * t ** 2)


def translate(f, x: float, dt: Optional[float] = None) -> np.ndarray:
    """Continuous time shift ``f(t - x)`` through a Fourier phase ramp."""
    f = np.asarray(f)
    nu = freqs(f.size, dt)
    return np.fft.ifft(np.fft.fft(f) * np.exp(-2j * np.pi * nu * x))


def modulate(f, omega: float, dt: Optional[float] = None) -> np.ndarray:
    f = np.asarray(f)
    return f * np.exp(2j * np.pi * omega * times(f.size, dt))


def sym_shift(f, x: float, omega: float, dt: Optional[float] = None) -> np.ndarray:
    """Symmetric time-frequency shift ``exp(-pi i x w) M_w T_x f``.

    Metaplectic operators map these shifts onto each other without extra
    phases, which makes Gram matrices comparable across lattices.
    """
    return np.exp(-1j * np.pi * x * omega) * modulate(translate(f, x, dt), omega, dt)


def metaplectic(f, alpha: float, beta: float) -> np.ndarray:
    """``F D_{1/alpha} C_{-beta alpha^2} F^-1 f`` on the self-dual grid.

    The operator intertwines the symmetric shift at ``(x, w)`` with the one at
    ``(x/alpha - beta alpha w, alpha w)``.
    """
    u = idft(f)
    u = chirp(u, -beta * alpha ** 2)
    u = dilate(u, 1.0 / alpha)
    return dft(u)


def adapt_pulse(phi1, L1: LatticeGenerator, L2: LatticeGenerator) -> np.ndarray:
    """Carry a pulse adapted to ``L1`` over to the equal-density lattice ``L2``."""
    alpha, beta = transition_params(L1, L2)
    if alpha == 1.0 and beta == 0.0:
        return np.asarray(phi1, dtype=complex).copy()
    return metaplectic(phi1, alpha, beta)


# -- matrix functions ---------------------------------------------------------

def matrix_power(R, p: float, tol: float = 0.0) -> np.ndarray:
    """``U diag(lam^p) U*`` for Hermitian ``R``."""
    R = np.asarray(R)
    if p == 0:
        return np.eye(R.shape[0], dtype=R.dtype)
    lam, U = np.linalg.eigh(R)
    if (p < 0 or p != int(p)) and lam.min() <= tol:
        raise np.linalg.LinAlgError("matrix power needs positive eigenvalues")
    return (U * lam ** p) @ U.conj().T


def finite_lowdin(Phi) -> np.ndarray:
    """``Phi (Phi* Phi)^(-1/2) = U V*``, the closest matrix with orthonormal columns."""
    Phi = np.asarray(Phi)
    U, s, Vh = np.linalg.svd(Phi, full_matrices=False)
    if s.min() <= max(Phi.shape) * np.finfo(float).eps * s.max():
        raise np.linalg.LinAlgError("matrix is rank deficient")
    return U @ Vh


def weighted_lowdin_svd(Phi, W) -> np.ndarray:
    """Unitary ``Q`` minimizing ``||(Phi - Q) W||_F``, from the SVD of ``Phi W W*``."""
    Phi = np.asarray(Phi)
    W = np.asarray(W)
    M = Phi @ W @ W.conj().T
    if not np.any(M):
        raise ValueError("weighted matrix vanishes")
    U, _, Vh = np.linalg.svd(M)
    return U @ Vh


# -- Gabor systems ------------------------------------------------------------

@dataclass
class LowdinResult:
    pulse: np.ndarray
    distance: float
    bound: float


class GaborSystem:
    """Window ``g`` shifted over an integer lattice on ``Z_N``."""

    def __init__(self, window, lattice: IntegerLattice):
        window = np.asarray(window, dtype=complex)
        if window.ndim != 1 or window.size != lattice.N:
            raise ValueError("window length must equal lattice N")
        self.window = window
        self.lattice = lattice

    @property
    def N(self) -> int:
        return self.lattice.N

    @cached_property
    def synthesis(self) -> np.ndarray:
        """``N x |Lambda|`` matrix whose columns are the atoms."""
        pts = self.lattice.points
        j = np.arange(self.N)
        cols = np.empty((self.N, len(pts)), dtype=complex)
        for i, (x, w) in enumerate(pts):
            cols[:, i] = np.roll(self.window, x) * np.exp(2j * np.pi * w * j / self.N)
        return cols

    @cached_property
    def gram(self) -> np.ndarray:
        """``R[i, i'] = <g_{i'}, g_i>`` built from the correlation table of ``g``."""
        N = self.N
        g = self.window
        pts = self.lattice.points
        # Q[d, D] = sum_m g[m-d] conj(g[m]) exp(2 pi i D m / N)
        prod = np.stack([np.roll(g, d) * g.conj() for d in range(N)])
        Q = N * np.fft.ifft(prod, axis=1)
        x, w = pts[:, 0], pts[:, 1]
        dx = (x[None, :] - x[:, None]) % N
        dw = (w[None, :] - w[:, None]) % N
        R = np.exp(2j * np.pi * dw * x[:, None] / N) * Q[dx, dw]
        return (R + R.conj().T) / 2

    @cached_property
    def eig(self) -> tuple:
        return np.linalg.eigh(self.gram)

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        if "eig" in self.__dict__:
            return self.eig[0]
        return np.linalg.eigvalsh(self.gram)

    @property
    def cond(self) -> float:
        lam = self.eigenvalues
        if lam[0] <= 0:
            return float("inf")
        return float(lam[-1] / lam[0])

    def _gram_power_column(self, p: float) -> np.ndarray:
        lam, U = self.eig
        if lam[0] <= 1e-13 * lam[-1]:
            raise NotRieszError(f"Gram matrix is singular (min eigenvalue {lam[0]:.3g})")
        return U @ (lam ** p * U[0].conj())

    def lowdin_result(self) -> LowdinResult:
        phi = self.synthesis @ self._gram_power_column(-0.5)
        lam = self.eig[0]
        bound = float(max(abs(1 - lam[0] ** -0.5), abs(1 - lam[-1] ** -0.5)))
        dist = float(np.linalg.norm(self.window - phi))
        if dist > bound + 1e-9:
            raise SpectralBoundViolation(f"||g - phi|| = {dist} exceeds spectral bound {bound}")
        return LowdinResult(phi / np.linalg.norm(phi), dist, bound)

    def lowdin(self) -> np.ndarray:
        return self.lowdin_result().pulse

    def gram_power_pulse(self, p: float) -> np.ndarray:
        """``sum_i (R^-p)_{i0} g_i``."""
        return self.synthesis @ self._gram_power_column(-p)

    # frame side
    @cached_property
    def frame_operator(self) -> np.ndarray:
        P = self.synthesis
        return P @ P.conj().T

    def frame_apply(self, f) -> np.ndarray:
        P = self.synthesis
        return P @ (P.conj().T @ np.asarray(f))

    def _frame_power(self, p: float, f, rtol: float = 1e-10) -> np.ndarray:
        lam, U = np.linalg.eigh(self.frame_operator)
        keep = lam > rtol * lam[-1]
        Uk = U[:, keep]
        return Uk @ (lam[keep] ** p * (Uk.conj().T @ np.asarray(f)))

    def tight_window(self) -> np.ndarray:
        """``S^(-1/2) g`` evaluated on the range of ``S``."""
        return self._frame_power(-0.5, self.window)

    def canonical_dual(self) -> np.ndarray:
        return self._frame_power(-1.0, self.window)

    def orthonormality_error(self) -> float:
        return float(np.abs(self.gram - np.eye(self.lattice.size)).max())


def lowdin(g, lattice: IntegerLattice) -> np.ndarray:
    return GaborSystem(g, lattice).lowdin()


def gram_matrix(g, lattice: IntegerLattice) -> np.ndarray:
    return GaborSystem(g, lattice).gram


def frame_operator_apply(g, lattice: IntegerLattice, f) -> np.ndarray:
    return GaborSystem(g, lattice).frame_apply(f)


def tight_window(g, lattice: IntegerLattice) -> np.ndarray:
    return GaborSystem(g, lattice).tight_window()


def phase_aligned_distance(u, v) -> float:
    """``min_theta ||u - exp(i theta) v||``."""
    u = np.asarray(u)
    v = np.asarray(v)
    c = np.vdot(v, u)
    ph = c / abs(c) if abs(c) > 0 else 1.0
    return float(np.linalg.norm(u - ph * v))


def _unit(v):
    return v / np.linalg.norm(v)


@dataclass
class DualityReport:
    discrepancy: float
    lowdin_pulse: np.ndarray
    tight_pulse: np.ndarray
    adjoint: IntegerLattice


def check_lowdin_tight_duality(g, lattice: IntegerLattice) -> DualityReport:
    """Compare the Löwdin pulse on the adjoint lattice with the tight window on ``lattice``.

    Both pulses are unit-normalized; the discrepancy is minimized over a
    global phase.
    """
    adj = lattice.adjoint()
    phi_a = _unit(lowdin(g, adj))
    phi_b = _unit(tight_window(g, lattice))
    return DualityReport(phase_aligned_distance(phi_a, phi_b), phi_a, phi_b, adj)


@dataclass
class WexlerRazReport:
    passed: bool
    max_deviation: float
    frame_deviation: float


def wexler_raz_check(g, gamma, lattice: IntegerLattice, tol: float = 1e-8) -> WexlerRazReport:
    """Biorthogonality ``(|L|/N) <gamma, pi(mu) g> = delta_{mu,0}`` over the adjoint lattice.

    ``frame_deviation`` is the equivalent check on ``sum <f, g_l> gamma_l = f``.
    """
    adj = lattice.adjoint()
    xi = lattice.size / lattice.N
    gamma = np.asarray(gamma, dtype=complex)
    dev = 0.0
    for x, w in adj.points:
        val = xi * np.vdot(atom(g, x, w), gamma)
        target = 1.0 if (x == 0 and w == 0) else 0.0
        dev = max(dev, abs(val - target))
    Pg = GaborSystem(g, lattice).synthesis
    Pc = GaborSystem(gamma, lattice).synthesis
    fdev = float(np.abs(Pc @ Pg.conj().T - np.eye(lattice.N)).max())
    return WexlerRazReport(bool(dev <= tol and fdev <= tol), float(dev), fdev)


def ebfdm_pair(h, lattice: IntegerLattice, p: float) -> tuple:
    """Biorthogonal transmit/receive pulses ``R^-p``- and ``R^(p-1)``-weighted.

    The transmit pulse has unit norm and the receive pulse carries the
    reciprocal scale, so the cross-Gram is the identity.  For ``p = 1/2`` both
    outputs are the same Löwdin array.
    """
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    sysm = GaborSystem(h, lattice)
    if p == 0.5:
        phi = sysm.lowdin()
        return phi, phi
    tx = sysm.gram_power_pulse(p)
    rx = sysm.gram_power_pulse(1 - p)
    n = np.linalg.norm(tx)
    return tx / n, rx * n


def cross_gram(tx, rx, lattice: IntegerLattice) -> np.ndarray:
    """``G[i, i'] = <tx_{i'}, rx_i>``."""
    A = GaborSystem(tx, lattice).synthesis
    B = GaborSystem(rx, lattice).synthesis
    return B.conj().T @ A


def random_orthonormal_generator(sysm: GaborSystem, rng, scale: float = 1.0) -> np.ndarray:
    """Random generator of an orthonormal system on the same lattice and span.

    The Löwdin coefficient vector is rotated by ``exp(iH)`` with ``H`` a random
    Hermitian element of the commutant of the lattice shifts (a cross-Gram of
    two random windows), so orthonormality is preserved.
    """
    N = sysm.N
    u = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    w = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    X = GaborSystem(w, sysm.lattice).synthesis.conj().T @ GaborSystem(u, sysm.lattice).synthesis
    H = (X + X.conj().T) / 2
    H *= scale / max(np.linalg.norm(H, 2), 1e-300)
    lam, U = sysm.eig
    B = sysm.synthesis @ ((U * lam ** -0.5) @ U.conj().T)
    return B @ expm(1j * H)[:, 0]


# -- localization -------------------------------------------------------------

def ambiguity(f, h=None) -> np.ndarray:
    """Cross-ambiguity ``exp(pi i x w / N) <f, pi(x, w) h>`` for all lags and bins.

    Rows are lags ``x``, columns bins ``w``, both in DFT order.
    """
    f = np.asarray(f, dtype=complex)
    h = f if h is None else np.asarray(h, dtype=complex)
    N = f.size
    prod = np.stack([f * np.roll(h, x).conj() for x in range(N)])
    V = np.fft.fft(prod, axis=1)
    c = centered_index(N)
    return np.exp(1j * np.pi * np.outer(c, c) / N) * V


def effective_support(A, eps: float) -> np.ndarray:
    return np.abs(A) > eps


def _centred_var(p):
    p = p / p.sum()
    # circular centroid, then centred second moment
    N = p.size
    ang = np.angle(np.sum(p * np.exp(2j * np.pi * np.arange(N) / N)))
    mu = ang * N / (2 * np.pi)
    d = (np.arange(N) - mu + N / 2) % N - N / 2
    return float(np.sum(p * d ** 2))


def tfl_moments(f, dt: Optional[float] = None) -> tuple:
    """Centroid-centred spreads ``(dtau, dnu)`` in time and frequency units."""
    f = np.asarray(f)
    N = f.size
    dt = default_dt(N) if dt is None else dt
    vt = _centred_var(np.abs(f) ** 2)
    vf = _centred_var(np.abs(dft(f)) ** 2)
    return np.sqrt(vt) * dt, np.sqrt(vf) / (N * dt)


def tfl_product(f) -> float:
    dtau, dnu = tfl_moments(f)
    return float(dtau * dnu)


def ambiguity_moments(A) -> tuple:
    """Centred second moments of ``|A|^2`` in lags and bins (normalized)."""
    P = np.abs(A) ** 2
    return _centred_var(P.sum(axis=1)), _centred_var(P.sum(axis=0))


# -- lattice-adapted pulses ---------------------------------------------------

def pulse_for_lattice(L: LatticeGenerator, N: int = 512, sigma: float = 1.0) -> np.ndarray:
    """Löwdin pulse of ``g_sigma`` on the real lattice ``L``, on the standard grid.

    ``L`` is realized exactly on ``Z_N`` with its own spacing ``dt``; the
    pulse is then resampled to ``dt = 1/sqrt(N)``.
    """
    lat, dt = realize(L, N)
    phi = lowdin(gaussian(N, sigma, dt=dt), lat)
    return resample(phi, dt, default_dt(N))


def lattice_patch(L: LatticeGenerator, radius: int = 2) -> np.ndarray:
    i, j = np.meshgrid(np.arange(-radius, radius + 1), np.arange(-radius, radius + 1), indexing="ij")
    c = np.column_stack([i.ravel(), j.ravel()]).astype(float)
    return c @ L.matrix.T


def patch_gram(f, L: LatticeGenerator, radius: int = 2, dt: Optional[float] = None) -> np.ndarray:
    """Gram matrix of symmetric shifts of ``f`` over a patch of ``L``."""
    pts = lattice_patch(L, radius)
    P = np.column_stack([sym_shift(f, x, w, dt) for x, w in pts])
    return P.conj().T @ P


def _grid_for_rect(T: float, F: float, N_min: int = 256, N_max: int = 4096, tol: float = 1e-9):
    """Smallest ``N >= N_min`` with integer ``a = T sqrt(N)`` and ``b = F sqrt(N)`` dividing ``N``."""
    for N in range(N_min, N_max + 1):
        a, b = T * np.sqrt(N), F * np.sqrt(N)
        if abs(a - round(a)) < tol and abs(b - round(b)) < tol:
            a, b = int(round(a)), int(round(b))
            if a > 0 and b > 0 and N % a == 0 and N % b == 0:
                return N, a, b
    raise ValueError(f"no standard grid realizes rect({T}, {F})")


@dataclass
class DilationReport:
    discrepancy: float
    lhs: np.ndarray
    rhs: np.ndarray
    grid: tuple


def dilation_commutes_with_lowdin_check(sigma: float, rho: float, N: int = 512) -> DilationReport:
    """Compare ``Lo(g_sigma, T, F)`` with ``D_sqrt(sigma) Lo(g, 1/sqrt(rho), 1/sqrt(rho))``.

    Here ``T = 1/sqrt(sigma rho)`` and ``F = sqrt(sigma/rho)``.  The left side
    is computed on its own standard grid ``N'`` (``dt' = 1/sqrt(N')``) and
    resampled; the right side on ``Z_N``.
    """
    T, F = 1 / np.sqrt(sigma * rho), np.sqrt(sigma / rho)
    N2, a2, b2 = _grid_for_rect(T, F, N_min=N)
    lhs = lowdin(gaussian(N2, sigma), IntegerLattice(N2, a2, b2))
    lhs = resample(lhs, default_dt(N2), default_dt(N), N_to=N)
    T0 = 1 / np.sqrt(rho)
    a0 = T0 * np.sqrt(N)
    if abs(a0 - round(a0)) > 1e-9:
        raise ValueError(f"1/sqrt(rho) * sqrt(N) must be an integer, got {a0}")
    a0 = int(round(a0))
    base = lowdin(gaussian(N, 1.0), IntegerLattice(N, a0, a0))
    rhs = dilate(base, np.sqrt(sigma))
    return DilationReport(phase_aligned_distance(_unit(lhs), _unit(rhs)), lhs, rhs, (N2, a2, b2))


# -- I/O ------------------------------------------------------------------------

def save_pulse(path, f) -> None:
    f = np.asarray(f, dtype=complex)
    np.savetxt(path, np.column_stack([np.arange(f.size), f.real, f.imag]), delimiter=",",
               header="index,re,im", comments="", fmt=["%d", "%.17g", "%.17g"])


def load_pulse(path) -> np.ndarray:
    d = np.loadtxt(path, delimiter=",", skiprows=1)
    return d[:, 1] + 1j * d[:, 2]


def save_ambiguity(path, A, dt: Optional[float] = None) -> None:
    N = A.shape[0]
    t = times(N, dt)
    nu = freqs(N, dt)
    T, V = np.meshgrid(t, nu, indexing="ij")
    np.savetxt(path, np.column_stack([T.ravel(), V.ravel(), np.abs(A).ravel()]), delimiter=",",
               header="t,nu,absA", comments="")
