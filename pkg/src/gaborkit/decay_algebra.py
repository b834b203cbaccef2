"""Discretized kernel algebra: ``f = f~ + mu * delta`` on a uniform grid.

A kernel is stored by its smooth part ``tilde`` (samples ``f~(x_i, x_j)`` on a
grid of spacing ``h``) and the coefficient ``mu`` of the identity.  The
operator it represents acts on grid samples through the matrix
``h * tilde + mu * I``, so composition reduces to a matrix product.  Rows index
the output variable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np
from scipy.linalg import toeplitz

from .weights import WeightSpec, constant_one, polynomial, product

COND_CAP = 1e12


class NonInvertibleError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True, eq=False)
class KernelOperator:
    tilde: np.ndarray
    mu: complex = 0.0
    h: float = 1.0

    def __post_init__(self):
        t = np.asarray(self.tilde, dtype=complex)
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise ValueError("tilde must be a square matrix")
        if not np.all(np.isfinite(t)) or not np.isfinite(self.mu):
            raise ValueError("kernel entries must be finite")
        if not self.h > 0:
            raise ValueError("grid spacing must be positive")
        t.setflags(write=False)
        object.__setattr__(self, "tilde", t)
        object.__setattr__(self, "mu", complex(self.mu))
        object.__setattr__(self, "h", float(self.h))

    @property
    def n(self) -> int:
        return self.tilde.shape[0]

    def full(self) -> np.ndarray:
        """Matrix of the operator acting on grid samples."""
        return self.h * self.tilde + self.mu * np.eye(self.n)

    def apply(self, f) -> np.ndarray:
        return self.full() @ np.asarray(f)

    def offsets(self) -> np.ndarray:
        """Matrix of ``i - j`` in units of ``h``."""
        i = np.arange(self.n)
        return (i[:, None] - i[None, :]) * self.h

    def smooth_part(self) -> "KernelOperator":
        return KernelOperator(self.tilde, 0.0, self.h)

    def scaled(self, c) -> "KernelOperator":
        return KernelOperator(c * self.tilde, c * self.mu, self.h)

    def __add__(self, other: "KernelOperator") -> "KernelOperator":
        _check_compatible(self, other)
        return KernelOperator(self.tilde + other.tilde, self.mu + other.mu, self.h)

    def __matmul__(self, other: "KernelOperator") -> "KernelOperator":
        return star_compose(self, other)

    # -- persistence ------------------------------------------------------
    def save(self, path) -> None:
        """Write ``<path>.npy`` with ``tilde`` and ``<path>.json`` with ``mu, h, n``."""
        path = Path(path)
        np.save(path.with_suffix(".npy"), np.asarray(self.tilde))
        meta = {"mu": [self.mu.real, self.mu.imag], "h": self.h, "n": self.n}
        path.with_suffix(".json").write_text(json.dumps(meta))

    @classmethod
    def load(cls, path) -> "KernelOperator":
        path = Path(path)
        tilde = np.load(path.with_suffix(".npy"))
        meta = json.loads(path.with_suffix(".json").read_text())
        if tilde.shape != (meta["n"], meta["n"]):
            raise ValueError("sidecar size does not match matrix")
        mu = complex(*meta["mu"]) if isinstance(meta["mu"], list) else complex(meta["mu"])
        return cls(tilde, mu, meta["h"])


def identity(n: int, h: float = 1.0) -> KernelOperator:
    return KernelOperator(np.zeros((n, n)), 1.0, h)


def _check_compatible(K1: KernelOperator, K2: KernelOperator):
    if K1.n != K2.n:
        raise ValueError(f"size mismatch: {K1.n} vs {K2.n}")
    if not np.isclose(K1.h, K2.h, rtol=1e-12, atol=0):
        raise ValueError(f"grid spacing mismatch: {K1.h} vs {K2.h}")


def star_compose(K1: KernelOperator, K2: KernelOperator) -> KernelOperator:
    """``(f~1 + mu1 e) * (f~2 + mu2 e)`` with Riemann-sum quadrature."""
    _check_compatible(K1, K2)
    t = K1.h * (K1.tilde @ K2.tilde) + K1.mu * K2.tilde + K2.mu * K1.tilde
    return KernelOperator(t, K1.mu * K2.mu, K1.h)


def adjoint(K: KernelOperator) -> KernelOperator:
    return KernelOperator(K.tilde.conj().T, np.conj(K.mu), K.h)


# -- norms --------------------------------------------------------------------

def _weighted_abs(K: KernelOperator, w: Optional[WeightSpec]) -> np.ndarray:
    a = np.abs(K.tilde)
    if w is None or w.kind == "one":
        return a
    with np.errstate(over="ignore", invalid="ignore"):
        out = a * w(K.offsets())
    # zero entries stay zero even where the weight overflows
    return np.where(a == 0, 0.0, out)


def norm_L1v(K: KernelOperator, w: Optional[WeightSpec] = None) -> float:
    """Weighted Schur-type norm: max of weighted row and column integrals plus ``|mu|``."""
    a = _weighted_abs(K, w) * K.h
    return float(max(a.sum(axis=1).max(), a.sum(axis=0).max()) + abs(K.mu))


def norm_Lv(K: KernelOperator, w: Optional[WeightSpec] = None) -> float:
    """Weighted sup norm of the smooth part plus ``|mu|``."""
    return float(_weighted_abs(K, w).max() + abs(K.mu))


def norm_Bus(K: KernelOperator, u: Optional[WeightSpec] = None, s: float = 0.0) -> float:
    """``2^s ||f~||_{L1_u} + ||f~||_{L_v} + |mu|`` with ``v = u * tau_s``."""
    u = constant_one() if u is None else u
    v = product(u, s) if s else u
    sm = K.smooth_part()
    return float(2.0 ** s * norm_L1v(sm, u) + norm_Lv(sm, v) + abs(K.mu))


def discrete_subconv_constant(w: WeightSpec, n: int, h: float) -> float:
    """Grid version of the subconvolution constant.

    ``sup_x h * sum_y v(x) / (v(x - y) v(y))`` over grid offsets reachable in an
    ``n`` point section; it bounds ``||K1 * K2||_{L_v}`` by
    ``C ||f~1||_{L_v} ||f~2||_{L_v}`` for the smooth parts.
    """
    m = np.arange(-(n - 1), n) * h
    lv = w.log(m)
    best = 0.0
    for i in range(len(m)):
        x = m[i]
        # y runs over grid offsets with both y and x - y reachable
        ys = m[np.abs(x - m) <= (n - 1) * h + 1e-12]
        vals = np.exp(lv[i] - w.log(x - ys) - w.log(ys))
        best = max(best, float(h * vals.sum()))
    return best


# -- construction -------------------------------------------------------------

def laurent_from_generator(a: Union[Callable, np.ndarray], mu=0.0, n: int = 0,
                           h: float = 1.0) -> KernelOperator:
    """Laurent (convolution) kernel ``tilde_ij = a((i - j) h)``.

    ``a`` is either a callable or an array of ``2n - 1`` samples at offsets
    ``-(n-1)h, ..., (n-1)h``.
    """
    if callable(a):
        if n < 1:
            raise ValueError("n is required with a callable generator")
        vals = np.asarray(a(np.arange(-(n - 1), n) * h), dtype=complex)
    else:
        vals = np.asarray(a, dtype=complex)
        if vals.ndim != 1 or vals.size % 2 == 0:
            raise ValueError("generator array must have odd length 2n - 1")
        n = n or (vals.size + 1) // 2
        if vals.size != 2 * n - 1:
            raise ValueError("generator length does not match n")
    c = vals[n - 1:]       # offsets 0 .. n-1 down the first column
    r = vals[n - 1::-1]    # offsets 0 .. -(n-1) along the first row
    return KernelOperator(toeplitz(c, r), mu, h)


def gaussian_generator(amp: float = 2 ** 0.25, sigma: float = 1.0) -> Callable:
    return lambda t: amp * np.exp(-np.pi * sigma * np.asarray(t) ** 2)


def perturbed_identity(eps: float, n: int, h: float, generator: Optional[Callable] = None) -> KernelOperator:
    """``delta + eps * G`` for a Laurent kernel ``G`` (Gaussian by default)."""
    generator = gaussian_generator() if generator is None else generator
    G = laurent_from_generator(generator, 0.0, n, h)
    return KernelOperator(eps * G.tilde, 1.0, h)


def generator_of(K: KernelOperator) -> tuple:
    """Offsets and samples of the central row, read as a Laurent generator."""
    i0 = K.n // 2
    j = np.arange(K.n)
    return (i0 - j) * K.h, K.tilde[i0, :]


def generator_spectrum(K: KernelOperator, omega) -> np.ndarray:
    """Riemann-sum Fourier transform of the central-row generator at ``omega``."""
    t, g = generator_of(K)
    omega = np.asarray(omega, dtype=float)
    return K.h * np.exp(-2j * np.pi * np.multiply.outer(omega, t)) @ g


# -- inversion and spectra ----------------------------------------------------

def invert(K: KernelOperator) -> KernelOperator:
    """Inverse in the algebra, split as ``tilde_inv + (1/mu) e``."""
    A = K.full()
    c = np.linalg.cond(A)
    if not np.isfinite(c) or c > COND_CAP:
        raise NonInvertibleError(f"condition number {c:.3g} exceeds {COND_CAP:.0e}")
    Ainv = np.linalg.inv(A)
    mu_inv = 1.0 / K.mu if K.mu != 0 else 0.0
    tilde = (Ainv - mu_inv * np.eye(K.n)) / K.h
    return KernelOperator(tilde, mu_inv, K.h)


def operator_norm(K: KernelOperator) -> float:
    return float(np.linalg.norm(K.full(), 2))


def spectral_radius(K: KernelOperator) -> float:
    return float(np.abs(np.linalg.eigvals(K.full())).max())


def schur_bound(K: KernelOperator, p: float = 2.0) -> float:
    """Schur's test bound ``C1^(1/p') C2^(1/p)`` for the operator p-norm."""
    if not 1 <= p <= np.inf:
        raise ValueError("p must lie in [1, inf]")
    a = np.abs(K.full())
    C1 = a.sum(axis=0).max()
    C2 = a.sum(axis=1).max()
    inv_p = 0.0 if np.isinf(p) else 1.0 / p
    return float(C1 ** (1 - inv_p) * C2 ** inv_p)


# -- decay --------------------------------------------------------------------

@dataclass
class DecayReport:
    m: np.ndarray
    weighted: np.ndarray
    exponent: float
    fit_range: tuple

    @property
    def rate(self) -> float:
        """Decay rate per index step, ``-exponent``."""
        return -self.exponent

    def to_csv(self, path) -> None:
        k = np.arange(len(self.m))
        np.savetxt(path, np.column_stack([k, self.m, self.weighted]), delimiter=",",
                   header="k,m_k,weighted_k", comments="")


def diagonal_maxima(tilde: np.ndarray, interior: bool = True) -> np.ndarray:
    """``m_k = max |tilde_ij|`` over ``|i - j| = k``.

    With ``interior`` only entries centred in the middle half of the grid are
    used, which keeps boundary artifacts of the finite section out.
    """
    a = np.abs(tilde)
    n = a.shape[0]
    m = np.zeros(n)
    for k in range(n):
        j = np.arange(n - k)
        lo, hi = (n / 4, 3 * n / 4) if interior else (-np.inf, np.inf)
        c = j + k / 2
        sel = (c >= lo) & (c <= hi)
        if not sel.any():
            sel = np.ones_like(j, dtype=bool)
        m[k] = max(a[j[sel] + k, j[sel]].max(), a[j[sel], j[sel] + k].max())
    return m


def decay_profile(K: KernelOperator, w: Optional[WeightSpec] = None,
                  interior: bool = True) -> DecayReport:
    """Per-diagonal maxima, weighted profile and least-squares decay exponent.

    The exponent is the slope of ``log m_k`` against ``k`` on
    ``k in [n/8, n/2]``; it is ``nan`` when the fit window is all zero.
    """
    n = K.n
    m = diagonal_maxima(K.tilde, interior)
    wk = np.ones(n) if w is None else w(np.arange(n) * K.h)
    weighted = m * wk
    k0, k1 = n // 8, n // 2
    k = np.arange(k0, k1 + 1)
    y = m[k]
    pos = y > 0
    if pos.sum() < 2:
        exponent = float("nan")
    else:
        exponent = float(np.polyfit(k[pos], np.log(y[pos]), 1)[0])
    return DecayReport(m, weighted, exponent, (k0, k1))
