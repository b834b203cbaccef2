"""Admissible weight functions and numerical certificates for their properties.

A weight is stored through its logarithm ``log v(x) = kappa(|x|)`` so that
fast-growing weights can be compared without overflow.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.signal import fftconvolve


class DomainError(ValueError):
    """Raised when a weight is evaluated at a non-finite point."""


KINDS = ("exponential", "polynomial", "product", "one")


@dataclass(frozen=True)
class WeightSpec:
    """A weight ``v`` on R^d depending only on ``|x|``.

    Use the constructors :func:`exponential`, :func:`exponential_table`,
    :func:`polynomial`, :func:`product` and :func:`constant_one` rather than
    building instances directly.
    """

    kind: str
    dim: int = 1
    kappa: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False)
    s: float = 0.0
    base: Optional["WeightSpec"] = None
    label: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if self.dim < 1:
            raise ValueError("dimension must be a positive integer")
        if self.kind == "exponential" and self.kappa is None:
            raise ValueError("exponential weight needs kappa")
        if self.kind == "product" and self.base is None:
            raise ValueError("product weight needs a base weight")

    # -- evaluation -------------------------------------------------------
    def radius(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            raise DomainError("weight evaluated at a non-finite point")
        if self.dim == 1:
            return np.abs(x)
        if x.shape[-1] != self.dim:
            raise ValueError(f"last axis must have length {self.dim}")
        return np.linalg.norm(x, axis=-1)

    def log_radial(self, r: np.ndarray) -> np.ndarray:
        """``log v`` as a function of the radius ``r >= 0``."""
        r = np.asarray(r, dtype=float)
        if self.kind == "one":
            return np.zeros_like(r)
        if self.kind == "polynomial":
            return self.s * np.log1p(r)
        if self.kind == "product":
            return self.base.log_radial(r) + self.s * np.log1p(r)
        with np.errstate(over="ignore", invalid="ignore"):
            out = np.asarray(self.kappa(r), dtype=float)
        return np.broadcast_to(out, r.shape).copy()

    def log(self, x) -> np.ndarray:
        return self.log_radial(self.radius(x))

    def __call__(self, x) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log(x))

    # -- serialization ----------------------------------------------------
    def describe(self) -> dict:
        d = {"kind": self.kind, "dim": self.dim}
        if self.kind in ("polynomial", "product"):
            d["s"] = self.s
        if self.kind == "product":
            d["base"] = self.base.describe()
        if self.label:
            d["label"] = self.label
        return d


def eval_weight(w: WeightSpec, x) -> np.ndarray:
    """Evaluate ``w`` at ``x``; raises :class:`DomainError` for non-finite input."""
    return w(x)


# -- constructors -----------------------------------------------------------

def exponential(kappa: Callable, dim: int = 1, label: str = "") -> WeightSpec:
    """Weight ``exp(kappa(|x|))`` for a closed-form ``kappa`` with ``kappa(0) = 0``.

    Concavity of a closed-form ``kappa`` is the caller's responsibility; the
    certification functions below detect the consequences when it fails.
    """
    k0 = float(np.asarray(kappa(np.zeros(1)), dtype=float).ravel()[0])
    if k0 != 0.0:
        raise ValueError(f"kappa(0) must be 0, got {k0}")
    return WeightSpec("exponential", dim=dim, kappa=kappa, label=label)


def exponential_table(t, k, dim: int = 1, tol: float = 1e-12, label: str = "") -> WeightSpec:
    """Weight from a sampled concave, nondecreasing ``kappa`` table.

    The table is interpolated linearly and continued beyond its last node
    with the final slope, which keeps the extension concave.
    """
    t = np.asarray(t, dtype=float)
    k = np.asarray(k, dtype=float)
    if t.ndim != 1 or t.shape != k.shape or t.size < 2:
        raise ValueError("table needs matching 1-D arrays with at least two nodes")
    if t[0] != 0.0 or k[0] != 0.0:
        raise ValueError("table must start at kappa(0) = 0")
    if np.any(np.diff(t) <= 0):
        raise ValueError("table nodes must be strictly increasing")
    slopes = np.diff(k) / np.diff(t)
    if np.any(slopes < -tol):
        raise ValueError("kappa table must be nondecreasing")
    if np.any(np.diff(slopes) > tol):
        raise ValueError("kappa table must be concave")
    last = slopes[-1]

    def kappa(r):
        r = np.asarray(r, dtype=float)
        out = np.interp(r, t, k)
        beyond = r > t[-1]
        return np.where(beyond, k[-1] + last * (r - t[-1]), out)

    return WeightSpec("exponential", dim=dim, kappa=kappa, label=label or "table")


def polynomial(s: float, dim: int = 1) -> WeightSpec:
    """Polynomial weight ``tau_s(x) = (1 + |x|)^s``."""
    if s < 0:
        raise ValueError("polynomial exponent must be nonnegative")
    return WeightSpec("polynomial", dim=dim, s=float(s))


def product(u: WeightSpec, s: float) -> WeightSpec:
    """Product weight ``u(x) * tau_s(x)``."""
    return WeightSpec("product", dim=u.dim, s=float(s), base=u)


def constant_one(dim: int = 1) -> WeightSpec:
    return WeightSpec("one", dim=dim)


def subexponential(a: float = 1.0, b: float = 0.5, dim: int = 1) -> WeightSpec:
    """``exp(a |x|^b)`` with ``0 < b <= 1``."""
    return exponential(lambda r: a * np.power(r, b), dim=dim, label=f"exp({a}|x|^{b})")


def from_config(cfg: dict) -> WeightSpec:
    """Build a weight from a config mapping such as ``{"kind": "polynomial", "s": 2}``."""
    kind = cfg.get("kind", "one")
    dim = int(cfg.get("dim", 1))
    if kind == "polynomial":
        return polynomial(float(cfg["s"]), dim)
    if kind == "one":
        return constant_one(dim)
    if kind == "subexponential":
        return subexponential(float(cfg.get("a", 1.0)), float(cfg.get("b", 0.5)), dim)
    if kind == "product":
        return product(from_config(cfg["base"]), float(cfg["s"]))
    if kind == "table":
        return exponential_table(cfg["t"], cfg["k"], dim)
    raise ValueError(f"unknown weight kind {kind!r}")


# -- certification ----------------------------------------------------------

@dataclass
class SubmultReport:
    passed: bool
    worst_ratio: float
    worst_pair: tuple


def check_submultiplicative(w: WeightSpec, grid, tol: float = 1e-12) -> SubmultReport:
    """Check ``v(x+y) <= v(x) v(y)`` over all pairs of a symmetric 1-D grid."""
    grid = np.asarray(grid, dtype=float).ravel()
    if grid.size == 0:
        raise ValueError("empty grid")
    if not np.allclose(np.sort(grid), -np.sort(grid)[::-1], atol=1e-12 * (1 + np.abs(grid).max())):
        raise ValueError("grid must be symmetric about 0")
    X, Y = np.meshgrid(grid, grid, indexing="ij")
    if w.dim == 1:
        lr = w.log(X + Y) - w.log(X) - w.log(Y)
    else:
        # embed the 1-D grid along the first coordinate axis
        pad = np.zeros(X.shape + (w.dim,))
        px, py = pad.copy(), pad.copy()
        px[..., 0], py[..., 0] = X, Y
        lr = w.log(px + py) - w.log(px) - w.log(py)
    i = np.unravel_index(np.argmax(lr), lr.shape)
    with np.errstate(over="ignore"):
        worst = float(np.exp(lr[i]))
    return SubmultReport(bool(lr[i] <= np.log1p(tol)), worst, (float(X[i]), float(Y[i])))


@dataclass
class GRSReport:
    passed: bool
    limit_estimate: float
    overflow: bool
    sequence: np.ndarray
    monotone: bool


def check_grs(w: WeightSpec, x: float, n_max: int = 2 ** 20, tol: float = 0.05) -> GRSReport:
    """Estimate ``lim v(n x)^(1/n)`` along dyadic ``n`` up to ``n_max``.

    Passing requires the final estimate within ``tol`` of 1 and a monotone
    approach over the dyadic sequence.  This is a heuristic certificate.
    """
    if n_max < 16:
        raise ValueError("n_max must be at least 16")
    ns = 2.0 ** np.arange(0, int(np.floor(np.log2(n_max))) + 1)
    xs = np.asarray(x, dtype=float)
    pts = ns * xs if w.dim == 1 else ns[:, None] * np.broadcast_to(xs, (w.dim,))
    lv = w.log(pts)
    rate = lv / ns
    with np.errstate(over="ignore"):
        seq = np.exp(rate)
    overflow = bool(np.any(~np.isfinite(lv)) or np.any(~np.isfinite(seq)))
    with np.errstate(invalid="ignore"):
        dev = np.abs(seq - 1.0)
        monotone = (not overflow) and bool(np.all(np.diff(dev) <= 1e-12 * (1 + dev[:-1])))
    est = float(seq[-1])
    passed = (not overflow) and monotone and abs(est - 1.0) <= tol
    return GRSReport(passed, est, overflow, seq, monotone)


@dataclass
class SubconvReport:
    passed: bool
    C: float
    C_refined: float
    integrable: bool
    mass: float
    mass_refined: float


def _subconv_constant(w: WeightSpec, L: float, h: float):
    n = int(round(L / h))
    x = np.arange(-n, n + 1) * h
    # v^{-1} sampled on a wider support so the convolution at |x| <= L
    # sees the tails it needs
    m = 3 * n
    y = np.arange(-m, m + 1) * h
    vinv = np.exp(-w.log(y))
    conv = fftconvolve(vinv, vinv) * h
    # conv index 2m corresponds to x = 0
    conv_x = conv[2 * m - n: 2 * m + n + 1]
    C = float(np.max(conv_x * np.exp(w.log(x))))
    mass = float(np.sum(np.exp(-w.log(x))) * h)
    return C, mass


def check_subconvolutive(w: WeightSpec, grid=None, L: float = 100.0, h: float = 0.05,
                         rtol: float = 0.05) -> SubconvReport:
    """Estimate ``C = sup (v^-1 * v^-1)(x) v(x)`` and test it for stability.

    ``grid`` may be a symmetric uniform 1-D array, otherwise ``L`` and ``h``
    describe the window ``[-L, L]``.  The check is repeated on ``[-2L, 2L]``;
    both ``C`` and the mass of ``v^-1`` must agree within ``rtol``.
    """
    if w.dim != 1:
        raise ValueError("subconvolutivity check is implemented for d = 1")
    if grid is not None:
        grid = np.asarray(grid, dtype=float)
        if grid.size < 3:
            raise ValueError("grid too small")
        h = float(grid[1] - grid[0])
        L = float(grid[-1])
    C1, m1 = _subconv_constant(w, L, h)
    C2, m2 = _subconv_constant(w, 2 * L, h)
    integrable = bool(np.isfinite(m2) and abs(m2 - m1) <= rtol * m1)
    stable = bool(np.isfinite(C1) and np.isfinite(C2) and abs(C2 - C1) <= rtol * C1)
    return SubconvReport(integrable and stable, C1, C2, integrable, m1, m2)
