"""Time-frequency lattices.

Two representations are used:

* :class:`LatticeGenerator` -- a real upper-triangular generator
  ``[[x, y], [0, z]]`` whose columns span the lattice in the plane.
* :class:`IntegerLattice` -- a lattice on ``Z_N x Z_N`` with points
  ``(k a + l c mod N, l b)``; this is what the discrete Gabor code consumes.

:func:`realize` links the two: it finds integer parameters and a sample
spacing ``dt`` for which the integer lattice is exactly a given real one.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import gcd

import numpy as np

Q3 = 3 ** 0.25  # fourth root of 3, recurring in hexagonal generators


class DensityMismatch(ValueError):
    pass


def _rel_close(a, b, tol=1e-12):
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


@dataclass(frozen=True)
class LatticeGenerator:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if self.x == 0 or self.z == 0:
            raise ValueError("generator needs x != 0 and z != 0")

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.x, self.y], [0.0, self.z]])

    @property
    def density(self) -> float:
        return 1.0 / abs(self.x * self.z)

    def allclose(self, other: "LatticeGenerator", tol: float = 1e-12) -> bool:
        return bool(np.allclose(self.matrix, other.matrix, rtol=0, atol=tol))

    def scaled(self, c: float) -> "LatticeGenerator":
        return LatticeGenerator(c * self.x, c * self.y, c * self.z)

    def to_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "z": self.z}


def density(L: LatticeGenerator) -> float:
    return L.density


def rectangular(T: float, F: float) -> LatticeGenerator:
    return LatticeGenerator(T, 0.0, F)


def hexagonal(T: float, F: float) -> LatticeGenerator:
    """Hexagonal generator with the same density as ``rectangular(T, F)``."""
    s2 = np.sqrt(2.0)
    return LatticeGenerator(s2 * T / Q3, s2 * T / (2 * Q3), Q3 * F / s2)


def from_config(cfg: dict) -> LatticeGenerator:
    """``{"x":..,"y":..,"z":..}`` or ``{"name": "hex"|"rect", "T":.., "F":..}``."""
    if "name" in cfg:
        ctor = {"hex": hexagonal, "rect": rectangular}[cfg["name"]]
        return ctor(float(cfg["T"]), float(cfg["F"]))
    return LatticeGenerator(float(cfg["x"]), float(cfg.get("y", 0.0)), float(cfg["z"]))


def adjoint_lattice(L: LatticeGenerator, d: int = 1) -> LatticeGenerator:
    """Adjoint lattice of a symplectic lattice in the time-frequency plane.

    For ``d = 1`` every lattice is symplectic and the adjoint is ``L``
    scaled by its density, so that ``density(adjoint) = 1 / density(L)``.
    """
    if d != 1:
        raise NotImplementedError("only d = 1 time-frequency lattices are supported")
    return L.scaled(L.density)


# -- symplectic transitions ---------------------------------------------------

J = np.array([[0.0, 1.0], [-1.0, 0.0]])


def chirp_matrix(beta: float) -> np.ndarray:
    return np.array([[1.0, 0.0], [beta, 1.0]])


def dilation_matrix(alpha: float) -> np.ndarray:
    return np.diag([alpha, 1.0 / alpha])


def transition_matrix(alpha: float, beta: float) -> np.ndarray:
    """Action ``(x, w) -> (x/alpha - beta alpha w, alpha w)`` of the pulse map."""
    return np.array([[1.0 / alpha, -beta * alpha], [0.0, alpha]])


def transition_params(L1: LatticeGenerator, L2: LatticeGenerator) -> tuple:
    """``(alpha, beta)`` with ``transition_matrix(alpha, beta) @ L1 = L2``."""
    if not _rel_close(L1.density, L2.density):
        raise DensityMismatch(f"densities differ: {L1.density} vs {L2.density}")
    alpha = L2.z / L1.z
    beta = -L2.y / L2.z + (L1.y / L1.z) * (L1.z ** 2 / L2.z ** 2)
    return float(alpha), float(beta)


def decompose_symplectic(L: LatticeGenerator, L_R: LatticeGenerator) -> tuple:
    """``(alpha, beta)`` with ``J C_beta D_alpha J^-1 L_R = L``; ``L_R`` is rectangular."""
    if L_R.y != 0:
        raise ValueError("reference lattice must be rectangular")
    if not _rel_close(L.density, L_R.density):
        raise DensityMismatch(f"densities differ: {L.density} vs {L_R.density}")
    return float(L.z / L_R.z), float(-L.y / L.z)


def recompose_symplectic(alpha: float, beta: float, L_R: LatticeGenerator) -> np.ndarray:
    return J @ chirp_matrix(beta) @ dilation_matrix(alpha) @ np.linalg.inv(J) @ L_R.matrix


# -- reduction ----------------------------------------------------------------

def rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def rotate(L, theta: float) -> np.ndarray:
    """Rotate the lattice by ``theta`` radians; the result is a general matrix."""
    M = L.matrix if isinstance(L, LatticeGenerator) else np.asarray(L, float)
    return rotation(theta) @ M


def _egcd(a: int, b: int):
    if b == 0:
        return a, 1, 0
    g, s, t = _egcd(b, a % b)
    return g, t, s - (a // b) * t


def _integer_kernel(p: float, q: float, max_den: int, tol: float):
    """Coprime integers ``(m, n)`` with ``p m + q n = 0``."""
    if abs(p) <= tol * max(1.0, abs(q)):
        return 1, 0
    if abs(q) <= tol * max(1.0, abs(p)):
        return 0, 1
    r = Fraction(-q / p).limit_denominator(max_den)
    m, n = r.numerator, r.denominator
    if abs(p * m + q * n) > 1e-9 * (abs(p * m) + abs(q * n)):
        raise ValueError("second row has no integer relation; matrix is not an upper-triangularizable lattice basis")
    return m, n


def canonicalize(L, max_den: int = 10 ** 6, tol: float = 1e-12) -> LatticeGenerator:
    """Upper-triangular generator of the same point set with ``x > 0, z > 0, 0 <= y < x``.

    Works for any real basis matrix whose second row has a rational ratio.
    The basis is changed by an integer unimodular column transformation.
    """
    M = L.matrix if isinstance(L, LatticeGenerator) else np.asarray(L, float)
    if abs(np.linalg.det(M)) < tol:
        raise ValueError("singular basis")
    m, n = _integer_kernel(M[1, 0], M[1, 1], max_den, tol)
    g, s, t = _egcd(m, n)
    if g < 0:
        s, t = -s, -t
    # unimodular completion: m*l - n*k = 1
    k, l = -t, s
    v0 = M @ np.array([m, n], float)
    v1 = M @ np.array([k, l], float)
    v0[1] = 0.0
    if v0[0] < 0:
        v0 = -v0
    if v1[1] < 0:
        v1 = -v1
    q = np.floor(v1[0] / v0[0])
    v1 = v1 - q * v0
    y = v1[0]
    # guard against y landing a rounding error below x
    if y >= v0[0] * (1 - 1e-14):
        y -= v0[0]
    if abs(y) < tol * v0[0]:
        y = 0.0
    return LatticeGenerator(float(v0[0]), float(y), float(v1[1]))


# -- geometry -----------------------------------------------------------------

def enumerate_points(L: LatticeGenerator, window: float = None) -> np.ndarray:
    """All lattice points with max-norm at most ``window`` (default ``8 max(|x|, |z|)``)."""
    if window is None:
        window = 8 * max(abs(L.x), abs(L.z))
    jmax = int(np.floor(window / abs(L.z)))
    pts = []
    for j in range(-jmax, jmax + 1):
        off = j * L.y
        lo = int(np.ceil((-window - off) / abs(L.x)))
        hi = int(np.floor((window - off) / abs(L.x)))
        i = np.arange(lo, hi + 1)
        t = np.sign(L.x) * i * abs(L.x) + off
        pts.append(np.column_stack([t, np.full(i.size, j * L.z)]))
    P = np.vstack(pts)
    return P[np.max(np.abs(P), axis=1) <= window * (1 + 1e-12)]


def min_distance(L: LatticeGenerator, window: float = None) -> float:
    P = enumerate_points(L, window)
    r = np.hypot(P[:, 0], P[:, 1])
    return float(r[r > 1e-12 * max(abs(L.x), abs(L.z))].min())


# -- lattices on Z_N ----------------------------------------------------------

@dataclass(frozen=True)
class IntegerLattice:
    """Lattice ``{(k a + l c mod N, l b)}`` in ``Z_N x Z_N``.

    Points are ordered with ``k`` outer: index ``k * (N // b) + l``.
    """

    N: int
    a: int
    b: int
    c: int = 0

    def __post_init__(self):
        N, a, b, c = self.N, self.a, self.b, self.c
        if N < 1 or a < 1 or b < 1:
            raise ValueError("N, a, b must be positive")
        if N % a or N % b:
            raise ValueError(f"a={a} and b={b} must divide N={N}")
        if not 0 <= c < a:
            raise ValueError("offset c must satisfy 0 <= c < a")
        if ((N // b) * c) % a:
            raise ValueError("offset c does not close the lattice on Z_N")

    @property
    def n_time(self) -> int:
        return self.N // self.a

    @property
    def n_freq(self) -> int:
        return self.N // self.b

    @property
    def size(self) -> int:
        return self.n_time * self.n_freq

    @property
    def density(self) -> float:
        """Points per sample, ``|Lambda| / N``."""
        return self.size / self.N

    @cached_property
    def points(self) -> np.ndarray:
        k, l = np.meshgrid(np.arange(self.n_time), np.arange(self.n_freq), indexing="ij")
        x = (k * self.a + l * self.c) % self.N
        w = l * self.b
        return np.column_stack([x.ravel(), w.ravel()]).astype(int)

    @property
    def indices(self) -> np.ndarray:
        """``(k, l)`` pairs in point order."""
        k, l = np.meshgrid(np.arange(self.n_time), np.arange(self.n_freq), indexing="ij")
        return np.column_stack([k.ravel(), l.ravel()])

    def adjoint(self) -> "IntegerLattice":
        """All ``(x, w)`` whose shifts commute with every shift of this lattice."""
        N = self.N
        x, w = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
        ok = ((w * self.a) % N == 0) & ((x * self.b - w * self.c) % N == 0)
        xs, ws = x[ok], w[ok]
        pos_w = ws[ws > 0]
        b0 = int(pos_w.min()) if pos_w.size else N
        pos_x = xs[(ws == 0) & (xs > 0)]
        a0 = int(pos_x.min()) if pos_x.size else N
        c0 = int(xs[ws == b0].min()) % a0 if b0 < N else 0
        adj = IntegerLattice(N, a0, b0, c0)
        if adj.size != ok.sum():
            raise RuntimeError("adjoint enumeration is inconsistent")
        return adj

    def generator(self, dt: float) -> LatticeGenerator:
        """Real generator obtained with sample spacing ``dt`` and bin width ``1/(N dt)``."""
        return LatticeGenerator(self.a * dt, self.c * dt, self.b / (self.N * dt))

    def to_dict(self) -> dict:
        return {"N": self.N, "a": self.a, "b": self.b, "c": self.c}


def _divisors(N: int):
    return [d for d in range(1, N + 1) if N % d == 0]


def realize(L: LatticeGenerator, N: int, tol: float = 1e-9) -> tuple:
    """Exact integer realization ``(IntegerLattice, dt)`` of a real lattice.

    With sample spacing ``dt`` the returned lattice reproduces the canonical
    form of ``L`` exactly.  Among valid choices the one with ``a`` closest to
    ``b`` is returned.  Raises ``ValueError`` if none exists.
    """
    C = canonicalize(L)
    ab = N * C.x * C.z
    if abs(ab - round(ab)) > tol * ab:
        raise ValueError(f"N * det = {ab} is not an integer; density incompatible with N")
    ab = int(round(ab))
    ratio = C.y / C.x
    best = None
    for a in _divisors(N):
        if ab % a:
            continue
        b = ab // a
        if N % b:
            continue
        c = a * ratio
        if abs(c - round(c)) > tol * max(1, a):
            continue
        c = int(round(c)) % a
        if ((N // b) * c) % a:
            continue
        score = abs(np.log(a / b))
        if best is None or score < best[0]:
            best = (score, IntegerLattice(N, a, b, c))
    if best is None:
        raise ValueError(f"no integer realization of {C} on Z_{N}")
    lat = best[1]
    return lat, C.x / lat.a
