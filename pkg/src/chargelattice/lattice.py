"""Bravais lattices, their duals, and lattice-point enumeration.

A lattice is stored through its generator matrix ``A`` whose *columns* are the
basis vectors ``u_1, ..., u_d``; lattice points are ``A @ n`` for integer
``n``. The dual lattice is generated by ``inv(A).T`` so that
``u_i . u_j* = delta_ij``. With this convention the inner product of a lattice
point ``A n`` with a dual point ``inv(A).T k`` is simply ``n . k``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

__all__ = [
    "BravaisLattice",
    "LatticeError",
    "TruncationError",
    "MAX_POINTS",
    "orthorhombic",
    "cubic",
    "triangular",
    "from_generator",
    "dual",
    "normalize_density",
    "points_in_ball",
    "ball_coordinates",
    "sublattice_points",
    "quadratic_form",
    "distance_to_dual",
    "gaussian_tail_bound",
    "radius_for_tail",
]

MAX_DIM = 4
# cap on the size of the integer coordinate box scanned by ball enumeration
MAX_POINTS = 6_000_000


class LatticeError(ValueError):
    """Invalid lattice description."""


class TruncationError(RuntimeError):
    """A truncated lattice sum would need more points than allowed."""


@dataclass(frozen=True, eq=False)
class BravaisLattice:
    """Bravais lattice ``X = A Z^d`` with cached dual and cell geometry.

    Parameters
    ----------
    generator : array_like, shape (d, d)
        Columns are the basis vectors ``u_i``.
    """

    generator: np.ndarray
    dual_generator: np.ndarray = field(init=False, repr=False)
    inverse: np.ndarray = field(init=False, repr=False)
    covolume: float = field(init=False)
    half_diagonal: float = field(init=False, repr=False)

    def __post_init__(self):
        a = np.array(self.generator, dtype=float)
        if a.ndim == 0:
            a = a.reshape(1, 1)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise LatticeError(f"generator must be a square matrix, got shape {a.shape}")
        d = a.shape[0]
        if not 1 <= d <= MAX_DIM:
            raise LatticeError(f"dimension must be between 1 and {MAX_DIM}, got {d}")
        if not np.all(np.isfinite(a)):
            raise LatticeError("generator has non-finite entries")
        det = np.linalg.det(a)
        scale = np.prod(np.linalg.norm(a, axis=0))
        if scale == 0 or abs(det) <= 1e-12 * scale:
            raise LatticeError("generator matrix is (nearly) singular")
        inv = np.linalg.inv(a)
        a.setflags(write=False)
        inv.setflags(write=False)
        dual_gen = inv.T.copy()
        dual_gen.setflags(write=False)
        corners = np.array(list(itertools.product((-0.5, 0.5), repeat=d)))
        half_diag = float(np.max(np.linalg.norm(corners @ a.T, axis=1)))
        object.__setattr__(self, "generator", a)
        object.__setattr__(self, "inverse", inv)
        object.__setattr__(self, "dual_generator", dual_gen)
        object.__setattr__(self, "covolume", float(abs(det)))
        object.__setattr__(self, "half_diagonal", half_diag)

    @property
    def dim(self) -> int:
        return self.generator.shape[0]

    @property
    def basis(self) -> np.ndarray:
        """Basis vectors as rows, ``basis[i] = u_i``."""
        return self.generator.T

    @property
    def dual_basis(self) -> np.ndarray:
        return self.dual_generator.T

    @property
    def gram(self) -> np.ndarray:
        return self.generator.T @ self.generator

    def point(self, n) -> np.ndarray:
        """Cartesian position of the lattice point with integer coordinates ``n``."""
        return self.generator @ np.asarray(n, dtype=float)

    def dual_point(self, k) -> np.ndarray:
        return self.dual_generator @ np.asarray(k, dtype=float)

    def fractional(self, x) -> np.ndarray:
        """Coordinates of ``x`` in the basis ``u_i`` (rows for 2-D input)."""
        return np.asarray(x, dtype=float) @ self.inverse.T

    def scaled(self, factor: float) -> "BravaisLattice":
        return BravaisLattice(self.generator * factor)

    def shortest_vector_length(self) -> float:
        r = 1.0 + max(np.linalg.norm(self.generator, axis=0))
        pts = points_in_ball(self, r)
        return float(np.min(np.linalg.norm(pts, axis=1)))

    def __repr__(self):
        rows = np.array2string(self.generator, precision=6, separator=", ")
        return f"BravaisLattice(d={self.dim}, generator={rows})"


def from_generator(matrix) -> BravaisLattice:
    return BravaisLattice(np.asarray(matrix, dtype=float))


def orthorhombic(*a: float) -> BravaisLattice:
    """Lattice ``a_1 Z e_1 + ... + a_d Z e_d``."""
    if len(a) == 1 and np.ndim(a[0]) == 1:
        a = tuple(a[0])
    if len(a) == 0:
        raise LatticeError("orthorhombic lattice needs at least one side length")
    if any(not (ai > 0 and math.isfinite(ai)) for ai in a):
        raise LatticeError(f"side lengths must be positive, got {a}")
    return BravaisLattice(np.diag(np.asarray(a, dtype=float)))


def cubic(d: int = 3) -> BravaisLattice:
    return orthorhombic(*([1.0] * d))


def triangular(basis: str = "acute") -> BravaisLattice:
    """Triangular lattice of unit density.

    ``basis="acute"`` uses ``u_2`` at 60 degrees from ``u_1``; ``"obtuse"``
    uses ``u_2 - u_1`` (120 degrees). Both generate the same point set, but
    fractional coordinates differ: the theta minimizers of the dual sit at
    ``(1/3, 2/3), (2/3, 1/3)`` in the acute basis and at ``(1/3, 1/3),
    (2/3, 2/3)`` in the obtuse one.
    """
    c = math.sqrt(2.0 / math.sqrt(3.0))
    u1 = c * np.array([1.0, 0.0])
    if basis == "acute":
        u2 = c * np.array([0.5, math.sqrt(3.0) / 2.0])
    elif basis == "obtuse":
        u2 = c * np.array([-0.5, math.sqrt(3.0) / 2.0])
    else:
        raise LatticeError(f"unknown triangular basis {basis!r}")
    return BravaisLattice(np.column_stack([u1, u2]))


def dual(lattice: BravaisLattice) -> BravaisLattice:
    return BravaisLattice(lattice.dual_generator)


def normalize_density(lattice: BravaisLattice) -> BravaisLattice:
    """Rescale to unit covolume."""
    lam = lattice.covolume ** (-1.0 / lattice.dim)
    return BravaisLattice(lattice.generator * lam)


def ball_coordinates(lattice: BravaisLattice, radius: float, shift=None,
                     max_points: int = MAX_POINTS):
    """Integer coordinates ``n`` with ``|A n + shift| <= radius``.

    Returns ``(coords, vectors)`` where ``vectors = A n + shift``, both in
    lexicographic order of ``n``.
    """
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    d = lattice.dim
    shift = np.zeros(d) if shift is None else np.asarray(shift, dtype=float).reshape(d)
    center = -lattice.inverse @ shift
    half = radius * np.linalg.norm(lattice.inverse, axis=1)
    lo = np.ceil(center - half - 1e-12).astype(np.int64)
    hi = np.floor(center + half + 1e-12).astype(np.int64)
    sizes = hi - lo + 1
    total = int(np.prod(np.maximum(sizes, 0)))
    if total > max_points:
        raise TruncationError(
            f"ball of radius {radius:.4g} needs a coordinate box of {total} points "
            f"(cap {max_points})")
    if total == 0:
        return np.zeros((0, d), dtype=np.int64), np.zeros((0, d))
    axes = [np.arange(l, h + 1) for l, h in zip(lo, hi)]
    coords = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    vecs = coords @ lattice.generator.T + shift
    keep = np.einsum("ij,ij->i", vecs, vecs) <= radius * radius * (1 + 1e-14)
    return coords[keep], vecs[keep]


def points_in_ball(lattice: BravaisLattice, radius: float, include_origin: bool = False,
                   max_points: int = MAX_POINTS) -> np.ndarray:
    """All lattice vectors with ``|x| <= radius``, lexicographic in coordinates."""
    coords, vecs = ball_coordinates(lattice, radius, max_points=max_points)
    if not include_origin:
        vecs = vecs[np.any(coords != 0, axis=1)]
    return vecs


def sublattice_points(lattice: BravaisLattice, N: int):
    """The ``N^d`` points of the periodicity cell ``K_N``.

    Returns ``(coords, vectors)`` with ``coords`` in ``{0..N-1}^d``, lexicographic.
    """
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N}")
    coords = np.array(list(itertools.product(range(int(N)), repeat=lattice.dim)), dtype=np.int64)
    return coords, coords @ lattice.generator.T


def distance_to_dual(lattice: BravaisLattice, z) -> float:
    """Distance from the Cartesian vector ``z`` to the dual lattice.

    Only the ``3^d`` dual points around the rounded dual coordinates are
    checked, which is exact for reasonably reduced bases.
    """
    k = lattice.generator.T @ np.asarray(z, dtype=float)
    base = np.round(k)
    offsets = np.array(list(itertools.product((-1, 0, 1), repeat=lattice.dim)))
    diffs = (k - base - offsets) @ lattice.dual_generator.T
    return float(np.min(np.linalg.norm(diffs, axis=1)))


def quadratic_form(lattice: BravaisLattice, n) -> float:
    x = lattice.generator @ np.asarray(n, dtype=float)
    return float(x @ x)


def gaussian_tail_bound(lattice: BravaisLattice, a: float, radius: float) -> float:
    """Upper bound on ``sum exp(-a |y|^2)`` over ``y`` in any translate ``X + z``
    with ``|y| > radius``.

    Counting cells gives ``#{|y| <= r} <= V_d (r + D)^d / covol`` with ``D`` the
    half-diagonal of the centred unit cell; Abel summation against the
    decreasing Gaussian turns this into a sum of incomplete gamma functions.
    """
    d = lattice.dim
    D = lattice.half_diagonal
    x = a * radius * radius
    ball = math.pi ** (d / 2) / math.gamma(d / 2 + 1)
    total = 0.0
    for j in range(d + 1):
        b = j / 2 + 1
        total += math.comb(d, j) * D ** (d - j) * a ** (-j / 2) * special.gammaincc(b, x) * math.gamma(b)
    return ball / lattice.covolume * total


def radius_for_tail(bound, tol: float, start: float, growth: float = 1.08,
                    max_radius: float = 1e4) -> float:
    """Smallest radius on a geometric ladder from ``start`` with ``bound(R) <= tol``."""
    r = max(start, 1e-3)
    while bound(r) > tol:
        r *= growth
        if r > max_radius:
            raise TruncationError(f"no truncation radius below {max_radius} reaches tol={tol:g}")
    return r
