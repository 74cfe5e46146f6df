"""N-periodic charge configurations and their discrete Fourier analysis.

A configuration stores one charge per point of the periodicity cell
``K_N = {sum m_i u_i : 0 <= m_i < N}`` as an array of shape ``(N,) * d``
indexed by the integer coordinates ``m``. Dual modes ``k`` are indexed the
same way; since ``x . p = m . k`` for ``x = A m`` and ``p = inv(A).T k``, no
lattice geometry enters the transforms.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .lattice import BravaisLattice, triangular

__all__ = [
    "ChargeConfiguration",
    "Autocorrelation",
    "SpectralDensity",
    "ChargeError",
    "dft",
    "idft",
    "autocorrelation",
    "spectral_density",
    "reconstruct_from_spectrum",
    "alternating",
    "honeycomb_triangular",
    "cosine_config",
    "canonicalize",
    "random_configuration",
    "mode_indices",
    "dense_transform",
]

MAX_CELL = 4096


class ChargeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ChargeConfiguration:
    lattice: BravaisLattice
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        d = self.lattice.dim
        if v.ndim != d or len(set(v.shape)) != 1:
            raise ChargeError(f"values must have shape (N,)*{d}, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ChargeError("charges must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def N(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.lattice.dim

    @property
    def size(self) -> int:
        return self.values.size

    @property
    def total_charge(self) -> float:
        return float(np.sum(self.values))

    @property
    def mean_square(self) -> float:
        return float(np.sum(self.values ** 2) / self.size)

    def is_normalized(self, tol: float = 1e-10) -> bool:
        return abs(self.mean_square - 1.0) <= tol

    def is_neutral(self, tol: float = 1e-10) -> bool:
        return abs(self.total_charge) <= tol

    def normalized(self) -> "ChargeConfiguration":
        ms = self.mean_square
        if ms == 0:
            raise ChargeError("cannot normalise the zero configuration")
        return ChargeConfiguration(self.lattice, self.values / math.sqrt(ms))

    def translated(self, shift) -> "ChargeConfiguration":
        """Configuration ``x -> phi(x + shift)`` for an integer shift."""
        shift = tuple(-int(s) for s in np.atleast_1d(shift))
        return ChargeConfiguration(self.lattice, np.roll(self.values, shift, axis=tuple(range(self.dim))))

    def __neg__(self):
        return ChargeConfiguration(self.lattice, -self.values)

    def to_dict(self) -> dict:
        return {"N": self.N, "d": self.dim, "values": [float(v) for v in self.values.ravel()]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, obj: dict, lattice: BravaisLattice) -> "ChargeConfiguration":
        N = int(obj["N"])
        d = int(obj.get("d", lattice.dim))
        if d != lattice.dim:
            raise ChargeError(f"configuration dimension {d} does not match lattice dimension {lattice.dim}")
        vals = np.asarray(obj["values"], dtype=float)
        if vals.size != N ** d:
            raise ChargeError(f"expected {N ** d} values for N={N}, d={d}, got {vals.size}")
        return cls(lattice, vals.reshape((N,) * d))

    @classmethod
    def from_json(cls, text: str, lattice: BravaisLattice) -> "ChargeConfiguration":
        return cls.from_dict(json.loads(text), lattice)

    def to_csv(self) -> str:
        d = self.dim
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"m{i + 1}" for i in range(d)] + [f"x{i + 1}" for i in range(d)] + ["charge"])
        for m in mode_indices(self.N, d):
            x = self.lattice.point(m)
            w.writerow([int(v) for v in m] + [repr(float(v)) for v in x] + [repr(float(self.values[tuple(m)]))])
        return buf.getvalue()


@dataclass(frozen=True, eq=False)
class Autocorrelation:
    values: np.ndarray


@dataclass(frozen=True, eq=False)
class SpectralDensity:
    values: np.ndarray
    lattice: BravaisLattice | None = None

    @property
    def N(self) -> int:
        return self.values.shape[0]


def mode_indices(N: int, d: int) -> np.ndarray:
    """All of ``{0..N-1}^d`` in lexicographic order."""
    return np.stack(np.meshgrid(*[np.arange(N)] * d, indexing="ij"), axis=-1).reshape(-1, d)


def _values(phi) -> np.ndarray:
    if isinstance(phi, ChargeConfiguration):
        return phi.values
    if isinstance(phi, (Autocorrelation, SpectralDensity)):
        return phi.values
    return np.asarray(phi)


def dft(phi) -> np.ndarray:
    """Unitary transform ``phi_hat(k) = N^(-d/2) sum_y phi_y exp(-2 pi i y.k / N)``."""
    return np.fft.fftn(_values(phi), norm="ortho")


def idft(psi) -> np.ndarray:
    """Inverse of :func:`dft`."""
    return np.fft.ifftn(_values(psi), norm="ortho")


def dense_transform(values: np.ndarray, sign: int) -> np.ndarray:
    """``sum_y values_y exp(sign 2 pi i y.k / N)``, one axis at a time."""
    out = np.asarray(values, dtype=complex)
    N = out.shape[0]
    j = np.arange(N)
    W = np.exp(sign * 2j * math.pi * np.outer(j, j) / N)
    for axis in range(out.ndim):
        out = np.moveaxis(np.tensordot(W, out, axes=(1, axis)), 0, axis)
    return out


def autocorrelation(phi) -> Autocorrelation:
    """``s_x = sum_{y in K_N} phi_y phi_{y+x}``."""
    v = np.asarray(_values(phi), dtype=float)
    axes = tuple(range(v.ndim))
    s = np.empty_like(v)
    for m in mode_indices(v.shape[0], v.ndim):
        s[tuple(m)] = np.sum(v * np.roll(v, tuple(-m), axis=axes))
    return Autocorrelation(s)


def spectral_density(phi) -> SpectralDensity:
    """``xi_k = N^-d sum_y s_y exp(2 pi i y.k / N)`` from the autocorrelation."""
    v = np.asarray(_values(phi), dtype=float)
    s = autocorrelation(v).values
    xi = dense_transform(s, +1) / v.size
    scale = max(1.0, float(np.max(np.abs(xi))))
    if np.max(np.abs(xi.imag)) > 1e-10 * scale:
        raise ChargeError("spectral density has a non-negligible imaginary part")
    xi = xi.real
    xi = _clamp(xi, scale)
    lattice = phi.lattice if isinstance(phi, ChargeConfiguration) else None
    return SpectralDensity(xi, lattice)


def _clamp(xi: np.ndarray, scale: float) -> np.ndarray:
    if np.min(xi) < -1e-12 * scale:
        raise ChargeError(f"spectral density has a negative entry {np.min(xi):.3g}")
    return np.where(xi < 0, 0.0, xi)


def _reflect(a: np.ndarray) -> np.ndarray:
    """``a[-k mod N]``."""
    out = a
    for axis in range(a.ndim):
        out = np.roll(np.flip(out, axis=axis), 1, axis=axis)
    return out


def reconstruct_from_spectrum(xi, lattice: BravaisLattice | None = None) -> ChargeConfiguration:
    """Cosine synthesis ``phi_x = N^(-d/2) sum_k sqrt(xi_k) cos(2 pi x.k / N)``."""
    if lattice is None and isinstance(xi, SpectralDensity):
        lattice = xi.lattice
    if lattice is None:
        raise ChargeError("a lattice is needed to build a configuration")
    v = np.asarray(_values(xi), dtype=float)
    if v.ndim != lattice.dim:
        raise ChargeError("spectral density dimension does not match the lattice")
    n = v.size
    scale = max(1.0, float(np.max(np.abs(v))))
    v = _clamp(v, scale)
    if np.max(np.abs(v - _reflect(v))) > 1e-10 * scale:
        raise ChargeError("spectral density is not symmetric under k -> -k")
    if abs(np.sum(v) - n) > 1e-9 * n:
        raise ChargeError(f"spectral density must sum to N^d = {n}, got {np.sum(v):.12g}")
    phi = dense_transform(np.sqrt(v), +1).real / math.sqrt(n)
    return ChargeConfiguration(lattice, phi)


def alternating(lattice: BravaisLattice) -> ChargeConfiguration:
    """Rock-salt pattern ``(-1)^(m_1 + ... + m_d)`` with period 2."""
    m = mode_indices(2, lattice.dim)
    vals = (-1.0) ** m.sum(axis=1)
    return ChargeConfiguration(lattice, vals.reshape((2,) * lattice.dim))


def honeycomb_triangular(lattice: BravaisLattice | None = None) -> ChargeConfiguration:
    """``sqrt(2) cos(2 pi (m + n) / 3)`` on the triangular lattice, period 3.

    The default lattice uses the obtuse basis, in which this pattern puts
    opposite-sign charges on all six neighbours of every large charge.
    """
    lattice = triangular("obtuse") if lattice is None else lattice
    m = mode_indices(3, 2)
    vals = math.sqrt(2.0) * np.cos(2 * math.pi * m.sum(axis=1) / 3)
    return ChargeConfiguration(lattice, vals.reshape(3, 3))


def cosine_config(lattice: BravaisLattice, N: int, z0, require_neutral: bool = True) -> ChargeConfiguration:
    """``c cos(2 pi x . z0)`` on ``K_N`` for a dual vector ``z0`` in ``X*/N``.

    ``c`` is fixed by the mean-square normalisation.
    """
    lam = lattice.generator.T @ np.asarray(z0, dtype=float)
    k = lam * N
    if np.max(np.abs(k - np.round(k))) > 1e-8:
        raise ChargeError(f"z0 with dual coordinates {lam} is not representable with period {N}")
    k = np.round(k).astype(np.int64)
    m = mode_indices(N, lattice.dim)
    cos = np.cos(2 * math.pi * ((m @ k) % N) / N)
    ms = float(np.mean(cos ** 2))
    if ms < 1e-14:
        raise ChargeError("cosine pattern vanishes on K_N")
    vals = cos / math.sqrt(ms)
    if require_neutral and abs(vals.sum()) > 1e-10:
        raise ChargeError("cosine configuration is not neutral (z0 in the dual lattice)")
    return ChargeConfiguration(lattice, vals.reshape((N,) * lattice.dim))


def canonicalize(phi, allow_sign: bool = True, decimals: int = 9) -> ChargeConfiguration:
    """Representative of ``phi`` modulo lattice translations (and global sign).

    Picks the translate with the largest charge at the origin, ties broken by
    the lexicographically largest value vector (rounded to ``decimals``).
    """
    lattice = phi.lattice
    v = phi.values
    axes = tuple(range(v.ndim))
    candidates = [v, -v] if allow_sign else [v]
    best = None
    best_key = None
    for c in candidates:
        for m in mode_indices(phi.N, phi.dim):
            t = np.roll(c, tuple(-m), axis=axes)
            key = tuple(np.round(t.ravel(), decimals))
            if best_key is None or key > best_key:
                best, best_key = t, key
    return ChargeConfiguration(lattice, best)


def random_configuration(lattice: BravaisLattice, N: int, rng: np.random.Generator,
                         neutral: bool = True) -> ChargeConfiguration:
    v = rng.standard_normal((N,) * lattice.dim)
    if neutral:
        v = v - v.mean()
    return ChargeConfiguration(lattice, v).normalized()
