"""Theta functions, the Epstein zeta function and the upper incomplete gamma."""
from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy import special as sp

from .lattice import (BravaisLattice, ball_coordinates, distance_to_dual,
                      gaussian_tail_bound, radius_for_tail)

__all__ = [
    "ThetaEvaluation",
    "jacobi_theta3_series",
    "jacobi_theta3_product",
    "translated_theta",
    "theta_values",
    "jacobi_transform_residual",
    "epstein_zeta",
    "upper_incomplete_gamma",
    "DIRECT",
    "DUAL",
]

DIRECT = "direct"
DUAL = "dual"


def _check_t(t):
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")


def jacobi_theta3_series(beta: float, t: float, tol: float = 1e-15) -> float:
    """``sum_k exp(-pi k^2 t + 2 pi i k beta)``, summed symmetrically.

    Terms with ``|k| >= K`` are dropped once
    ``2 exp(-pi K^2 t) / (1 - exp(-pi (2K+1) t)) < tol``.
    """
    _check_t(t)
    K = 1
    while 2 * math.exp(-math.pi * K * K * t) / (-math.expm1(-math.pi * (2 * K + 1) * t)) >= tol:
        K += 1
    k = np.arange(-(K - 1), K)
    total = np.sum(np.exp(-math.pi * k * k * t + 2j * math.pi * k * beta))
    if abs(total.imag) > 10 * tol + 1e-13:
        raise ArithmeticError(f"imaginary residue {total.imag:.3g} in theta series")
    return float(total.real)


def jacobi_theta3_product(beta: float, t: float, tol: float = 1e-15) -> float:
    """Jacobi triple product for ``theta_3(beta; it)``.

    Factors ``r > R`` deviate from 1 by at most ``4 q^(2R+1) / (1 - q^2)`` in
    total, ``q = exp(-pi t)``; the product stops once that is below ``tol``.
    """
    _check_t(t)
    q = math.exp(-math.pi * t)
    c = math.cos(2 * math.pi * beta)
    one_minus_q2 = -math.expm1(-2 * math.pi * t)
    log_prod = 0.0
    r = 1
    while True:
        q2r1 = q ** (2 * r - 1)
        log_prod += math.log1p(-q ** (2 * r)) + math.log1p(2 * q2r1 * c + q2r1 * q2r1)
        if 4 * q ** (2 * r + 1) / one_minus_q2 < tol:
            break
        r += 1
    return math.exp(log_prod)


@dataclass(frozen=True)
class ThetaEvaluation:
    value: float
    radius: float
    tail_bound: float
    branch: str


def _dual_lattice(lattice: BravaisLattice) -> BravaisLattice:
    return BravaisLattice(lattice.dual_generator)


def theta_values(lattice: BravaisLattice, zs, alpha: float, tol: float = 1e-14,
                 branch: str | None = None, drop_constant: bool = False):
    """Vectorised ``theta_{X+z}(alpha)`` for the rows of ``zs``.

    ``branch=None`` picks the direct sum for ``alpha >= 1`` and the dual sum
    otherwise. With ``drop_constant`` the z-independent ``p = 0`` term of the
    dual sum is omitted (the landscape keeps its minimisers but loses the
    large offset that swamps small ``alpha``).

    Returns ``(values, radius, tail_bound, branch)``.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    d = lattice.dim
    zs = np.atleast_2d(np.asarray(zs, dtype=float)).reshape(-1, d)
    if branch is None:
        branch = DIRECT if alpha >= 1 else DUAL
    if branch == DIRECT:
        a = math.pi * alpha
        shift = lattice.half_diagonal
        R = radius_for_tail(lambda r: gaussian_tail_bound(lattice, a, r), tol,
                            math.sqrt(max(math.log(1 / tol), 1.0) / a) + shift)
        # every z shares the cell translate of z mod X; reduce to the cell first
        frac = zs @ lattice.inverse.T
        zc = (frac - np.floor(frac)) @ lattice.generator.T
        _, pts = ball_coordinates(lattice, R + shift * 2)
        values = np.empty(len(zs))
        for i, z in enumerate(zc):
            y = pts + z
            values[i] = np.sum(np.exp(-a * np.einsum("ij,ij->i", y, y)))
        return values, R, gaussian_tail_bound(lattice, a, R), branch
    if branch == DUAL:
        dl = _dual_lattice(lattice)
        a = math.pi / alpha
        pref = 1.0 / (lattice.covolume * alpha ** (d / 2))
        R = radius_for_tail(lambda r: pref * gaussian_tail_bound(dl, a, r), tol,
                            math.sqrt(max(math.log(1 / tol), 1.0) / a))
        coords, pts = ball_coordinates(dl, R)
        if drop_constant:
            nz = np.any(coords != 0, axis=1)
            coords, pts = coords[nz], pts[nz]
        weights = np.exp(-a * np.einsum("ij,ij->i", pts, pts))
        frac = zs @ lattice.inverse.T
        values = pref * (np.cos(2 * math.pi * (frac @ coords.T)) @ weights)
        return values, R, pref * gaussian_tail_bound(dl, a, R), branch
    raise ValueError(f"unknown branch {branch!r}")


def translated_theta(lattice: BravaisLattice, z, alpha: float, tol: float = 1e-14,
                     branch: str | None = None) -> ThetaEvaluation:
    """``theta_{X+z}(alpha) = sum_{x in X} exp(-pi alpha |x + z|^2)``."""
    values, R, tail, used = theta_values(lattice, z, alpha, tol, branch)
    return ThetaEvaluation(float(values[0]), float(R), float(tail), used)


def jacobi_transform_residual(lattice: BravaisLattice, z, alpha: float,
                              tol: float = 1e-14) -> float:
    """Difference between the direct and dual-lattice forms of the theta sum."""
    direct = translated_theta(lattice, z, alpha, tol, branch=DIRECT).value
    dual_form = translated_theta(lattice, z, alpha, tol, branch=DUAL).value
    return abs(direct - dual_form)


def _gamma_continued_fraction(a: float, x: np.ndarray) -> np.ndarray:
    """Modified Lentz evaluation of the continued fraction for ``Gamma(a, x)``, ``x >= 2``."""
    tiny = 1e-300
    b = x + 1.0 - a
    c = np.full_like(x, 1.0 / tiny)
    d = 1.0 / b
    h = d.copy()
    active = np.ones(x.shape, dtype=bool)
    for i in range(1, 5000):
        an = -i * (i - a)
        b = b + 2.0
        d = an * d + b
        d = np.where(np.abs(d) < tiny, tiny, d)
        c = b + an / c
        c = np.where(np.abs(c) < tiny, tiny, c)
        d = 1.0 / d
        delta = np.where(active, d * c, 1.0)
        h = h * delta
        active &= np.abs(delta - 1.0) > 4e-16
        if not active.any():
            break
    return np.exp(-x + a * np.log(x)) * h


def upper_incomplete_gamma(a, x):
    """Upper incomplete gamma ``Gamma(a, x)`` for real ``a`` and ``x >= 0``.

    Positive ``a`` uses scipy. For ``a <= 0`` (and subnormal ``a``) the continued fraction covers
    ``x >= 2`` and mpmath the remaining small arguments, where a downward
    recurrence would cancel. Complex ``a`` goes to mpmath.
    """
    scalar = np.ndim(x) == 0
    xs = np.asarray(x, dtype=float)
    if np.any(xs < 0) or np.any(np.isnan(xs)):
        raise ValueError("x must be nonnegative")
    if isinstance(a, complex) or np.iscomplexobj(a):
        a = complex(a)
        if a.imag == 0:
            a = a.real
        else:
            out = np.array([complex(mpmath.gammainc(a, float(v))) for v in xs.ravel()]).reshape(xs.shape)
            return complex(out) if scalar else out
    a = float(a)
    if a > 1e-200:
        out = sp.gammaincc(a, xs) * sp.gamma(a)
    else:
        if np.any(xs == 0):
            raise ValueError(f"Gamma({a}, 0) diverges")
        flat = xs.ravel()
        out = np.empty_like(flat)
        large = flat >= 2.0
        if np.any(large):
            out[large] = _gamma_continued_fraction(a, flat[large])
        out[~large] = [float(mpmath.gammainc(a, v)) for v in flat[~large]]
        out = out.reshape(xs.shape)
    return float(out) if scalar else out


def _mellin_tail(a, y):
    """``int_1^inf exp(-y t) t^(a-1) dt = y^-a Gamma(a, y)`` elementwise in ``y``."""
    if isinstance(a, complex):
        return np.array([complex(mpmath.gammainc(a, float(v)) * mpmath.power(v, -a)) for v in y])
    return y ** (-a) * upper_incomplete_gamma(a, y)


def epstein_zeta(lattice: BravaisLattice, z, s, tol: float = 1e-13) -> complex:
    """Analytically continued ``Z(z; s) = sum_{x != 0} exp(2 pi i x.z) |x|^-s``.

    ``z`` is a Cartesian vector of the dual space and must not be a dual
    lattice point; ``Re s > 0``. Both incomplete-gamma weighted sums are cut
    where their Gaussian-dominated tails drop below ``tol``.
    """
    z = np.asarray(z, dtype=float).reshape(lattice.dim)
    s = complex(s) if np.iscomplexobj(s) and complex(s).imag != 0 else float(np.real(s))
    if not np.real(s) > 0:
        raise ValueError(f"need Re s > 0, got {s}")
    if distance_to_dual(lattice, z) <= 1e-9:
        raise ValueError("z lies on (or within 1e-9 of) the dual lattice")
    d = lattice.dim
    dl = _dual_lattice(lattice)
    a1 = s / 2
    a2 = (d - s) / 2

    def bound1(r):
        y = math.pi * r * r
        h = abs(_mellin_tail(a1, np.array([y]))[0])
        return h * math.exp(y) * gaussian_tail_bound(lattice, math.pi, r)

    def bound2(r):
        y = math.pi * r * r
        h = abs(_mellin_tail(a2, np.array([y]))[0])
        return h * math.exp(y) * gaussian_tail_bound(dl, math.pi, r) / lattice.covolume

    start = 2.0 + lattice.half_diagonal
    R1 = radius_for_tail(bound1, tol, start)
    R2 = radius_for_tail(bound2, tol, 2.0 + dl.half_diagonal)

    coords, x = ball_coordinates(lattice, R1)
    nz = np.any(coords != 0, axis=1)
    x = x[nz]
    phase = np.exp(2j * math.pi * (x @ z))
    s1 = np.sum(phase * _mellin_tail(a1, math.pi * np.einsum("ij,ij->i", x, x)))
    _, y = ball_coordinates(dl, R2, shift=z)
    s2 = np.sum(_mellin_tail(a2, math.pi * np.einsum("ij,ij->i", y, y))) / lattice.covolume
    if isinstance(s, complex):
        scale = complex(mpmath.power(mpmath.pi, s / 2) / mpmath.gamma(s / 2))
    else:
        scale = math.pi ** (s / 2) / math.gamma(s / 2)
    return complex((-2 / s + s1 + s2) * scale)
