"""Completely monotone pair potentials ``f(x) = int exp(-t |x|^2) dmu(t)``.

Each potential knows its Laplace measure ``mu`` and the Ewald split at a
parameter ``alpha``::

    short(alpha, r) = int_{alpha^2}^inf exp(-t r^2) dmu(t)
    long(alpha, w)  = pi^(d/2) int_0^{alpha^2} t^(-d/2) exp(-pi^2 w^2 / t) dmu(t)
    mass(alpha)     = mu([0, alpha^2])

All radial methods take ``r = |x|`` (scalar or array).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate
from scipy import special as sp

from .special_functions import upper_incomplete_gamma

__all__ = [
    "Potential",
    "Riesz",
    "Gaussian",
    "CustomDensity",
    "PotentialError",
    "from_config",
    "evaluate",
    "split_short",
    "split_long",
    "measure_mass",
    "riesz_measure_density",
]

QUAD_OPTS = dict(epsabs=1e-14, epsrel=1e-12, limit=500)


class PotentialError(ValueError):
    pass


def _radial(r):
    r = np.asarray(r, dtype=float)
    return r


def _out(x, like):
    return float(x) if np.ndim(like) == 0 else x


class Potential:
    """Base class; subclasses provide the Laplace measure."""

    kind = "abstract"

    def value(self, r):
        raise NotImplementedError

    def short(self, alpha, r):
        raise NotImplementedError

    def long(self, alpha, w, d):
        raise NotImplementedError

    def mass(self, alpha):
        raise NotImplementedError

    def integrate(self, g: Callable[[float], float], lo: float, hi: float):
        """``(int_[lo, hi) g dmu, abs error estimate)``."""
        raise NotImplementedError

    def summable(self, d: int) -> bool:
        raise NotImplementedError

    def to_config(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Riesz(Potential):
    """``|x|^-s`` with ``dmu = t^(s/2 - 1) / Gamma(s/2) dt``."""

    s: float
    kind = "riesz"

    def __post_init__(self):
        if not (self.s > 0 and math.isfinite(self.s)):
            raise PotentialError(f"Riesz exponent must be positive, got {self.s}")

    def density(self, t):
        return riesz_measure_density(self.s, t)

    def value(self, r):
        r = _radial(r)
        return _out(r ** (-self.s), r)

    def short(self, alpha, r):
        r = _radial(r)
        return _out(sp.gammaincc(self.s / 2, alpha * alpha * r * r) * r ** (-self.s), r)

    def long(self, alpha, w, d):
        w = _radial(w)
        s = self.s
        out = np.empty(np.shape(w))
        zero = w == 0
        if np.any(zero):
            if s <= d:
                raise PotentialError(
                    f"long-range part at w=0 diverges for s={s} <= d={d}; exclude the zero mode")
            out[zero] = math.pi ** (d / 2) * alpha ** (s - d) * 2 / ((s - d) * math.gamma(s / 2))
        wn = w[~zero]
        if wn.size:
            x = (math.pi * wn / alpha) ** 2
            out[~zero] = (math.pi ** (s - d / 2) * wn ** (s - d)
                          * upper_incomplete_gamma((d - s) / 2, x) / math.gamma(s / 2))
        return _out(out, w)

    def mass(self, alpha):
        return alpha ** self.s * 2 / (self.s * math.gamma(self.s / 2))

    def integrate(self, g, lo, hi):
        s = self.s
        norm = math.gamma(s / 2)
        if lo == 0 and math.isinf(hi):
            v1, e1 = self.integrate(g, 0.0, 1.0)
            v2, e2 = self.integrate(g, 1.0, hi)
            return v1 + v2, e1 + e2
        if lo == 0:
            v, e = integrate.quad(g, 0.0, hi, weight="alg", wvar=(s / 2 - 1, 0.0), **QUAD_OPTS)
            return v / norm, e / norm
        v, e = integrate.quad(lambda t: g(t) * t ** (s / 2 - 1), lo, hi, **QUAD_OPTS)
        return v / norm, e / norm

    def summable(self, d):
        return self.s > d

    def to_config(self):
        return {"kind": "riesz", "s": self.s}


@dataclass(frozen=True)
class Gaussian(Potential):
    """``weight * exp(-t0 |x|^2)``: a point mass ``weight`` at ``t = t0``.

    The atom belongs to the short-range part when ``t0 >= alpha^2`` and to the
    long-range part (and the mass) otherwise.
    """

    t0: float
    weight: float = 1.0
    kind = "gaussian"

    def __post_init__(self):
        if not (self.t0 > 0 and math.isfinite(self.t0)):
            raise PotentialError(f"t0 must be positive, got {self.t0}")
        if not (self.weight > 0 and math.isfinite(self.weight)):
            raise PotentialError(f"weight must be positive, got {self.weight}")

    def _is_short(self, alpha):
        return self.t0 >= alpha * alpha

    def value(self, r):
        r = _radial(r)
        return _out(self.weight * np.exp(-self.t0 * r * r), r)

    def short(self, alpha, r):
        r = _radial(r)
        if self._is_short(alpha):
            return self.value(r)
        return _out(np.zeros(np.shape(r)), r)

    def long(self, alpha, w, d):
        w = _radial(w)
        if self._is_short(alpha):
            return _out(np.zeros(np.shape(w)), w)
        return _out(self.weight * (math.pi / self.t0) ** (d / 2)
                    * np.exp(-math.pi ** 2 * w * w / self.t0), w)

    def mass(self, alpha):
        return 0.0 if self._is_short(alpha) else self.weight

    def integrate(self, g, lo, hi):
        if lo <= self.t0 < hi:
            return self.weight * g(self.t0), 0.0
        return 0.0, 0.0

    def summable(self, d):
        return True

    def to_config(self):
        return {"kind": "gaussian", "t0": self.t0, "weight": self.weight}


@dataclass(frozen=True, eq=False)
class CustomDensity(Potential):
    """Potential given by a user density ``rho`` with ``dmu = rho(t) dt``.

    Every quantity is a quadrature of the Laplace integral. Summability over a
    lattice cannot be read off a black-box density, so the caller declares it.
    """

    density: Callable[[float], float]
    is_summable: bool = False
    name: str = "custom"
    check_nodes: np.ndarray = field(default_factory=lambda: np.logspace(-6, 6, 121), repr=False)
    kind = "custom"

    def __post_init__(self):
        vals = np.array([self.density(float(t)) for t in self.check_nodes])
        if np.any(~np.isfinite(vals)) or np.any(vals < 0):
            raise PotentialError("density must be finite and nonnegative on (0, inf)")

    def _quad(self, g, lo, hi):
        v, e = integrate.quad(lambda t: g(t) * self.density(t), lo, hi, **QUAD_OPTS)
        return v, e

    def integrate(self, g, lo, hi):
        if lo == 0 and math.isinf(hi):
            v1, e1 = self._quad(g, 0.0, 1.0)
            v2, e2 = self._quad(g, 1.0, hi)
            return v1 + v2, e1 + e2
        return self._quad(g, lo, hi)

    def _radial_map(self, fn, r):
        r = _radial(r)
        out = np.vectorize(fn, otypes=[float])(r)
        return _out(out, r)

    def value(self, r):
        return self._radial_map(lambda x: self.integrate(lambda t: math.exp(-t * x * x), 0.0, math.inf)[0], r)

    def short(self, alpha, r):
        return self._radial_map(
            lambda x: self.integrate(lambda t: math.exp(-t * x * x), alpha * alpha, math.inf)[0], r)

    def long(self, alpha, w, d):
        def one(x):
            return math.pi ** (d / 2) * self.integrate(
                lambda t: t ** (-d / 2) * math.exp(-math.pi ** 2 * x * x / t), 0.0, alpha * alpha)[0]
        return self._radial_map(one, w)

    def mass(self, alpha):
        return self.integrate(lambda t: 1.0, 0.0, alpha * alpha)[0]

    def summable(self, d):
        return bool(self.is_summable)

    def to_config(self):
        return {"kind": "custom", "name": self.name, "summable": self.is_summable}


def from_config(cfg: dict) -> Potential:
    """Build a potential from ``{"kind": "riesz", "s": 1.0}`` style dicts."""
    kind = str(cfg.get("kind", "")).lower()
    if kind == "riesz":
        return Riesz(float(cfg["s"]))
    if kind == "gaussian":
        return Gaussian(float(cfg["t0"]), float(cfg.get("weight", 1.0)))
    if kind in ("lennard-jones", "lennard_jones", "lj"):
        raise PotentialError("Lennard-Jones potentials are not completely monotone and are not supported")
    raise PotentialError(f"unknown potential kind {cfg.get('kind')!r}")


def _norm(x):
    r = float(np.linalg.norm(np.atleast_1d(np.asarray(x, dtype=float))))
    if r == 0:
        raise PotentialError("potential is not defined at x = 0")
    return r


def evaluate(potential: Potential, x) -> float:
    return float(potential.value(_norm(x)))


def split_short(potential: Potential, alpha: float, x) -> float:
    if not alpha > 0:
        raise PotentialError("alpha must be positive")
    return float(potential.short(alpha, _norm(x)))


def split_long(potential: Potential, alpha: float, w) -> float:
    if not alpha > 0:
        raise PotentialError("alpha must be positive")
    w = np.atleast_1d(np.asarray(w, dtype=float))
    return float(potential.long(alpha, float(np.linalg.norm(w)), w.size))


def measure_mass(potential: Potential, alpha: float) -> float:
    return float(potential.mass(alpha))


def riesz_measure_density(s: float, t):
    if not s > 0:
        raise PotentialError("s must be positive")
    t = np.asarray(t, dtype=float)
    return _out(t ** (s / 2 - 1) / math.gamma(s / 2), t)
