"""Optimal periodic charges from minima of translated theta functions.

The charge distribution with the lowest energy is a single cosine wave
``c cos(2 pi x . z0)`` whose wave vector ``z0`` minimizes the mode energy, and
for the lattices where the theta function ``z -> theta_{X* + z}(alpha)`` has
an alpha-independent minimizer, ``z0`` is that minimizer. This module finds
the theta minimizers numerically, builds the cosine configuration and checks
it against a dense eigen-decomposition of the periodic interaction matrix.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import linalg
from scipy.optimize import minimize_scalar

from .charges import (ChargeConfiguration, canonicalize, cosine_config, mode_indices,
                      random_configuration, spectral_density)
from .energy import DEFAULT_ALPHA, ewald_tables, interaction_matrix
from .lattice import BravaisLattice, ball_coordinates, dual, gaussian_tail_bound, radius_for_tail
from .potentials import Potential
from .special_functions import theta_values, translated_theta

__all__ = [
    "ThetaMinimum",
    "OptimalCharges",
    "BruteForceMinimum",
    "VerificationReport",
    "IncompatiblePeriodError",
    "DEFAULT_THETA_ALPHAS",
    "minimize_translated_theta",
    "theta_landscape",
    "optimal_charges",
    "brute_force_min",
    "verify_born",
    "neutrality_check",
]

DEFAULT_THETA_ALPHAS = (0.25, 0.5, 1.0, 2.0, 4.0)
MAX_DENOMINATOR = 64
BRUTE_FORCE_CAP = 512
# relative size of a landscape difference treated as a tie between minima
TIE = 1e-11


class IncompatiblePeriodError(ValueError):
    pass


@dataclass
class ThetaMinimum:
    """Minimizers of ``lambda -> theta_{X* + A^-T lambda}(alpha)`` on ``[0, 1)^d``."""

    points: np.ndarray
    alphas: list
    values: dict
    multiplicity: int
    period: int | None
    consistent: bool
    per_alpha: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "points": self.points.tolist(),
            "alphas": list(self.alphas),
            "values": {str(a): v for a, v in self.values.items()},
            "multiplicity": self.multiplicity,
            "period": self.period,
            "consistent": self.consistent,
            "per_alpha": {str(a): np.asarray(p).tolist() for a, p in self.per_alpha.items()},
        }


class _Landscape:
    """``lambda -> theta_{X* + z}(alpha)`` in dual form, minus its constant term.

    Written as ``sum_x w_x cos(2 pi n_x . lambda)`` over ``x = A n_x`` in ``X``;
    dropping ``x = 0`` keeps the minimizers and avoids cancellation at small
    ``alpha``.
    """

    def __init__(self, lattice: BravaisLattice, alpha: float, tol: float = 1e-15):
        a = math.pi / alpha
        pref = 1.0 / (dual(lattice).covolume * alpha ** (lattice.dim / 2))
        radius = radius_for_tail(lambda r: pref * gaussian_tail_bound(lattice, a, r), tol, 1.0)
        # reach the first shell along every basis direction, however small its weight
        radius += float(np.max(np.linalg.norm(lattice.generator, axis=0)))
        coords, x = ball_coordinates(lattice, radius)
        nz = np.any(coords != 0, axis=1)
        self.coords = coords[nz].astype(float)
        self.weights = pref * np.exp(-a * np.einsum("ij,ij->i", x[nz], x[nz]))

    def __call__(self, lams) -> np.ndarray:
        lams = np.atleast_2d(lams)
        return np.cos(2 * math.pi * lams @ self.coords.T) @ self.weights

    def difference(self, lams, delta):
        """``f(lams + delta) - f(lams)`` and a round-off scale for it.

        The product-of-sines form drops every term with ``n . delta = 0``
        exactly, so directions along which the landscape is nearly flat stay
        resolved.
        """
        lams = np.atleast_2d(lams)
        half = np.sin(math.pi * (self.coords @ np.asarray(delta, dtype=float)))
        active = half != 0
        if not np.any(active):
            zero = np.zeros(len(lams))
            return zero, zero
        w = self.weights[active] * half[active]
        mid = np.sin(2 * math.pi * (lams + 0.5 * np.asarray(delta)) @ self.coords[active].T)
        return -2 * mid @ w, np.full(len(lams), 2 * float(np.sum(np.abs(w))))

    def newton(self, lam: np.ndarray, steps: int = 4) -> np.ndarray:
        n = self.coords
        for _ in range(steps):
            phase = 2 * math.pi * (n @ lam)
            grad = -2 * math.pi * (self.weights * np.sin(phase)) @ n
            hess = -4 * math.pi ** 2 * (n.T * (self.weights * np.cos(phase))) @ n
            try:
                step = np.linalg.solve(hess, grad)
            except np.linalg.LinAlgError:
                break
            scale = np.sqrt(np.abs(np.diag(hess)))
            if np.any(scale == 0):
                break
            if (not np.all(np.linalg.eigvalsh(hess / np.outer(scale, scale)) > 0)
                    or np.max(np.abs(step)) > 1e-3):
                break
            lam = lam - step
        return lam


def theta_landscape(lattice: BravaisLattice, alpha: float, grid: int, tol: float = 1e-14):
    """``theta_{X* + z}(alpha)`` on a grid: ``(lambdas, values, branch, tail)``.

    ``z = sum lambda_i u_i*`` with ``lambda`` on ``{0, 1/grid, ...}^d`` in
    lexicographic order; ``branch`` and ``tail`` are shared by all rows.
    """
    if grid < 1:
        raise ValueError("grid must be positive")
    lams = mode_indices(grid, lattice.dim) / grid
    zs = lams @ lattice.dual_generator.T
    values, _, tail, branch = theta_values(dual(lattice), zs, alpha, tol)
    return lams, values, branch, tail


def _torus_distance(a: np.ndarray, b: np.ndarray) -> float:
    diff = (a - b + 0.5) % 1.0 - 0.5
    return float(np.max(np.abs(diff)))


def _refine(func, start: np.ndarray, step: float, tol: float, max_sweeps: int = 200) -> np.ndarray:
    """Coordinate-wise bounded scalar minimization until a sweep moves less than ``tol``."""
    x = start.astype(float).copy()
    for _ in range(max_sweeps):
        moved = 0.0
        for i in range(len(x)):
            def along(t, i=i):
                y = x.copy()
                y[i] = t
                return float(func(y))
            res = minimize_scalar(along, bounds=(x[i] - step, x[i] + step), method="bounded",
                                  options={"xatol": tol * 0.1})
            moved = max(moved, abs(res.x - x[i]))
            x[i] = res.x
        step = max(min(step, 4 * moved), 10 * tol)
        if moved < tol:
            break
    return x % 1.0


def _grid_minima(land: _Landscape, grid: int, d: int) -> np.ndarray:
    """Grid points no higher than any of their ``3^d - 1`` periodic neighbours.

    Neighbour differences are evaluated on the whole grid at once: the
    weights ``w_n (exp(2 pi i n.off / grid) - 1)`` are binned by ``n mod grid``
    and transformed, so terms that do not feel the offset never enter.
    """
    shape = (grid,) * d
    axes = tuple(range(d))
    bins = tuple((land.coords.astype(np.int64) % grid).T)
    is_min = np.ones(shape, dtype=bool)
    for o in np.ndindex(*([3] * d)):
        off = np.array(o) - 1
        # each unordered pair of neighbours once; the mirror comparison is a roll
        if not any(off) or tuple(off) < tuple(-off):
            continue
        b = np.zeros(shape, dtype=complex)
        np.add.at(b, bins, land.weights * np.expm1(2j * math.pi * (land.coords @ off) / grid))
        diff = np.fft.ifftn(b).real * grid ** d
        is_min &= diff >= 0
        is_min &= np.roll(diff, tuple(off), axis=axes) <= 0
    return np.argwhere(is_min)


def _period(points: np.ndarray, tol: float = 1e-6) -> int | None:
    """Smallest ``N`` with ``N lambda`` integral for every minimizer, if any."""
    denominators = []
    for v in np.ravel(points):
        f = Fraction(float(v)).limit_denominator(MAX_DENOMINATOR)
        if abs(float(f) - v) > tol:
            return None
        denominators.append(f.denominator)
    return math.lcm(*denominators) if denominators else None


def minimize_translated_theta(lattice: BravaisLattice, alphas=None, grid: int = 24,
                              refine_tol: float = 1e-10) -> ThetaMinimum:
    """Global minimizers of the translated dual theta function for each ``alpha``.

    A grid scan finds periodic local minima, which are refined coordinate-wise
    and deduplicated modulo 1. Only points that minimize at every ``alpha``
    are kept; ``consistent`` is false when the per-alpha sets differ.
    """
    if grid < 8:
        raise ValueError("grid must be at least 8 per axis")
    alphas = list(DEFAULT_THETA_ALPHAS if alphas is None else alphas)
    if any(not a > 0 for a in alphas):
        raise ValueError("alpha values must be positive")
    d = lattice.dim
    lams = mode_indices(grid, d) / grid
    per_alpha = {}
    for alpha in alphas:
        land = _Landscape(lattice, alpha)
        refined = []
        for c in _grid_minima(land, grid, d):
            x0 = c / grid
            x = _refine(lambda y: land.difference(x0, y - x0)[0][0], x0, 1.0 / grid,
                        max(refine_tol, 1e-9))
            refined.append(land.newton(x) % 1.0)
        best = refined[0]
        for x in refined[1:]:
            diff, scale = land.difference(best, x - best)
            if diff[0] < -TIE * scale[0]:
                best = x
        found = []
        for x in sorted(refined, key=tuple):
            diff, scale = land.difference(best, x - best)
            if diff[0] <= TIE * scale[0] and all(_torus_distance(x, y) > 1e-6 for y in found):
                found.append(x)
        per_alpha[alpha] = np.array(sorted(found, key=tuple))
    reference = per_alpha[alphas[0]]
    common = [x for x in reference
              if all(any(_torus_distance(x, y) < 1e-6 for y in per_alpha[a]) for a in alphas)]
    consistent = all(len(per_alpha[a]) == len(reference) for a in alphas) and len(common) == len(reference)
    points = np.array(common).reshape(-1, d)
    values = {}
    if len(points):
        for alpha in alphas:
            z = lattice.dual_generator @ points[0]
            values[alpha] = translated_theta(dual(lattice), z, alpha).value
    return ThetaMinimum(points, alphas, values, len(points), _period(points) if len(points) else None,
                        consistent, per_alpha)


@dataclass
class OptimalCharges:
    configuration: ChargeConfiguration
    energy: float
    k0: tuple
    degeneracy: int
    mode_energies: np.ndarray
    theta: ThetaMinimum | None
    theta_agrees: bool | None
    meta: dict = field(default_factory=dict)

    @property
    def degenerate_family(self) -> bool:
        """More minimal modes than the symmetric pair ``k0, -k0``."""
        return self.degeneracy > 2


def optimal_charges(lattice: BravaisLattice, potential: Potential, N: int,
                    alpha: float = DEFAULT_ALPHA, tol: float = 1e-13, theta: ThetaMinimum | None = None,
                    check_period: bool = True) -> OptimalCharges:
    """Cosine configuration on the lowest net mode energy among ``k != 0 mod N``.

    With ``check_period`` the period ``N`` must be a multiple of the theta
    minimizer's denominator.
    """
    d = lattice.dim
    if check_period:
        theta = minimize_translated_theta(lattice, grid=16) if theta is None else theta
        if theta.period is None or N % theta.period:
            raise IncompatiblePeriodError(
                f"N={N} cannot represent the theta minimizers {theta.points.tolist()} "
                f"(need a multiple of {theta.period})")
    table = ewald_tables(lattice, potential, N, alpha, tol).net_modes()
    ks = mode_indices(N, d)
    nonzero = np.any(ks != 0, axis=1)
    energies = np.array([table[tuple(k)] for k in ks])
    best = float(np.min(energies[nonzero]))
    close = nonzero & (energies <= best + 1e-9 * max(1.0, abs(best)))
    k0 = tuple(int(v) for v in ks[np.argmax(close)])
    phi = cosine_config(lattice, N, lattice.dual_generator @ (np.array(k0) / N),
                        require_neutral=False)
    xi = spectral_density(phi).values
    support = xi > 1e-12
    energy = float(np.sum(xi[support] * table[support])) / (2 * phi.size)
    agrees = None
    if theta is not None and len(theta.points):
        agrees = any(_torus_distance(np.array(k0) / N, p) < 1e-6 for p in theta.points)
    return OptimalCharges(canonicalize(phi), energy, k0, int(np.sum(close)), table, theta, agrees,
                          meta={"alpha": alpha})


@dataclass
class BruteForceMinimum:
    energy: float
    configuration: ChargeConfiguration
    eigenspace: np.ndarray
    multiplicity: int
    eigengap: float
    eigenvalues: np.ndarray
    neutral_only: bool


def brute_force_min(lattice: BravaisLattice, potential: Potential, N: int,
                    alpha: float = DEFAULT_ALPHA, tol: float = 1e-13) -> BruteForceMinimum:
    """Minimum of ``phi^T M phi`` on the sphere ``|phi|^2 = N^d`` by dense ``eigh``.

    Non-summable potentials are restricted to the neutral subspace.
    """
    n = N ** lattice.dim
    if n > BRUTE_FORCE_CAP:
        raise ValueError(f"N^d = {n} exceeds the brute-force cap {BRUTE_FORCE_CAP}")
    M, neutral_only = interaction_matrix(lattice, potential, N, alpha, tol)
    if neutral_only:
        Q = linalg.null_space(np.ones((1, n)))
        w, v = linalg.eigh(Q.T @ M @ Q)
        v = Q @ v
    else:
        w, v = linalg.eigh(M)
    scale = max(1.0, float(np.max(np.abs(w))))
    level = w <= w[0] + 1e-9 * scale
    mult = int(np.sum(level))
    gap = float(w[mult] - w[0]) if mult < len(w) else 0.0
    basis = v[:, level]
    phi = basis[:, 0] * math.sqrt(n)
    config = canonicalize(ChargeConfiguration(lattice, phi.reshape((N,) * lattice.dim)))
    return BruteForceMinimum(float(w[0] * n), config, basis, mult, gap, w, neutral_only)


@dataclass
class VerificationReport:
    configuration: ChargeConfiguration
    energy: float
    brute_force_energy: float
    eigengap: float
    multiplicity: int
    k0: tuple
    degeneracy: int
    membership_residual: float
    match: bool
    random_samples: int
    random_minimum: float
    random_violations: int
    total_charge: float
    brute_force_total_charge: float
    summable: bool
    theta: ThetaMinimum | None
    theta_agrees: bool | None
    seconds: float

    def to_dict(self) -> dict:
        return {
            "configuration": self.configuration.to_dict(),
            "charges": sorted({round(float(v), 12) for v in self.configuration.values.ravel()}),
            "energy": self.energy,
            "brute_force_energy": self.brute_force_energy,
            "energy_difference": self.energy - self.brute_force_energy,
            "eigengap": self.eigengap,
            "multiplicity": self.multiplicity,
            "k0": list(self.k0),
            "degeneracy": self.degeneracy,
            "membership_residual": self.membership_residual,
            "match": self.match,
            "random_samples": self.random_samples,
            "random_minimum": self.random_minimum,
            "random_violations": self.random_violations,
            "total_charge": self.total_charge,
            "brute_force_total_charge": self.brute_force_total_charge,
            "summable": self.summable,
            "theta": None if self.theta is None else self.theta.to_dict(),
            "theta_agrees": self.theta_agrees,
        }


def verify_born(lattice: BravaisLattice, potential: Potential, N: int, samples: int = 200,
                seed: int = 0, alpha: float = DEFAULT_ALPHA, tol: float = 1e-13,
                theta_grid: int = 16) -> VerificationReport:
    """Compare the constructed cosine optimum with the eigen-decomposition oracle.

    The match requires equal energies (1e-8), the constructed configuration
    lying in the minimal eigenspace (residual below 1e-7), and no random
    feasible configuration beating it by more than 1e-9.
    """
    start = time.perf_counter()
    theta = minimize_translated_theta(lattice, grid=theta_grid)
    opt = optimal_charges(lattice, potential, N, alpha, tol, theta=theta)
    bf = brute_force_min(lattice, potential, N, alpha, tol)
    n = N ** lattice.dim
    phi = opt.configuration.values.ravel()
    unit = phi / np.linalg.norm(phi)
    residual = float(np.linalg.norm(unit - bf.eigenspace @ (bf.eigenspace.T @ unit)))

    summable = potential.summable(lattice.dim)
    rng = np.random.default_rng(seed)
    table = opt.mode_energies
    random_energies = []
    for _ in range(samples):
        trial = random_configuration(lattice, N, rng, neutral=not summable)
        xi = spectral_density(trial).values
        if not summable:
            xi[(0,) * lattice.dim] = 0.0
        random_energies.append(float(np.nansum(xi * table)) / (2 * n))
    violations = sum(e < opt.energy - 1e-9 for e in random_energies)

    match = (abs(opt.energy - bf.energy) < 1e-8 and residual < 1e-7 and violations == 0)
    if bf.multiplicity == 1:
        match = match and np.allclose(opt.configuration.values, bf.configuration.values, atol=1e-8)
    return VerificationReport(
        opt.configuration, opt.energy, bf.energy, bf.eigengap, bf.multiplicity, opt.k0, opt.degeneracy,
        residual, bool(match), samples, min(random_energies) if random_energies else math.nan,
        int(violations), opt.configuration.total_charge, float(np.sum(bf.configuration.values)),
        summable, theta, opt.theta_agrees, time.perf_counter() - start)


def neutrality_check(report: VerificationReport, tol: float = 1e-9) -> bool:
    """Whether the unconstrained minimizer came out neutral (summable potentials)."""
    if not report.summable:
        raise ValueError("neutrality is imposed, not tested, for non-summable potentials")
    return abs(report.brute_force_total_charge) < tol and abs(report.total_charge) < tol
