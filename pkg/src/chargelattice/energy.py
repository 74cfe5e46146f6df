"""Energy per particle of a periodic charge distribution.

Routes
------
direct
    ``(1/2N^d) sum_{x != 0} s_x f(x)`` truncated at a radius, summable ``f`` only.
convergence-factor
    The same sum screened by ``exp(-eta |x|^2)``, extrapolated to ``eta = 0``.
ewald
    Short-range sum of ``f_1`` over the lattice plus long-range sum of ``f_2``
    over the dual lattice, minus half the measure mass below ``alpha^2``.
spectral
    ``(1/2N^d) sum_k xi_k E[k]`` from per-mode energies.
epstein
    Riesz potentials with ``0 < s <= d``: mode energies are Epstein zeta values.

Mode energies are reported "net", ``E[k] = F[k] - mu([0, alpha^2])``, which
does not depend on ``alpha``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .charges import (ChargeConfiguration, autocorrelation, dense_transform, mode_indices,
                      spectral_density)
from .lattice import (BravaisLattice, ball_coordinates, distance_to_dual, dual,
                      gaussian_tail_bound, radius_for_tail)
from .potentials import Gaussian, Potential, Riesz
from .special_functions import epstein_zeta

__all__ = [
    "EnergyReport",
    "EwaldTables",
    "NonNeutralError",
    "NotSummableError",
    "ConvergenceError",
    "DEFAULT_ALPHA",
    "energy_direct",
    "energy_convergence_factor",
    "energy_ewald",
    "energy_spectral",
    "energy_epstein",
    "ewald_tables",
    "mode_energy_summable",
    "mode_energy_ewald",
    "mode_table",
    "interaction_matrix",
    "direct_tail_bound",
    "screening_ladder",
]

DEFAULT_ALPHA = math.sqrt(math.pi)
ETA_CEILING = 0.08
ETA_COUNT = 8
POINT_BUDGET = 2_000_000
# spectral weights below this fraction of N^d are treated as round-off
XI_CUTOFF = 1e-13


class NonNeutralError(ValueError):
    pass


class NotSummableError(ValueError):
    pass


class ConvergenceError(ArithmeticError):
    pass


@dataclass
class EnergyReport:
    value: float
    route: str
    error: float
    alpha: float | None = None
    radii: dict = field(default_factory=dict)
    modes: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def mode_rows(self):
        """``(k, E[k])`` pairs in lexicographic order of ``k``; empty without a table."""
        if self.modes is None:
            return []
        N, d = self.modes.shape[0], self.modes.ndim
        return [(tuple(int(v) for v in k), float(self.modes[tuple(k)])) for k in mode_indices(N, d)]

    def to_dict(self) -> dict:
        out = {
            "value": float(self.value),
            "route": self.route,
            "error": float(self.error),
            "alpha": None if self.alpha is None else float(self.alpha),
            "radii": {k: float(v) for k, v in self.radii.items()},
            "meta": self.meta,
        }
        if self.modes is not None:
            out["modes"] = [{"k": list(k), "energy": None if math.isnan(v) else v}
                            for k, v in self.mode_rows()]
        return out


def _configuration(lattice: BravaisLattice, phi) -> ChargeConfiguration:
    if isinstance(phi, ChargeConfiguration):
        if phi.lattice is not lattice and not np.allclose(phi.lattice.generator, lattice.generator,
                                                          rtol=0, atol=1e-12):
            raise ValueError("configuration lives on a different lattice")
        return phi
    return ChargeConfiguration(lattice, np.asarray(phi, dtype=float))


def _require_neutral(potential: Potential, phi: ChargeConfiguration, tol: float = 1e-9):
    if not potential.summable(phi.dim) and not phi.is_neutral(tol * max(1.0, math.sqrt(phi.size))):
        raise NonNeutralError(
            f"total charge {phi.total_charge:.3g} must vanish for a potential that is not summable")


def _ball_volume(d: int) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def _budget_radius(lattice: BravaisLattice, budget: int = POINT_BUDGET) -> float:
    d = lattice.dim
    return max((budget * lattice.covolume / _ball_volume(d)) ** (1 / d) - lattice.half_diagonal, 1.0)


def _radius(bound, tol: float, start: float, rmax: float, growth: float = 1.08):
    """Radius where ``bound`` drops below ``tol``, or ``rmax`` if that comes first."""
    r = max(start, 0.25)
    while bound(r) > tol:
        if r >= rmax:
            return rmax, False
        r = min(r * growth, rmax)
    return r, True


def _dominated_tail(lattice: BravaisLattice, g_at_r: float, a: float, r: float) -> float:
    """Tail bound for ``sum_{|y| > r} g(|y|)`` when ``g(u) <= g(r) exp(-a (u^2 - r^2))``."""
    if g_at_r <= 0:
        return 0.0
    return math.exp(math.log(g_at_r) + a * r * r) * gaussian_tail_bound(lattice, a, r)


def direct_tail_bound(lattice: BravaisLattice, potential: Potential, radius: float) -> float:
    """Upper bound on ``sum_{x in X, |x| > radius} f(x)`` for summable ``f``."""
    d = lattice.dim
    if not potential.summable(d):
        raise NotSummableError(f"{potential} is not summable in dimension {d}")
    if isinstance(potential, Riesz):
        s, D = potential.s, lattice.half_diagonal
        total = sum(math.comb(d, j) * D ** (d - j) * radius ** (j - s) / (s - j) for j in range(d + 1))
        return _ball_volume(d) / lattice.covolume * s * total
    if isinstance(potential, Gaussian):
        return potential.weight * gaussian_tail_bound(lattice, potential.t0, radius)
    return potential.integrate(lambda t: gaussian_tail_bound(lattice, t, radius), 0.0, math.inf)[0]


def _class_sums(lattice: BravaisLattice, N: int, radius: float):
    """Nonzero lattice points within ``radius`` with their residue classes mod ``N``."""
    coords, vecs = ball_coordinates(lattice, radius)
    nz = np.any(coords != 0, axis=1)
    coords, vecs = coords[nz], vecs[nz]
    return tuple((coords % N).T), np.sqrt(np.einsum("ij,ij->i", vecs, vecs))


def energy_direct(lattice: BravaisLattice, potential: Potential, phi, radius: float | None = None,
                  tol: float = 1e-12) -> EnergyReport:
    """Truncated direct sum; the reported error is a certified tail bound."""
    phi = _configuration(lattice, phi)
    if not potential.summable(lattice.dim):
        raise NotSummableError("the direct sum diverges for this potential; use the Ewald route")
    n = phi.size
    s = autocorrelation(phi).values
    scale = float(np.max(np.abs(s))) / (2 * n)
    reached = True
    if radius is None:
        radius, reached = _radius(lambda r: scale * direct_tail_bound(lattice, potential, r), tol,
                                  1.0 + lattice.half_diagonal, _budget_radius(lattice))
    idx, r = _class_sums(lattice, phi.N, radius)
    value = float(np.sum(s[idx] * potential.value(r))) / (2 * n)
    error = scale * direct_tail_bound(lattice, potential, radius)
    return EnergyReport(value, "direct", error, radii={"direct": radius},
                        meta={"tail_below_tol": bool(reached), "points": int(r.size)})


def _neville(xs, ys, x0: float = 0.0) -> float:
    p = list(ys)
    n = len(xs)
    for level in range(1, n):
        for i in range(n - level):
            p[i] = ((x0 - xs[i + level]) * p[i] + (xs[i] - x0) * p[i + 1]) / (xs[i] - xs[i + level])
    return p[0]


def screening_ladder(phi: ChargeConfiguration) -> list[float]:
    """Default screening parameters for the convergence-factor route.

    A mode at dual distance ``delta`` from ``X*`` feeds a non-polynomial
    ``exp(-pi^2 delta^2 / eta)`` term into the screened energy, so the ladder
    starts low enough to keep that term near round-off.
    """
    xi = spectral_density(phi).values
    keep, _ = _xi_support(xi, skip_zero=True)
    lattice = phi.lattice
    deltas = [distance_to_dual(lattice, lattice.dual_generator @ (k / phi.N)) for k in np.argwhere(keep)]
    top = ETA_CEILING
    if deltas:
        top = min(top, math.pi ** 2 * min(deltas) ** 2 / 30)
    return [top * 2.0 ** (-i / 2) for i in range(ETA_COUNT)]


def energy_convergence_factor(lattice: BravaisLattice, potential: Potential, phi,
                              etas=None, tol: float = 1e-13) -> EnergyReport:
    """Screened sums ``sum s_x f(x) exp(-eta |x|^2)`` extrapolated to ``eta = 0``.

    The screened energies are polynomial-extrapolated (Neville) through all
    ``eta``; the error estimate is the change from dropping the largest ``eta``
    plus the truncation tails.
    """
    phi = _configuration(lattice, phi)
    _require_neutral(potential, phi)
    if etas is None:
        etas = screening_ladder(phi)
    etas = sorted((float(e) for e in etas), reverse=True)
    if len(etas) < 2 or etas[-1] <= 0:
        raise ValueError("need at least two positive screening parameters")
    n = phi.size
    s = autocorrelation(phi).values
    scale = float(np.max(np.abs(s))) / (2 * n)
    rmax = _budget_radius(lattice)
    radii, tails = [], []
    for eta in etas:
        def bound(r, eta=eta):
            return scale * float(potential.value(r)) * gaussian_tail_bound(lattice, eta, r)
        r, _ = _radius(bound, tol, 1.0 + lattice.half_diagonal, rmax)
        radii.append(r)
        tails.append(bound(r))
    idx, r = _class_sums(lattice, phi.N, max(radii))
    weights = s[idx] * potential.value(r)
    r2 = r * r
    screened = [float(np.sum(weights[r <= R] * np.exp(-eta * r2[r <= R]))) / (2 * n)
                for eta, R in zip(etas, radii)]
    estimates = [_neville(etas[:j], screened[:j]) for j in range(2, len(etas) + 1)]
    value = _neville(etas, screened)
    extrapolation = abs(value - _neville(etas[1:], screened[1:]))
    # round-off in each screened sum, amplified by the extrapolation weights
    lebesgue = sum(abs(_neville(etas, np.eye(len(etas))[i])) for i in range(len(etas)))
    rounding = lebesgue * 4e-16 * float(np.sum(np.abs(weights))) / (2 * n)
    diffs = np.abs(np.diff(estimates))
    converged = bool(len(diffs) < 2 or diffs[-1] <= max(diffs[-2], 1e-10 * max(1.0, abs(value))))
    if not converged and diffs[-1] > 1e-6 * max(1.0, abs(value)):
        raise ConvergenceError(f"screened sums do not settle: successive estimates {estimates}")
    return EnergyReport(value, "convergence-factor", extrapolation + max(tails) + rounding,
                        radii={f"eta={e:g}": R for e, R in zip(etas, radii)},
                        meta={"etas": etas, "screened": screened, "extrapolation_residual": extrapolation,
                              "converged": converged})


@dataclass(frozen=True, eq=False)
class EwaldTables:
    """Residue-class sums of the Ewald split at one ``alpha`` and period ``N``.

    ``short_classes[r] = sum_{x = r mod N, x != 0} f_1(|x|)`` and
    ``long_classes[k] = sum_{p = k mod N} f_2(|p| / N)`` over dual points
    ``p`` (the ``p = 0`` term is left out when ``f`` is not summable).
    """

    alpha: float
    covolume: float
    short_classes: np.ndarray
    long_classes: np.ndarray
    mass: float
    summable: bool
    short_radius: float
    long_radius: float
    short_tail: float
    long_tail: float

    @property
    def N(self) -> int:
        return self.short_classes.shape[0]

    def modes(self) -> np.ndarray:
        """``F[k]``; ``nan`` at ``k = 0`` when the potential is not summable."""
        F = dense_transform(self.short_classes, -1).real + self.long_classes / self.covolume
        if not self.summable:
            F[(0,) * F.ndim] = np.nan
        return F

    def net_modes(self) -> np.ndarray:
        return self.modes() - self.mass


def ewald_tables(lattice: BravaisLattice, potential: Potential, N: int,
                 alpha: float = DEFAULT_ALPHA, tol: float = 1e-13) -> EwaldTables:
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    d = lattice.dim
    shape = (N,) * d
    summable = potential.summable(d)

    def short_bound(r):
        return _dominated_tail(lattice, float(potential.short(alpha, r)), alpha * alpha, r)

    r1, _ = _radius(short_bound, tol, 0.5, _budget_radius(lattice))
    idx, r = _class_sums(lattice, N, r1)
    short = np.zeros(shape)
    np.add.at(short, idx, potential.short(alpha, r))

    dual_lattice = dual(lattice)
    scaled = BravaisLattice(lattice.dual_generator / N)
    a2 = (math.pi / alpha) ** 2

    def long_bound(w):
        return _dominated_tail(dual_lattice, float(potential.long(alpha, w, d)), a2, w) / lattice.covolume

    r2, _ = _radius(long_bound, tol, 0.5, _budget_radius(scaled))
    coords, w = ball_coordinates(scaled, r2)
    if not summable:
        nz = np.any(coords != 0, axis=1)
        coords, w = coords[nz], w[nz]
    longc = np.zeros(shape)
    np.add.at(longc, tuple((coords % N).T), potential.long(alpha, np.sqrt(np.einsum("ij,ij->i", w, w)), d))
    return EwaldTables(alpha, lattice.covolume, short, longc, float(potential.mass(alpha)), summable,
                       r1, r2, short_bound(r1), long_bound(r2))


def mode_table(lattice: BravaisLattice, potential: Potential, N: int, alpha: float = DEFAULT_ALPHA,
               tol: float = 1e-13) -> np.ndarray:
    """Net mode energies ``E[k] = F[k] - mu([0, alpha^2])`` for all ``k``."""
    return ewald_tables(lattice, potential, N, alpha, tol).net_modes()


def mode_energy_ewald(lattice: BravaisLattice, potential: Potential, k, N: int,
                      alpha: float = DEFAULT_ALPHA, tol: float = 1e-13) -> float:
    """``F[k]`` (not net of the mass term) at splitting parameter ``alpha``."""
    k = tuple(int(v) % N for v in np.atleast_1d(k))
    if len(k) != lattice.dim:
        raise ValueError("mode index has the wrong dimension")
    if not potential.summable(lattice.dim) and not any(k):
        raise NotSummableError("the zero mode is singular for a potential that is not summable")
    return float(ewald_tables(lattice, potential, N, alpha, tol).modes()[k])


def _mode_energy_theta(lattice: BravaisLattice, potential: Potential, k, N: int, tol: float):
    d = lattice.dim
    V = lattice.covolume
    k = np.asarray(k, dtype=float).reshape(d)
    split = math.pi
    # Gaussian sums at the split point decay like exp(-pi r^2); later t only shrink them
    r_direct = radius_for_tail(lambda r: gaussian_tail_bound(lattice, split, r), tol * 1e-3, 1.0)
    coords, x = ball_coordinates(lattice, r_direct)
    nz = np.any(coords != 0, axis=1)
    phase = np.cos(2 * math.pi * (coords[nz] @ k) / N)
    x2 = np.einsum("ij,ij->i", x[nz], x[nz])

    dl = dual(lattice)
    shift = lattice.dual_generator @ (k / N)
    r_dual = radius_for_tail(lambda r: gaussian_tail_bound(dl, split, r) / V, tol * 1e-3, 1.0)
    _, y = ball_coordinates(dl, r_dual, shift=shift)
    y2 = np.einsum("ij,ij->i", y, y)
    singular = y2 < 1e-20
    y2 = y2[~singular]

    def direct_part(t):
        return float(np.dot(phase, np.exp(-t * x2)))

    def dual_part(t):
        if t <= 0:
            return -1.0
        return float(np.sum(np.exp(d / 2 * math.log(math.pi / t) - math.pi ** 2 * y2 / t))) / V - 1.0

    lo, e1 = potential.integrate(dual_part, 0.0, split)
    hi, e2 = potential.integrate(direct_part, split, math.inf)
    value = lo + hi
    if np.any(singular):
        value += float(potential.long(math.sqrt(split), 0.0, d)) / V
    return value, e1 + e2


def mode_energy_summable(lattice: BravaisLattice, potential: Potential, k, N: int,
                         tol: float = 1e-13) -> float:
    """``E[k] = sum_{x != 0} cos(2 pi x.k/N) f(x)`` as an integral of theta sums.

    Below ``t = pi`` the shifted dual-lattice theta sum is used, above it the
    direct sum; a mode ``k`` in ``N X*`` has its singular dual term integrated
    in closed form.
    """
    if not potential.summable(lattice.dim):
        raise NotSummableError("mode energies of a non-summable potential need the Ewald form")
    return _mode_energy_theta(lattice, potential, k, N, tol)[0]


def _xi_support(xi: np.ndarray, skip_zero: bool):
    n = xi.size
    keep = xi > XI_CUTOFF * n
    if skip_zero:
        keep[(0,) * xi.ndim] = False
    return keep, float(np.sum(xi[~keep]))


def energy_ewald(lattice: BravaisLattice, potential: Potential, phi, alpha: float = DEFAULT_ALPHA,
                 tol: float = 1e-13) -> EnergyReport:
    phi = _configuration(lattice, phi)
    _require_neutral(potential, phi)
    n = phi.size
    tables = ewald_tables(lattice, potential, phi.N, alpha, tol)
    s = autocorrelation(phi).values
    xi = spectral_density(phi).values
    if not tables.summable:
        xi = xi.copy()
        xi[(0,) * xi.ndim] = 0.0
    short = float(np.sum(s * tables.short_classes))
    longr = float(np.sum(xi * tables.long_classes)) / lattice.covolume
    s0 = float(s[(0,) * s.ndim])
    value = (short + longr - tables.mass * s0) / (2 * n)
    error = (float(np.sum(np.abs(s))) * tables.short_tail + float(np.sum(xi)) * tables.long_tail) / (2 * n)
    error += 1e-15 * (abs(short) + abs(longr) + tables.mass * s0) / (2 * n)
    return EnergyReport(value, "ewald", error, alpha=alpha,
                        radii={"short": tables.short_radius, "long": tables.long_radius},
                        modes=tables.net_modes(),
                        meta={"mass": tables.mass, "summable": tables.summable})


def energy_spectral(lattice: BravaisLattice, potential: Potential, phi, alpha: float | None = None,
                    modes: str = "auto", tol: float = 1e-13) -> EnergyReport:
    """``(1/2N^d) sum_k xi_k E[k]``.

    ``modes="theta"`` (the default for summable potentials) integrates theta
    sums for each mode carrying weight; ``"ewald"`` reads the Ewald mode table.
    """
    phi = _configuration(lattice, phi)
    _require_neutral(potential, phi)
    n = phi.size
    d = lattice.dim
    summable = potential.summable(d)
    if modes == "auto":
        modes = "theta" if summable else "ewald"
    if modes == "theta" and not summable:
        raise NotSummableError("theta-integral mode energies need a summable potential")
    xi = spectral_density(phi).values
    keep, skipped = _xi_support(xi, skip_zero=not summable)
    if modes == "theta":
        table = np.full(xi.shape, np.nan)
        errs = 0.0
        for k in np.argwhere(keep):
            table[tuple(k)], e = _mode_energy_theta(lattice, potential, k, phi.N, tol)
            errs += xi[tuple(k)] * e
        alpha_used = None
    elif modes == "ewald":
        alpha_used = DEFAULT_ALPHA if alpha is None else alpha
        tables = ewald_tables(lattice, potential, phi.N, alpha_used, tol)
        table = tables.net_modes()
        errs = float(np.sum(xi[keep])) * (tables.short_tail + tables.long_tail)
    else:
        raise ValueError(f"unknown mode route {modes!r}")
    value = float(np.sum(xi[keep] * table[keep])) / (2 * n)
    scale = float(np.nanmax(np.abs(table[keep]))) if np.any(keep) else 0.0
    error = (errs + skipped * scale) / (2 * n) + 1e-15 * abs(value)
    return EnergyReport(value, f"spectral-{modes}", error, alpha=alpha_used, modes=table,
                        meta={"active_modes": int(np.sum(keep))})


def energy_epstein(lattice: BravaisLattice, s: float, phi, tol: float = 1e-13) -> EnergyReport:
    """Riesz energy for ``0 < s <= d`` with every mode an Epstein zeta value."""
    phi = _configuration(lattice, phi)
    d = lattice.dim
    s = float(s)
    if not 0 < s <= d:
        raise ValueError(f"the Epstein route covers 0 < s <= d = {d}, got s = {s}")
    if not phi.is_neutral(1e-9 * max(1.0, math.sqrt(phi.size))):
        raise NonNeutralError("the Epstein route needs a neutral configuration")
    n = phi.size
    xi = spectral_density(phi).values
    keep, skipped = _xi_support(xi, skip_zero=True)
    table = np.full(xi.shape, np.nan)
    for k in np.argwhere(keep):
        z = lattice.dual_generator @ (k / phi.N)
        table[tuple(k)] = epstein_zeta(lattice, z, s, tol).real
    value = float(np.sum(xi[keep] * table[keep])) / (2 * n)
    scale = float(np.nanmax(np.abs(table[keep]))) if np.any(keep) else 0.0
    error = (float(np.sum(xi[keep])) * tol + skipped * scale) / (2 * n) + 1e-14 * abs(value)
    return EnergyReport(value, "epstein", error, modes=table,
                        meta={"s": s, "boundary_exponent": s == d})


def interaction_matrix(lattice: BravaisLattice, potential: Potential, N: int,
                       alpha: float = DEFAULT_ALPHA, tol: float = 1e-13):
    """Periodic interaction matrix ``M`` with ``E[phi] = phi^T M phi``.

    Entries ``M[y, y'] = c(y' - y) / 2N^d`` come from the Ewald class sums.
    Returns ``(M, neutral_only)``; when ``neutral_only`` is true the matrix is
    meaningful only on the neutral subspace (the zero mode is singular).
    """
    d = lattice.dim
    n = N ** d
    tables = ewald_tables(lattice, potential, N, alpha, tol)
    longc = tables.long_classes
    c = (tables.short_classes
         + dense_transform(longc, +1).real / (lattice.covolume * n))
    c[(0,) * d] -= tables.mass
    m = mode_indices(N, d)
    diff = (m[None, :, :] - m[:, None, :]) % N
    M = c[tuple(diff[..., i] for i in range(d))] / (2 * n)
    return 0.5 * (M + M.T), not tables.summable
