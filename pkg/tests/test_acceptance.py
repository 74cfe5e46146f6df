"""Acceptance suite: one PASS/FAIL line per criterion, printed to the terminal."""
import itertools
import math
import time

import numpy as np
import pytest

from chargelattice import cli
from chargelattice import lattice as lat
from chargelattice.charges import alternating, random_configuration
from chargelattice.config import read_output
from chargelattice.energy import (energy_convergence_factor, energy_direct, energy_epstein, energy_ewald,
                                  energy_spectral, interaction_matrix, mode_energy_ewald, mode_table)
from chargelattice.optimize import brute_force_min, minimize_translated_theta, verify_born
from chargelattice.potentials import Gaussian, Riesz
from chargelattice.special_functions import epstein_zeta, jacobi_transform_residual

MADELUNG = 1.7475645946


@pytest.fixture
def verdict(capsys):
    def emit(number, title, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {title} | {detail}")
        assert ok, detail
    return emit


def test_criterion_01_born_cubic(tmp_path, verdict):
    details, ok = [], True
    for name, s in [("born-cubic", 1), ("born-cubic-s3", 3)]:
        out = tmp_path / name
        start = time.perf_counter()
        code = cli.run(["verify", "--preset", name, "--out", str(out)])
        seconds = time.perf_counter() - start
        doc = read_output(out / "verify.json")
        values = np.array(doc["configuration"]["values"]).reshape(2, 2, 2)
        expected = alternating(lat.cubic(3)).values
        gap = abs(doc["energy"] - doc["brute_force_energy"])
        case_ok = (code == 0 and doc["match"] and np.array_equal(values, expected) and gap < 1e-8
                   and seconds < 10)
        ok &= case_ok
        details.append(f"s={s}: exit {code}, |dE|={gap:.1e}, {seconds:.2f}s")
    verdict(1, "Born rock-salt optimum on Z^3", ok, "; ".join(details))


def test_criterion_02_triangular_honeycomb(tmp_path, verdict):
    start = time.perf_counter()
    code = cli.run(["verify", "--preset", "triangular", "--out", str(tmp_path)])
    seconds = time.perf_counter() - start
    doc = read_output(tmp_path / "verify.json")
    charges = doc["charges"]
    tri = lat.triangular("obtuse")
    k0 = np.array(doc["k0"])
    barycentre = (tri.dual_basis[0] + tri.dual_basis[1]) / 3
    wave = tri.dual_generator @ (k0 / 3)
    on_barycentre = min(np.linalg.norm(wave - barycentre), np.linalg.norm(wave + barycentre - np.round(
        tri.generator.T @ (wave + barycentre)) @ tri.dual_basis)) < 1e-12
    ok = (code == 0 and doc["match"] and doc["degeneracy"] == 2
          and np.allclose(charges, [-math.sqrt(2) / 2, math.sqrt(2)], atol=1e-12)
          and on_barycentre and doc["membership_residual"] < 1e-7 and seconds < 10)
    acute = verify_born(lat.triangular("acute"), Riesz(1.0), 3, samples=20)
    verdict(2, "triangular honeycomb (obtuse basis)", ok,
            f"charges {charges}, degeneracy {doc['degeneracy']}, k0 {doc['k0']}, "
            f"residual {doc['membership_residual']:.1e}, {seconds:.2f}s; "
            f"acute basis: k0 {list(acute.k0)}, match {acute.match}")


def test_criterion_03_madelung(verdict):
    Z3 = lat.cubic(3)
    phi = alternating(Z3)
    a = energy_ewald(Z3, Riesz(1.0), phi, alpha=math.sqrt(math.pi)).value
    b = energy_ewald(Z3, Riesz(1.0), phi, alpha=1.3).value
    err = abs(a + MADELUNG / 2)
    drift = abs(a - b)
    verdict(3, "Madelung constant", err < 1e-7 and drift < 1e-10,
            f"E={a:.13f}, |E+M/2|={err:.1e}, alpha drift {drift:.1e}")


def test_criterion_04_one_dimensional_closed_forms(verdict):
    Z = lat.cubic(1)
    phi = alternating(Z)
    coulomb = {
        "convergence-factor": energy_convergence_factor(Z, Riesz(1.0), phi).value,
        "ewald": energy_ewald(Z, Riesz(1.0), phi).value,
        "epstein": energy_epstein(Z, 1.0, phi).value,
    }
    errs = {k: abs(v + math.log(2)) for k, v in coulomb.items()}
    direct = energy_direct(Z, Riesz(2.0), phi).value
    err2 = abs(direct + math.pi ** 2 / 12)
    ok = max(errs.values()) < 1e-9 and err2 < 1e-9
    detail = ", ".join(f"{k} {v:.1e}" for k, v in errs.items())
    verdict(4, "1D closed forms", ok, f"-ln 2: {detail}; -pi^2/12 direct: {err2:.1e}")


def test_criterion_05_jacobi_transformation(verdict):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        d = int(rng.integers(1, 4))
        while True:
            a = rng.normal(size=(d, d)) + 2 * np.eye(d)
            if np.linalg.cond(a) < 20:
                break
        L = lat.normalize_density(lat.from_generator(a))
        z = rng.uniform(-1, 1, d)
        alpha = float(np.exp(rng.uniform(np.log(0.2), np.log(5))))
        worst = max(worst, jacobi_transform_residual(L, z, alpha))
    verdict(5, "Jacobi transformation", worst < 1e-10, f"max residual {worst:.1e} over 100 cases")


def _torus_gap(points, expected):
    if len(points) != len(expected):
        return math.inf
    gaps = []
    for e in expected:
        diffs = (np.asarray(points) - e + 0.5) % 1.0 - 0.5
        gaps.append(np.min(np.max(np.abs(diffs), axis=1)))
    return max(gaps)


def test_criterion_06_theta_minimizers(verdict):
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(10):
        d = int(rng.integers(1, 4))
        L = lat.orthorhombic(*rng.uniform(0.4, 2.5, d))
        res = minimize_translated_theta(L, grid=12 if d == 3 else 16)
        for pts in res.per_alpha.values():
            worst = max(worst, _torus_gap(pts, [np.full(d, 0.5)]))
    tri = minimize_translated_theta(lat.triangular("obtuse"))
    tri_gap = max(_torus_gap(p, [np.array([1, 1]) / 3, np.array([2, 2]) / 3]) for p in tri.per_alpha.values())
    acute = minimize_translated_theta(lat.triangular("acute"))
    acute_gap = max(_torus_gap(p, [np.array([1, 2]) / 3, np.array([2, 1]) / 3])
                    for p in acute.per_alpha.values())
    ok = worst < 1e-6 and tri_gap < 1e-6
    verdict(6, "theta minimizers", ok,
            f"orthorhombic max gap {worst:.1e}; triangular (obtuse) gap {tri_gap:.1e}; "
            f"acute basis minimizers {np.round(acute.points, 6).tolist()} (gap {acute_gap:.1e})")


def test_criterion_07_route_equivalence(verdict):
    lattices = {"Z2": lat.cubic(2), "triangular": lat.triangular(), "diag(1,2)": lat.orthorhombic(1.0, 2.0)}
    potentials = {"gaussian": Gaussian(math.pi), "riesz3": Riesz(3.0), "riesz4": Riesz(4.0)}
    rng = np.random.default_rng(77)
    failures, worst_ratio = [], 0.0
    for (ln, L), (pn, P), N in itertools.product(lattices.items(), potentials.items(), (2, 3)):
        phi = random_configuration(L, N, rng)
        reps = [energy_direct(L, P, phi), energy_spectral(L, P, phi), energy_ewald(L, P, phi),
                energy_convergence_factor(L, P, phi)]
        for a, b in itertools.combinations(reps, 2):
            allowed = a.error + b.error
            gap = abs(a.value - b.value)
            worst_ratio = max(worst_ratio, gap / allowed)
            if gap > allowed:
                failures.append(f"{ln}/{pn}/N={N}: {a.route} vs {b.route} {gap:.1e} > {allowed:.1e}")
    verdict(7, "route equivalence 3x3, N in {2,3}", not failures,
            f"worst |diff|/bound {worst_ratio:.2f}" + ("; " + "; ".join(failures) if failures else ""))


def test_criterion_08_epstein_identity(verdict):
    worst = 0.0
    cases = [(lat.cubic(2), "Z2"), (lat.triangular(), "triangular")]
    for (L, _), s, (k, N) in itertools.product(cases, (1.0, 1.5, 2.0), [((1, 1), 2), ((1, 1), 3)]):
        F = mode_energy_ewald(L, Riesz(s), k, N)
        Z = epstein_zeta(L, L.dual_generator @ (np.array(k) / N), s).real
        worst = max(worst, abs(F - Z - 2 * math.pi ** (s / 2) / (s * math.gamma(s / 2))))
    rng = np.random.default_rng(8)
    full = 0.0
    for (L, _), s, N in itertools.product(cases, (1.0, 1.5, 2.0), (2, 3)):
        phi = random_configuration(L, N, rng)
        full = max(full, abs(energy_ewald(L, Riesz(s), phi).value - energy_epstein(L, s, phi).value))
    verdict(8, "Epstein identity", worst < 1e-7 and full < 1e-7,
            f"mode identity max {worst:.1e}; full-energy max {full:.1e}")


def test_criterion_09_eigen_mode_identity(verdict):
    cases = [(lat.cubic(1), Riesz(2.0), 7), (lat.cubic(2), Riesz(3.0), 8), (lat.triangular(), Riesz(1.0), 4),
             (lat.cubic(3), Gaussian(math.pi), 4), (lat.orthorhombic(1.0, 2.0), Riesz(4.0), 5),
             (lat.cubic(3), Riesz(1.0), 2)]
    worst = 0.0
    for L, P, N in cases:
        M, neutral_only = interaction_matrix(L, P, N)
        n = N ** L.dim
        expected = mode_table(L, P, N).ravel() / (2 * n)
        if neutral_only:
            Q = np.linalg.svd(np.ones((1, n)))[2][1:].T
            eig = np.linalg.eigvalsh(Q.T @ M @ Q)
            expected = np.delete(expected, 0)
        else:
            eig = np.linalg.eigvalsh(M)
        worst = max(worst, float(np.max(np.abs(np.sort(eig) - np.sort(expected)))))
    verdict(9, "eigenvalues equal mode energies", worst < 1e-8,
            f"max multiset gap {worst:.1e} over {len(cases)} cases (N^d <= 64)")


def test_criterion_10_neutrality_emergence(verdict):
    cases = [(lat.cubic(2), Riesz(3.0), 2), (lat.cubic(3), Gaussian(math.pi), 2),
             (lat.orthorhombic(1.0, 2.0), Riesz(3.0), 4), (lat.triangular(), Riesz(3.0), 3),
             (lat.cubic(1), Riesz(2.0), 6), (lat.cubic(3), Riesz(4.0), 3)]
    worst = 0.0
    for L, P, N in cases:
        bf = brute_force_min(L, P, N)
        assert not bf.neutral_only
        worst = max(worst, abs(float(np.sum(bf.configuration.values))),
                    float(np.max(np.abs(bf.eigenspace.sum(axis=0)))))
    verdict(10, "neutrality of unconstrained minimizers", worst < 1e-9,
            f"max |sum phi| {worst:.1e} over {len(cases)} cases")
