import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chargelattice import lattice as lat
from chargelattice.charges import (ChargeConfiguration, ChargeError, alternating, autocorrelation,
                                   canonicalize, cosine_config, dft, honeycomb_triangular, idft,
                                   mode_indices, random_configuration, reconstruct_from_spectrum,
                                   spectral_density)


def brute_spectral_density(values):
    """xi_k = N^-d sum_y s_y exp(2 pi i y.k / N) with s summed pairwise, no transforms."""
    N, d = values.shape[0], values.ndim
    ms = mode_indices(N, d)
    flat = {tuple(m): values[tuple(m)] for m in ms}
    s = {tuple(x): sum(flat[tuple(y)] * flat[tuple((y + x) % N)] for y in ms) for x in ms}
    xi = np.zeros(values.shape)
    for k in ms:
        xi[tuple(k)] = sum(s[tuple(y)] * np.exp(2j * np.pi * (y @ k) / N) for y in ms).real / N ** d
    return xi


def test_dft_examples():
    for d, N in [(1, 4), (2, 3), (3, 2)]:
        ones = np.ones((N,) * d)
        hat = dft(ones)
        assert abs(hat[(0,) * d] - N ** (d / 2)) < 1e-12
        assert np.allclose(np.delete(hat.ravel(), 0), 0, atol=1e-12)
        delta = np.zeros((N,) * d)
        delta[(0,) * d] = 1.0
        assert np.allclose(np.abs(dft(delta)), N ** (-d / 2))


def test_dft_unitary(rng):
    for d, N in [(1, 5), (2, 4), (3, 3)]:
        phi = rng.normal(size=(N,) * d)
        assert abs(np.linalg.norm(dft(phi)) - np.linalg.norm(phi)) < 1e-10
        assert np.allclose(dft(idft(phi)), phi, atol=1e-10)


def test_autocorrelation_examples():
    Z = lat.cubic(1)
    assert autocorrelation(alternating(Z)).values.tolist() == [2.0, -2.0]
    assert autocorrelation(np.ones(2)).values.tolist() == [2.0, 2.0]


def test_autocorrelation_invariants(rng):
    for d, N in [(1, 5), (2, 3), (3, 2), (2, 4)]:
        phi = random_configuration(lat.cubic(d), N, rng, neutral=False)
        s = autocorrelation(phi).values
        assert abs(s[(0,) * d] - N ** d) < 1e-10
        reflected = s[tuple(np.meshgrid(*[(-np.arange(N)) % N] * d, indexing="ij"))]
        assert np.allclose(s, reflected, atol=1e-12)
        assert abs(s.sum() - phi.total_charge ** 2) < 1e-9
        via_transform = N ** (d / 2) * idft(np.abs(idft(phi)) ** 2)
        assert np.allclose(s, via_transform.real, atol=1e-10)


def test_spectral_density_examples():
    xi = spectral_density(alternating(lat.cubic(3))).values
    expected = np.zeros((2, 2, 2))
    expected[1, 1, 1] = 8.0
    assert np.allclose(xi, expected, atol=1e-12)
    honey = spectral_density(honeycomb_triangular()).values
    assert abs(honey[1, 1] - 4.5) < 1e-12 and abs(honey[2, 2] - 4.5) < 1e-12
    assert abs(honey.sum() - 9) < 1e-12
    assert np.allclose(honey, brute_spectral_density(honeycomb_triangular().values), atol=1e-12)


def test_spectral_density_matches_pairwise_oracle(rng):
    for d, N in [(1, 6), (2, 3), (3, 2)]:
        phi = rng.normal(size=(N,) * d)
        assert np.allclose(spectral_density(phi).values, brute_spectral_density(phi), atol=1e-10)


def test_spectral_density_invariants(rng):
    for d, N in [(1, 7), (2, 4), (3, 3)]:
        phi = random_configuration(lat.cubic(d), N, rng, neutral=False)
        xi = spectral_density(phi).values
        assert np.all(xi >= 0)
        assert abs(xi.sum() / N ** d - 1) < 1e-10
        assert abs(xi[(0,) * d] - phi.total_charge ** 2 / N ** d) < 1e-10
        assert np.allclose(xi, np.abs(idft(phi)) ** 2, atol=1e-10)
        neutral = random_configuration(lat.cubic(d), N, rng)
        assert abs(spectral_density(neutral).values[(0,) * d]) < 1e-12


def test_reconstruct_examples():
    xi = np.zeros((2, 2, 2))
    xi[1, 1, 1] = 8.0
    phi = reconstruct_from_spectrum(xi, lat.cubic(3))
    assert np.allclose(phi.values, alternating(lat.cubic(3)).values)
    flat = reconstruct_from_spectrum(np.ones((3, 3)), lat.cubic(2))
    assert abs(flat.values[0, 0] - 3.0) < 1e-12
    assert np.allclose(np.delete(flat.values.ravel(), 0), 0, atol=1e-12)


def test_reconstruct_rejects_invalid_spectra():
    L = lat.cubic(1)
    with pytest.raises(ChargeError):
        reconstruct_from_spectrum(np.array([1.0, 1.5, 0.5]), L)
    with pytest.raises(ChargeError):
        reconstruct_from_spectrum(np.array([3.0, -1.0]), L)
    with pytest.raises(ChargeError):
        reconstruct_from_spectrum(np.array([1.0, 2.0]), L)
    with pytest.raises(ChargeError):
        reconstruct_from_spectrum(np.array([1.0, 1.0]))


def random_symmetric_spectrum(rng, N, d):
    raw = rng.uniform(0, 1, (N,) * d) * (rng.uniform(size=(N,) * d) < 0.7)
    idx = tuple((-m) % N for m in np.meshgrid(*[np.arange(N)] * d, indexing="ij"))
    sym = raw + raw[idx]
    if sym.sum() == 0:
        sym[(0,) * d] = 1.0
    return sym * N ** d / sym.sum()


def test_round_trip_on_random_spectra(rng):
    for _ in range(200):
        N = int(rng.integers(2, 5))
        d = int(rng.integers(1, 4))
        xi = random_symmetric_spectrum(rng, N, d)
        phi = reconstruct_from_spectrum(xi, lat.cubic(d))
        assert phi.is_normalized(1e-10)
        assert np.allclose(spectral_density(phi).values, xi, atol=1e-9)


def test_alternating_examples():
    assert alternating(lat.cubic(1)).values.tolist() == [1.0, -1.0]
    phi = alternating(lat.cubic(3))
    assert phi.values[1, 1, 0] == 1.0
    assert phi.is_neutral() and phi.is_normalized()


def test_honeycomb_examples():
    phi = honeycomb_triangular()
    assert abs(phi.values[0, 0] - math.sqrt(2)) < 1e-15
    assert abs(phi.values[1, 0] + math.sqrt(2) / 2) < 1e-15
    assert abs(phi.total_charge) < 1e-12 and phi.is_normalized()


def test_cosine_config_examples():
    L = lat.orthorhombic(1.0, 2.0, 0.5)
    centre = L.dual_generator @ np.full(3, 0.5)
    phi = cosine_config(L, 2, centre)
    assert np.allclose(phi.values, alternating(L).values)
    tri = lat.triangular("obtuse")
    z0 = tri.dual_generator @ np.array([1 / 3, 1 / 3])
    honey = cosine_config(tri, 3, z0)
    assert np.allclose(honey.values, honeycomb_triangular().values)
    with pytest.raises(ChargeError):
        cosine_config(L, 2, np.zeros(3))
    assert np.allclose(cosine_config(L, 2, np.zeros(3), require_neutral=False).values, 1.0)
    with pytest.raises(ChargeError):
        cosine_config(tri, 2, z0)


def test_translation_keeps_spectrum(rng):
    for d, N in [(1, 5), (2, 3), (3, 2)]:
        phi = random_configuration(lat.cubic(d), N, rng)
        shift = rng.integers(-3, 4, d)
        moved = phi.translated(shift)
        assert np.allclose(spectral_density(moved).values, spectral_density(phi).values, atol=1e-10)
        assert moved.values[(0,) * d] == phi.values[tuple(np.asarray(shift) % N)]


def test_canonicalize_quotients_translation_and_sign(rng):
    phi = random_configuration(lat.cubic(2), 3, rng)
    ref = canonicalize(phi).values
    for shift in mode_indices(3, 2):
        assert np.array_equal(canonicalize(phi.translated(shift)).values, ref)
        assert np.array_equal(canonicalize(-phi.translated(shift)).values, ref)
    assert ref[0, 0] == np.max(np.abs(phi.values))
    assert canonicalize(-alternating(lat.cubic(3))).values[0, 0, 0] == 1.0


def test_serialization_round_trip(rng):
    tri = lat.triangular("obtuse")
    phi = random_configuration(tri, 3, rng)
    back = ChargeConfiguration.from_json(phi.to_json(), tri)
    assert np.array_equal(back.values, phi.values)
    rows = list(csv.reader(io.StringIO(phi.to_csv())))
    assert rows[0] == ["m1", "m2", "x1", "x2", "charge"]
    assert len(rows) == 10
    for row in rows[1:]:
        m = (int(row[0]), int(row[1]))
        assert np.allclose([float(row[2]), float(row[3])], tri.point(m))
        assert float(row[4]) == phi.values[m]


def test_configuration_validation():
    L = lat.cubic(2)
    with pytest.raises(ChargeError):
        ChargeConfiguration(L, np.ones((2, 3)))
    with pytest.raises(ChargeError):
        ChargeConfiguration(L, np.array([[1.0, np.nan], [0.0, 1.0]]))
    with pytest.raises(ChargeError):
        ChargeConfiguration.from_dict({"N": 2, "values": [1, 2, 3]}, L)
    with pytest.raises(ChargeError):
        ChargeConfiguration(L, np.zeros((2, 2))).normalized()
    phi = ChargeConfiguration(L, np.ones((2, 2)))
    with pytest.raises(ValueError):
        phi.values[0, 0] = 3.0


@settings(max_examples=80)
@given(st.integers(1, 3), st.integers(2, 4), st.integers(0, 2**32 - 1))
def test_spectral_weights_sum_and_symmetry(d, N, seed):
    phi = random_configuration(lat.cubic(d), N, np.random.default_rng(seed), neutral=False)
    xi = spectral_density(phi).values
    idx = tuple((-m) % N for m in np.meshgrid(*[np.arange(N)] * d, indexing="ij"))
    assert np.allclose(xi, xi[idx], atol=1e-12)
    assert abs(xi.sum() - N ** d) < 1e-9
