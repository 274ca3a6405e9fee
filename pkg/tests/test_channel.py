import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uavheading.channel import (
    RicianParams,
    apply_pathloss,
    clamp_psd,
    correlation_arrays,
    correlation_matrix,
    dirichlet_abs,
    los_correlation,
    los_vector,
    sample_channel,
    spread_kernel,
    steering_vector,
)
from uavheading.geometry import GroundPosition, LosGeometry, UavPose, los_geometry


def geom_from(phase, cos_el=0.9, sin_az=None):
    sin_az = phase / (math.pi * cos_el) if sin_az is None else sin_az
    return LosGeometry(1000.0, cos_el, 0.0, sin_az, math.pi * cos_el * sin_az)


def random_geom(rng):
    uav = UavPose(*rng.uniform(-500, 500, 2), 350.0, rng.uniform(0, 2 * math.pi))
    return los_geometry(uav, GroundPosition(*rng.uniform(-3000, 3000, 2)))


def b_entry(k, l, cos_el, cos_az_sq, s2):
    # direct scalar transcription of the taper formula
    lag = math.pi * (k - l)
    cos2phi = 2 * cos_el**2 - 1
    sin2phi = 2 * cos_el * math.sqrt(1 - cos_el**2)
    inner = 1 + cos2phi - 0.5 * s2**2 * sin2phi**2 * lag**2 * cos_az_sq
    return math.exp(-0.25 * lag**2 * s2 * cos_az_sq * inner)


def test_params_validation():
    for bad in (dict(k_factor=-1, m_antennas=4), dict(k_factor=1, m_antennas=0),
                dict(k_factor=1, m_antennas=4, sigma_r_sq=-0.1), dict(k_factor=1, m_antennas=4, path_loss_exp=0)):
        with pytest.raises(ValueError):
            RicianParams(**bad)


def test_los_vector_examples():
    g = geom_from(0.0)
    assert np.allclose(los_vector(g, RicianParams(math.inf, 4)), np.ones(4))
    v = los_vector(geom_from(math.pi / 2), RicianParams(10, 4))
    assert np.allclose(v, math.sqrt(10 / 11) * np.array([1, 1j, -1, -1j]), atol=1e-15)
    assert np.allclose(los_vector(g, RicianParams(0, 4)), 0)


@given(st.floats(-math.pi, math.pi), st.floats(0.01, 1e4), st.integers(1, 8))
def test_los_norm(p, k, m):
    v = los_vector(geom_from(p), RicianParams(k, m))
    assert np.vdot(v, v).real == pytest.approx(m * k / (1 + k), rel=1e-12)


def test_correlation_sigma_zero_is_rank_one():
    g = geom_from(1.0)
    r = correlation_matrix(g, RicianParams(10, 4, sigma_r_sq=0.0))
    a = steering_vector(g.phase_delay, 4)
    assert np.allclose(r, np.outer(a, a.conj()), atol=1e-12)
    assert np.linalg.matrix_rank(r, tol=1e-9) == 1
    assert np.trace(r).real == pytest.approx(4)


def test_correlation_k_zero_rejected():
    with pytest.raises(ValueError):
        correlation_matrix(geom_from(0.5), RicianParams(0, 4))


def test_spread_kernel_scalar_oracle():
    # M = 2, theta = 0 (sin_az = 0), phi = pi/4
    cos_el = math.cos(math.pi / 4)
    b = spread_kernel(cos_el, 0.0, 2, 0.05)
    assert b[0, 1] == pytest.approx(b_entry(0, 1, cos_el, 1.0, 0.05), rel=1e-14)
    assert b[0, 1] == pytest.approx(0.88528289, rel=1e-7)  # frozen from the scalar oracle
    r = correlation_matrix(LosGeometry(1000, cos_el, 0, 0.0, 0.0), RicianParams(10, 2, 0.05))
    assert abs(r[0, 1]) == pytest.approx(b_entry(0, 1, cos_el, 1.0, 0.05), rel=1e-12)


def test_spread_kernel_matches_scalar_everywhere(rng):
    for _ in range(20):
        cos_el, sin_az, s2 = rng.uniform(0, 1), rng.uniform(-1, 1), rng.uniform(0, 0.2)
        b = spread_kernel(cos_el, sin_az, 5, s2)
        for k in range(5):
            for l in range(5):
                assert b[k, l] == pytest.approx(b_entry(k, l, cos_el, 1 - sin_az**2, s2), rel=1e-12)


@settings(max_examples=200)
@given(st.integers(0, 2**32 - 1), st.floats(0, 0.2), st.integers(1, 8))
def test_correlation_trace_hermitian_psd(seed, s2, m):
    rng = np.random.default_rng(seed)
    g = random_geom(rng)
    r = correlation_matrix(g, RicianParams(10, m, s2))
    assert np.trace(r).real == pytest.approx(m, rel=1e-9)
    assert np.allclose(r, r.conj().T, atol=1e-14)
    assert np.linalg.eigvalsh(r).min() >= -1e-12


def test_clamp_psd_removes_negative_eigenvalues():
    m = np.array([[1.0, 2.0], [2.0, 1.0]])
    c = clamp_psd(m)
    assert np.linalg.eigvalsh(c).min() >= -1e-14
    assert np.trace(c) == pytest.approx(2.0)
    assert np.allclose(c, [[1.0, 1.0], [1.0, 1.0]])
    batch = np.stack([m, np.eye(2)])
    assert np.allclose(clamp_psd(batch)[1], np.eye(2))


def test_dirichlet_examples():
    assert dirichlet_abs(0.0, 4) == 4
    assert dirichlet_abs(2 * math.pi / 4, 4) == pytest.approx(0, abs=1e-12)
    assert dirichlet_abs(math.pi / 3, 4) == pytest.approx(math.sqrt(3), rel=1e-12)
    assert dirichlet_abs(4 * math.pi, 3) == pytest.approx(3)
    assert dirichlet_abs(1e-9, 5) == pytest.approx(5)
    assert np.allclose(dirichlet_abs(np.linspace(-9, 9, 11), 1), 1)


@settings(max_examples=200)
@given(st.integers(0, 2**32 - 1), st.integers(1, 8), st.floats(0.1, 1e4))
def test_dirichlet_matches_inner_product(seed, m, k):
    rng = np.random.default_rng(seed)
    gi, gj = random_geom(rng), random_geom(rng)
    p = RicianParams(k, m)
    direct = abs(np.vdot(los_vector(gi, p), los_vector(gj, p))) * (1 + k) / k
    assert los_correlation(gi, gj, m) == pytest.approx(direct, rel=1e-9, abs=1e-9)


def test_apply_pathloss():
    h = np.array([1 + 0j, 2j])
    assert np.array_equal(apply_pathloss(h, 1.0, RicianParams(10, 2)), h)
    assert np.allclose(apply_pathloss(h, 1000, RicianParams(10, 2)), h * 1e-3)
    assert apply_pathloss(np.array([1 + 0j]), 10, RicianParams(10, 1, path_loss_exp=2))[0] == pytest.approx(0.01)
    with pytest.raises(ValueError):
        apply_pathloss(h, 0.0, RicianParams(10, 2))


def test_sample_moments(rng):
    g = random_geom(rng)
    p = RicianParams(10, 4, 0.05)
    n = 100_000
    h = sample_channel(g, p, rng, size=n)
    hbar = los_vector(g, p)
    # mean -> hbar, per-entry 3-sigma band (scatter variance 1/(K+1) per entry)
    se = math.sqrt(p.scatter_power / n)
    assert np.all(np.abs(h.mean(axis=0) - hbar) < 3 * math.sqrt(2) * se)
    # ||h'||^2 -> M
    norms = np.sum(np.abs(h) ** 2, axis=1)
    assert abs(norms.mean() - 4) < 3 * norms.std() / math.sqrt(n)
    # second moment -> hbar hbar^H + R/(K+1)
    second = h.T @ h.conj() / n
    expect = np.outer(hbar, hbar.conj()) + p.scatter_power * correlation_matrix(g, p)
    assert np.abs(second - expect).max() < 0.01


def test_sample_rank_one_mean(rng):
    g = random_geom(rng)
    p = RicianParams(10, 4, 0.0)
    h = sample_channel(g, p, rng, size=100_000)
    assert np.abs(h.mean(axis=0) - los_vector(g, p)).max() < 3 * math.sqrt(2 * p.scatter_power / 1e5)


def test_sample_large_k_and_infinite(rng):
    g = random_geom(rng)
    h = sample_channel(g, RicianParams(1e6, 4), rng)
    hbar = los_vector(g, RicianParams(1e6, 4))
    assert np.linalg.norm(h - hbar) / np.linalg.norm(hbar) < 1e-2
    assert np.array_equal(sample_channel(g, RicianParams(math.inf, 4), rng), los_vector(g, RicianParams(math.inf, 4)))


def test_correlation_arrays_broadcast(rng):
    phase = rng.uniform(-3, 3, (3, 2))
    cos_el = rng.uniform(0, 1, (3, 2))
    sin_az = rng.uniform(-1, 1, (3, 2))
    r = correlation_arrays(phase, cos_el, sin_az, 4, 0.05)
    assert r.shape == (3, 2, 4, 4)
    one = correlation_arrays(phase[1, 0], cos_el[1, 0], sin_az[1, 0], 4, 0.05)
    assert np.allclose(r[1, 0], one)
