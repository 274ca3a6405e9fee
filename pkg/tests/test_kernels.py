import importlib
import os
import math

import numpy as np
import pytest

from uavheading import _pykernels, kernels
from uavheading.beamforming import LinkBudget, expected_sinr_lower_bound, sinr, bound_arrays
from uavheading.channel import RicianParams, complex_normal
from uavheading.geometry import GroundPosition, UavPose, los_arrays, los_geometry

ck = pytest.importorskip("uavheading._ckernels")


def test_backend_selected():
    want = "python" if os.environ.get("UAVSIM_BACKEND", "").lower() == "python" else "cython"
    assert kernels.BACKEND == want


def test_env_forces_python(monkeypatch):
    monkeypatch.setenv("UAVSIM_BACKEND", "python")
    mod = importlib.reload(kernels)
    try:
        assert mod.BACKEND == "python"
        assert mod.sinr_batch is _pykernels.sinr_batch
    finally:
        monkeypatch.delenv("UAVSIM_BACKEND")
        importlib.reload(kernels)


def test_sinr_batch_backends_agree(rng):
    h = complex_normal(rng, (300, 3, 4)) * 1e-2
    a = ck.sinr_batch(h, 10**4.5)
    b = _pykernels.sinr_batch(h, 10**4.5)
    assert np.allclose(a, b, rtol=1e-10, atol=0)


def test_sinr_batch_matches_scalar(rng):
    h = complex_normal(rng, (5, 3, 4))
    out = kernels.sinr_batch(h, 7.0)
    for s in range(5):
        for i in range(3):
            assert out[s, i] == pytest.approx(sinr(h[s], i, LinkBudget(7.0, 3)), rel=1e-10)


def test_jensen_backends_agree(rng):
    g, n, m = 50, 3, 4
    a = np.exp(1j * rng.uniform(-3, 3, (g, n, 1)) * np.arange(m))
    x = complex_normal(rng, (g, n, m, m))
    r = x @ np.swapaxes(x, -1, -2).conj()
    gain = rng.uniform(0.01, 5, (g, n))
    assert np.allclose(ck.jensen_bound_batch(a, r, gain, 10 / 11, 1 / 11),
                       _pykernels.jensen_bound_batch(a, r, gain, 10 / 11, 1 / 11), rtol=1e-10)


def test_bound_arrays_matches_scalar_bound(rng):
    p, b = RicianParams(10, 4, 0.05), LinkBudget(10**4.5, 3)
    uav = UavPose(10.0, -20.0, 350.0, 2.0)
    nx, ny = rng.uniform(-1500, 1500, (2, 3))
    d, c, _, s, ph = los_arrays(uav.x, uav.y, uav.h, uav.heading, nx[None], ny[None])
    batch = bound_arrays(d, ph, c, s, p, b)[0]
    geoms = [los_geometry(uav, GroundPosition(nx[k], ny[k])) for k in range(3)]
    for i in range(3):
        assert batch[i] == pytest.approx(expected_sinr_lower_bound(geoms, i, p, b), rel=1e-9)


def test_nan_on_non_pd():
    h = np.zeros((1, 1, 2), dtype=complex)
    # Q = I here, so the result is finite; a negative gain breaks positive definiteness
    a = np.ones((1, 2, 2), dtype=complex)
    r = np.zeros((1, 2, 2, 2), dtype=complex)
    gain = np.array([[-10.0, -10.0]])
    assert np.isnan(ck.jensen_bound_batch(a, r, gain, 1.0, 0.0)).all()
    assert np.isfinite(ck.sinr_batch(h, 1.0)).all()
