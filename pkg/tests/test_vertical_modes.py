import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from beltrami_waves.config import FluidStack
from beltrami_waves.vertical_modes import (
    SERIES_CUTOFF,
    ResonanceError,
    boundary_slopes,
    mode_parameter,
    phi,
    phi_prime,
    psi,
    psi_prime,
    unit_slopes,
)


def one_layer(alpha=0.0, h=1.0, lo=0.0):
    d = [lo + h, lo + h + 1] if lo == 0 else [lo, lo + h]
    return FluidStack(n=1, rho=[2, 1], alpha=[alpha, alpha], d=d, sigma=[1], g=1)


def test_boundary_values():
    fs = one_layer(0.7, 1.3)
    for k in (0.1, 0.7, 2.0, 30.0):
        assert psi(fs, 1, k, 0.0) == 0.0
        assert psi(fs, 1, k, 1.3) == pytest.approx(1.0, abs=1e-15)
        assert phi(fs, 1, k, 0.0) == pytest.approx(1.0, abs=1e-15)
        assert phi(fs, 1, k, 1.3) == pytest.approx(0.0, abs=1e-15)


def test_linear_middle_case():
    fs = one_layer(0.5, 2.0)
    assert mode_parameter(fs, 1, 0.5) == 0.0
    assert psi(fs, 1, 0.5, 1.0) == pytest.approx(0.5, abs=1e-15)
    assert psi_prime(fs, 1, 0.5, 1.0) == pytest.approx(0.5, abs=1e-15)


def test_irrotational_closed_forms():
    fs = one_layer(0.0, 1.0)
    top, bottom = boundary_slopes(fs, 1, 1.0)
    assert top == pytest.approx(1 / math.tanh(1), rel=1e-15)
    assert bottom == pytest.approx(1 / math.sinh(1), rel=1e-15)
    assert float(phi_prime(fs, 1, 1.0, 0.0)) == pytest.approx(-1 / math.tanh(1), rel=1e-15)


def test_continuity_across_alpha():
    fs = one_layer(1.2, 0.9)
    z = np.linspace(0, 0.9, 7)
    base_psi, base_dpsi = psi(fs, 1, 1.2, z), psi_prime(fs, 1, 1.2, z)
    for s in (1e-10, -1e-10):
        k = math.sqrt(1.2**2 + s / 0.9**2)
        np.testing.assert_allclose(psi(fs, 1, k, z), base_psi, atol=1e-8)
        np.testing.assert_allclose(psi_prime(fs, 1, k, z), base_dpsi, atol=1e-8)


@pytest.mark.parametrize("s", [SERIES_CUTOFF, -SERIES_CUTOFF])
def test_continuity_at_series_cutoff(s):
    fs = one_layer(1.0, 1.0)
    z = np.linspace(0, 1, 9)
    ka = math.sqrt(1 + s * (1 - 1e-12))
    kb = math.sqrt(1 + s * (1 + 1e-12))
    np.testing.assert_allclose(psi(fs, 1, ka, z), psi(fs, 1, kb, z), rtol=1e-13, atol=1e-15)
    np.testing.assert_allclose(psi_prime(fs, 1, ka, z), psi_prime(fs, 1, kb, z), rtol=1e-13)


@settings(max_examples=80, deadline=None)
@given(st.floats(0, 3), st.floats(0.05, 5), st.floats(0.2, 2.5), st.floats(0.0, 1.0))
def test_ode_by_complex_step(alpha, k, h, t):
    fs = one_layer(alpha, h, lo=0.4)
    try:
        psi(fs, 1, k, 0.4)
    except ResonanceError:
        return
    z = 0.4 + t * h + 1e-20j
    d1 = psi(fs, 1, k, z).imag / 1e-20
    d2 = psi_prime(fs, 1, k, z).imag / 1e-20
    val = psi(fs, 1, k, z.real)
    scale = max(1.0, abs(float(psi_prime(fs, 1, k, z.real)))) * (1 + k * k + alpha * alpha)
    assert abs(d1 - psi_prime(fs, 1, k, z.real)) < 1e-10 * scale
    assert abs(d2 - (k * k - alpha * alpha) * val) < 1e-10 * scale


def test_large_wavenumber_no_overflow():
    fs = one_layer(0.0, 5.0)
    z = np.linspace(0, 5, 11)
    vals = psi(fs, 1, 400.0, z)
    assert np.all(np.isfinite(vals))
    assert vals[-1] == pytest.approx(1.0)
    top, bottom = boundary_slopes(fs, 1, 400.0)
    assert top == pytest.approx(400.0) and bottom == 0.0


def test_resonance_raises():
    # sqrt(alpha^2 - k^2) h = pi exactly
    fs = one_layer(math.pi, 1.0)
    with pytest.raises(ResonanceError):
        psi(fs, 1, 0.0, 0.5)


def test_mirror_identity():
    fs = FluidStack(n=2, rho=[3, 2, 1], alpha=[0.3, 2.0, -1.0], d=[1, 2.5, 3], sigma=[1, 1])
    z = np.linspace(1, 2.5, 5)
    for k in (0.5, 2.0, 3.5):
        np.testing.assert_allclose(phi(fs, 2, k, z), psi(fs, 2, k, 3.5 - z), atol=1e-15)
        np.testing.assert_allclose(phi_prime(fs, 2, k, z), -psi_prime(fs, 2, k, 3.5 - z), atol=1e-14)


def test_unit_slopes_vectorised():
    s = np.array([-30.0, -5.0, -1e-5, 0.0, 1e-5, 2.0, 1e4])
    top, bottom, res = unit_slopes(s)
    assert not res.any()
    for si, t, b in zip(s, top, bottom):
        fs = one_layer(0.0, 1.0)
        k = math.sqrt(si) if si >= 0 else None
        if k is None:
            fs = one_layer(math.sqrt(-si), 1.0)
            k = 0.0
        ref = boundary_slopes(fs, 1, k)
        assert t == pytest.approx(ref[0], rel=1e-13) and b == pytest.approx(ref[1], rel=1e-13, abs=1e-300)
    _, _, res = unit_slopes(np.array([-math.pi**2]))
    assert res[0]
