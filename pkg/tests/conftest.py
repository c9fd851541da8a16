import math

import numpy as np
import pytest

from beltrami_waves.config import FluidStack, Lattice, check_non_resonance

CRITERIA: list[str] = []


def random_stack(rng, n, top_mass=None, alpha_scale=0.0, g=1.0):
    """A valid stack with moderately sized layers; ``top_mass`` None picks at random."""
    if top_mass is None:
        top_mass = bool(rng.integers(2))
    rho = np.sort(rng.uniform(1.0, 4.0, n))[::-1]
    rho = np.r_[rho, rng.uniform(0.2, 0.9) if top_mass else 0.0]
    d = np.cumsum(rng.uniform(0.5, 2.0, n + 1))
    sigma = rng.uniform(0.1, 1.5, n)
    alpha = alpha_scale * rng.uniform(-1, 1, n + 1)
    return FluidStack(n=n, rho=rho, alpha=alpha, d=d, sigma=sigma, g=g)


def random_lattice(rng):
    """Canonical lattice with generators of length 3..8 and a well separated angle."""
    l1 = rng.uniform(3, 8)
    ang = rng.uniform(0.35, math.pi - 0.35)
    l2 = rng.uniform(3, 8)
    return Lattice.canonical([l1, 0.0], [l2 * math.cos(ang), l2 * math.sin(ang)])


def random_resonance_free(rng, n, alpha_scale, **kw):
    while True:
        fs = random_stack(rng, n, alpha_scale=alpha_scale, **kw)
        lat = random_lattice(rng)
        if check_non_resonance(fs, lat).ok:
            return fs, lat


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def two_layer():
    fs = FluidStack(n=1, rho=[1.0, 0.0], alpha=[0.0, 0.0], d=[1.0, 2.0], sigma=[1.0], g=1.0)
    lat = Lattice.canonical([2 * math.pi, 0.0], [0.0, 2 * math.pi])
    return fs, lat


@pytest.fixture
def three_layer():
    fs = FluidStack(n=2, rho=[3.0, 2.0, 1.0], alpha=[0.3, -0.2, 0.1], d=[1.0, 2.0, 3.0],
                    sigma=[1.0, 1.0], g=1.0)
    lat = Lattice.canonical([2 * math.pi, 0.0], [1.0, 5.0])
    return fs, lat


@pytest.fixture
def criterion():
    """Record and print one PASS/FAIL line, then assert."""

    def record(number, name, value, tol, passed=None):
        ok = bool(value < tol) if passed is None else bool(passed)
        line = (f"CRITERION {number:>2} {'PASS' if ok else 'FAIL'}  {name}: "
                f"{value:.3e} (tolerance {tol:.0e})")
        CRITERIA.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERIA, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
