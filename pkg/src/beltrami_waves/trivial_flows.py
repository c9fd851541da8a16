"""Laminar Beltrami flows with flat interfaces.

In layer j the trivial flow is the helical profile

    U^(j)(z) = r (cos(theta_j - alpha_j z), sin(theta_j - alpha_j z), 0),

and the phases theta_j are chained so that U is continuous across every
interface.  All angles below are measured in the canonical lattice frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import FluidStack

TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class Tau:
    """Bifurcation parameters: flow speed ``r`` and direction ``theta``."""

    r: float
    theta: float

    def __post_init__(self):
        r = float(self.r)
        if not (math.isfinite(r) and r >= 0):
            raise ValueError(f"r must be non-negative, got {self.r}")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "theta", float(self.theta) % TWO_PI)

    def as_array(self) -> np.ndarray:
        return np.array([self.r, self.theta])


@dataclass(frozen=True)
class PressureNormalization:
    """Bernoulli constants Q_j and hydrostatic offsets C_j (C_1 = 0)."""

    Q: np.ndarray
    C: np.ndarray


def _as_tau(tau) -> Tau:
    return tau if isinstance(tau, Tau) else Tau(*tau)


def theta_layers(fs: FluidStack, tau) -> np.ndarray:
    """Phases theta_1 .. theta_m of the trivial flow in each active layer."""
    tau = _as_tau(tau)
    out = np.empty(fs.n + 1)
    out[0] = tau.theta
    for j in range(1, fs.n + 1):
        # theta_{j+1} = theta_j - alpha_j d_j + alpha_{j+1} d_j
        out[j] = out[j - 1] + (fs.alpha[j] - fs.alpha[j - 1]) * fs.d[j - 1]
    return out[: fs.m]


def interface_phases(fs: FluidStack, theta) -> np.ndarray:
    """theta_j - alpha_j d_j for interfaces j = 0 .. n.

    This equals ``theta - sum_{i<=j} alpha_i h_i`` and is the direction of the
    trivial flow at height d_j.  ``theta`` may be an array, in which case the
    interface index is the last axis.
    """
    h = np.diff(np.r_[0.0, fs.d[:-1]])
    offsets = np.r_[0.0, np.cumsum(fs.alpha[:-1] * h)]
    return np.asarray(theta, dtype=float)[..., None] - offsets


def _check_layer(fs: FluidStack, j: int) -> None:
    if not 1 <= j <= fs.n + 1:
        raise ValueError(f"layer index {j} outside 1..{fs.n + 1}")


def trivial_velocity(fs: FluidStack, tau, j: int, z, check: bool = True) -> np.ndarray:
    """U^(j)(z); ``z`` may be an array, the vector index is the last axis."""
    tau = _as_tau(tau)
    _check_layer(fs, j)
    z = np.asarray(z, dtype=float)
    if check:
        lo, hi = fs.depth(j - 1), fs.depth(j)
        slack = 1e-12 * max(1.0, abs(hi))
        if np.any(z < lo - slack) or np.any(z > hi + slack):
            raise ValueError(f"z outside layer {j} [{lo}, {hi}]")
    theta_j = tau.theta + sum((fs.alpha[i] - fs.alpha[i - 1]) * fs.d[i - 1] for i in range(1, j))
    phase = theta_j - fs.alpha[j - 1] * z
    return tau.r * np.stack([np.cos(phase), np.sin(phase), np.zeros_like(phase)], axis=-1)


def trivial_velocity_derivative(fs: FluidStack, tau, j: int, z, order: int = 1) -> np.ndarray:
    """z-derivative of order ``order`` of the horizontal components (U1, U2)."""
    tau = _as_tau(tau)
    _check_layer(fs, j)
    a = fs.alpha[j - 1]
    theta_j = tau.theta + sum((fs.alpha[i] - fs.alpha[i - 1]) * fs.d[i - 1] for i in range(1, j))
    # d^k/dz^k cos(theta - a z) = a^k cos(theta - a z - k pi/2)
    phase = theta_j - a * np.asarray(z, dtype=float) - order * math.pi / 2
    return tau.r * a**order * np.stack([np.cos(phase), np.sin(phase)], axis=-1)


def beta(fs: FluidStack, tau, j: int, gamma: float) -> tuple[float, float]:
    """(beta_j, beta_j_perp) = (cos, sin)(theta_j - alpha_j d_j - gamma), j = 0..n."""
    tau = _as_tau(tau)
    if not 0 <= j <= fs.n:
        raise ValueError(f"interface index {j} outside 0..{fs.n}")
    phase = interface_phases(fs, tau.theta)[j] - gamma
    return math.cos(phase), math.sin(phase)


def pressure_normalization(fs: FluidStack, tau) -> PressureNormalization:
    tau = _as_tau(tau)
    C = np.zeros(fs.n + 1)
    for j in range(1, fs.n + 1):
        C[j] = C[j - 1] - fs.density_jump(j) * fs.g * fs.d[j - 1]
    Q = fs.rho * tau.r**2 / 2 + C
    return PressureNormalization(Q=Q[: fs.m], C=C[: fs.m])


def bernoulli_pressure(fs: FluidStack, tau, j: int, u, z) -> np.ndarray:
    """p = -rho_j (|u|^2 / 2 + g z) + Q_j; ``u`` has the vector on its last axis."""
    if not 1 <= j <= fs.m:
        raise ValueError(f"layer index {j} outside active layers 1..{fs.m}")
    norm = pressure_normalization(fs, tau)
    u = np.asarray(u, dtype=float)
    speed2 = np.sum(u * u, axis=-1)
    return -fs.rho[j - 1] * (speed2 / 2 + fs.g * np.asarray(z, dtype=float)) + norm.Q[j - 1]
