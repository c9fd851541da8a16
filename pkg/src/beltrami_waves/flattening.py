"""Explicit pieces of the change of variables to flat layers.

Layer j with perturbed interfaces d_{j-1} + eta_{j-1} and d_j + eta_j is mapped
onto the flat slab d_{j-1} < z < d_j by the column-wise affine map

    phi_j(z) = (1 + (eta_j - eta_{j-1})/h_j) z + (d_j eta_{j-1} - d_{j-1} eta_j)/h_j.

The bottom (eta_0) and the lid (eta_{n+1}) are held flat.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import FluidStack, Lattice
from .trivial_flows import Tau, trivial_velocity, trivial_velocity_derivative


class InterfaceCrossingError(ValueError):
    """Raised when neighbouring interfaces touch or cross."""


@dataclass(frozen=True)
class InterfaceGrid:
    """Interface samples on a uniform periodic grid over one period cell.

    Sample (a, b) sits at ``(a / Na) lambda1 + (b / Nb) lambda2``.  ``eta`` has
    shape (n, Na, Nb) and ``grad`` shape (n, 2, Na, Nb).
    """

    lattice: Lattice
    eta: np.ndarray
    grad: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.eta.shape[1:]

    @property
    def n(self) -> int:
        return self.eta.shape[0]

    @property
    def cell_area(self) -> float:
        return self.lattice.cell_area

    def points(self) -> np.ndarray:
        """Physical (x, y) coordinates of the samples, shape (2, Na, Nb)."""
        na, nb = self.shape
        a, b = np.meshgrid(np.arange(na) / na, np.arange(nb) / nb, indexing="ij")
        return (np.multiply.outer(self.lattice.lambda1, a)
                + np.multiply.outer(self.lattice.lambda2, b))

    @classmethod
    def from_modes(cls, lattice: Lattice, modes, shape=(64, 64)) -> "InterfaceGrid":
        """Sample eta = sum_i amp_i cos(k_i . x) for ``modes`` = [(k_i, amp_i), ...].

        Each ``amp_i`` is an n-vector of interface amplitudes.
        """
        modes = list(modes)
        if not modes:
            raise ValueError("at least one mode is needed to fix n")
        n = len(np.atleast_1d(modes[0][1]))
        tmp = cls(lattice, np.zeros((n,) + tuple(shape)), np.zeros((n, 2) + tuple(shape)))
        xy = tmp.points()
        eta = np.zeros((n,) + tuple(shape))
        grad = np.zeros((n, 2) + tuple(shape))
        for k, amp in modes:
            k = np.asarray(k, dtype=float)
            amp = np.asarray(amp, dtype=float)
            arg = k[0] * xy[0] + k[1] * xy[1]
            c, s = np.cos(arg), np.sin(arg)
            eta += amp[:, None, None] * c
            grad -= amp[:, None, None, None] * k[None, :, None, None] * s
        return cls(lattice, eta, grad)

    def check(self, fs: FluidStack) -> None:
        """Raise if some layer thickness becomes non-positive."""
        top = np.r_[fs.d[: self.n]][:, None, None] + self.eta
        levels = np.concatenate([np.zeros((1,) + self.shape), top,
                                 np.full((1,) + self.shape, fs.d[-1])])
        thick = np.diff(levels, axis=0)
        if np.any(thick <= 0):
            j = int(np.argmax(np.any(thick <= 0, axis=(1, 2)))) + 1
            raise InterfaceCrossingError(f"interfaces bounding layer {j} cross")

    def _fractional(self, x, y):
        inv = np.linalg.inv(np.column_stack([self.lattice.lambda1, self.lattice.lambda2]))
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        a = inv[0, 0] * x + inv[0, 1] * y
        b = inv[1, 0] * x + inv[1, 1] * y
        return a, b

    def _interp(self, field, x, y):
        """Periodic bilinear interpolation of ``field[..., Na, Nb]`` at (x, y)."""
        na, nb = self.shape
        a, b = self._fractional(x, y)
        fa, fb = (a * na) % na, (b * nb) % nb
        i0, j0 = np.floor(fa).astype(int), np.floor(fb).astype(int)
        wa, wb = fa - i0, fb - j0
        # (-tiny) % na rounds to na itself
        i0, j0 = i0 % na, j0 % nb
        i1, j1 = (i0 + 1) % na, (j0 + 1) % nb
        return ((1 - wa) * (1 - wb) * field[..., i0, j0] + wa * (1 - wb) * field[..., i1, j0]
                + (1 - wa) * wb * field[..., i0, j1] + wa * wb * field[..., i1, j1])

    def interface(self, j: int, x, y):
        """(eta_j, d_x eta_j, d_y eta_j) at (x, y); zero for j = 0 and j = n+1."""
        if j == 0 or j == self.n + 1:
            z = np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape)
            return z, z, z
        return (self._interp(self.eta[j - 1], x, y),
                self._interp(self.grad[j - 1, 0], x, y),
                self._interp(self.grad[j - 1, 1], x, y))

    def mean(self, values) -> float:
        """Trapezoidal (spectrally accurate) cell average of grid samples."""
        return float(np.mean(values))


def _layer_data(fs: FluidStack, grids: InterfaceGrid, j: int, x, y):
    lo, hi = fs.depth(j - 1), fs.depth(j)
    eb, ebx, eby = grids.interface(j - 1, x, y)
    et, etx, ety = grids.interface(j, x, y)
    return lo, hi, hi - lo, (eb, ebx, eby), (et, etx, ety)


def flatten_map(fs: FluidStack, grids: InterfaceGrid, j: int, x, y, z):
    """(phi_j, J_j) at reference points (x, y, z) of slab j."""
    lo, hi, h, (eb, _, _), (et, _, _) = _layer_data(fs, grids, j, x, y)
    J = 1 + (et - eb) / h
    if np.any(J <= 0):
        raise InterfaceCrossingError(f"J_{j} <= 0: interfaces of layer {j} cross")
    phi = J * z + (hi * eb - lo * et) / h
    return phi, J


def flatten_gradient(fs: FluidStack, grids: InterfaceGrid, j: int, x, y, z):
    """(d_x phi_j, d_y phi_j) at (x, y, z)."""
    lo, hi, h, (_, ebx, eby), (_, etx, ety) = _layer_data(fs, grids, j, x, y)
    z = np.asarray(z, dtype=float)
    return ((etx - ebx) / h * z + (hi * ebx - lo * etx) / h,
            (ety - eby) / h * z + (hi * eby - lo * ety) / h)


def corrector_field(fs: FluidStack, tau: Tau, grids: InterfaceGrid, j: int, x, y, z) -> np.ndarray:
    """u~^(j) at reference points; the vector index is the last axis.

    Components: ((J-1) U1 + alpha (phi - z) U2, (J-1) U2 - alpha (phi - z) U1,
    -d_x phi U1 - d_y phi U2) with U = U^(j)(z).
    """
    phi, J = flatten_map(fs, grids, j, x, y, z)
    px, py = flatten_gradient(fs, grids, j, x, y, z)
    z = np.broadcast_to(np.asarray(z, dtype=float), np.shape(phi))
    U = trivial_velocity(fs, tau, j, z)
    a = fs.beltrami(j)
    w = phi - z
    return np.stack([(J - 1) * U[..., 0] + a * w * U[..., 1],
                     (J - 1) * U[..., 1] - a * w * U[..., 0],
                     -px * U[..., 0] - py * U[..., 1]], axis=-1)


def _remainder(fs, tau, j, level, eta, comp):
    """U_comp(d + eta) - U_comp(d) - eta U_comp'(d) at interface height ``level``."""
    d = fs.depth(level)
    u = trivial_velocity(fs, tau, j, d + eta, check=False)[..., comp]
    u0 = trivial_velocity(fs, tau, j, d, check=False)[comp]
    du0 = trivial_velocity_derivative(fs, tau, j, d)[comp]
    return u - u0 - eta * du0


def defect_integrals(fs: FluidStack, tau: Tau, grids: InterfaceGrid, j: int) -> tuple[float, float]:
    """(I_1, I_2) for layer j from the closed form; (0, 0) when alpha_j = 0."""
    a = fs.beltrami(j)
    if a == 0:
        return 0.0, 0.0
    eb = grids.eta[j - 2] if j >= 2 else np.zeros(grids.shape)
    et = grids.eta[j - 1] if j <= grids.n else np.zeros(grids.shape)
    area = grids.cell_area
    i1 = -(area / a) * np.mean(_remainder(fs, tau, j, j, et, 1) - _remainder(fs, tau, j, j - 1, eb, 1))
    i2 = (area / a) * np.mean(_remainder(fs, tau, j, j, et, 0) - _remainder(fs, tau, j, j - 1, eb, 0))
    return float(i1), float(i2)


def defect_integrals_series(fs: FluidStack, tau: Tau, grids: InterfaceGrid, j: int,
                            terms: int = 6) -> tuple[float, float]:
    """The same integrals from the Taylor series sum_{n>=2} eta^n d_z^n U / n!."""
    a = fs.beltrami(j)
    if a == 0:
        return 0.0, 0.0
    eb = grids.eta[j - 2] if j >= 2 else np.zeros(grids.shape)
    et = grids.eta[j - 1] if j <= grids.n else np.zeros(grids.shape)
    s1 = np.zeros(grids.shape)
    s2 = np.zeros(grids.shape)
    for p in range(2, 2 + terms):
        top = trivial_velocity_derivative(fs, tau, j, fs.depth(j), p)
        bot = trivial_velocity_derivative(fs, tau, j, fs.depth(j - 1), p)
        f = math.factorial(p)
        s1 += (eb**p * bot[1] - et**p * top[1]) / f
        s2 += (et**p * top[0] - eb**p * bot[0]) / f
    area = grids.cell_area
    return float(area / a * np.mean(s1)), float(area / a * np.mean(s2))


def _coefficient_block(fs: FluidStack, j: int):
    a = fs.beltrami(j)
    lo, hi = fs.depth(j - 1), fs.depth(j)
    ds = math.sin(a * hi) - math.sin(a * lo)
    dc = math.cos(a * hi) - math.cos(a * lo)
    return a, ds, dc


def correction_system(fs: FluidStack, j: int, area: float) -> np.ndarray:
    """Forward map (c1, c2) -> (I1, I2): (|Gamma|/alpha) [[ds, -dc], [dc, ds]]."""
    a, ds, dc = _coefficient_block(fs, j)
    return area / a * np.array([[ds, -dc], [dc, ds]])


def correction_coeffs(fs: FluidStack, tau: Tau, j: int, I1: float, I2: float,
                      area: float) -> tuple[float, float]:
    """Laminar correction coefficients (c1, c2) that cancel the defect integrals."""
    a, ds, dc = _coefficient_block(fs, j)
    if a == 0:
        return 0.0, 0.0
    h = fs.thickness(j)
    den = 2 - 2 * math.cos(a * h)
    if abs(den) < 1e-14:
        raise ValueError(f"alpha_{j} h_{j} is a nonzero multiple of 2 pi")
    scale = a / area / den
    return scale * (ds * I1 + dc * I2), scale * (-dc * I1 + ds * I2)
