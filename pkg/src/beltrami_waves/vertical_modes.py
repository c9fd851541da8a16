"""Vertical mode functions of the linearised interior problem.

For a layer of thickness h and wavenumber |k|, psi solves

    psi'' = (|k|^2 - alpha^2) psi,   psi(d_{j-1}) = 0,  psi(d_j) = 1,

and phi is its mirror image (phi(d_{j-1}) = 1, phi(d_j) = 0).  With
s = (|k|^2 - alpha^2) h^2 and t = (z - d_{j-1}) / h both functions are written
through the entire functions

    S(x) = sum x^n / (2n+1)!   (= sinh(sqrt x)/sqrt x)
    Cs(x) = sum x^n / (2n)!    (= cosh(sqrt x)),

namely psi = t S(s t^2) / S(s) and psi' = Cs(s t^2) / (h S(s)).  This form has
no singularity at |k| = |alpha|.
"""

from __future__ import annotations

import math

import numpy as np

from .config import FluidStack

SERIES_CUTOFF = 1e-4
SERIES_TERMS = 6
RESONANCE_TOL = 1e-12

_S_COEF = np.array([1.0 / math.factorial(2 * i + 1) for i in range(SERIES_TERMS)])
_C_COEF = np.array([1.0 / math.factorial(2 * i) for i in range(SERIES_TERMS)])


class ResonanceError(ArithmeticError):
    """The boundary-value problem for the vertical modes is not uniquely solvable."""


def _horner(coef, x):
    acc = np.zeros_like(x) + coef[-1]
    for c in coef[-2::-1]:
        acc = acc * x + c
    return acc


def _unit_mode(s: float, t):
    """(psi, h * psi') on the unit interval for parameter s; t may be complex."""
    t = np.asarray(t)
    if abs(s) < SERIES_CUTOFF:
        x = s * t * t
        denom = _horner(_S_COEF, s)
        return t * _horner(_S_COEF, x) / denom, _horner(_C_COEF, x) / denom
    if s > 0:
        a = math.sqrt(s)
        # sinh(a t)/sinh(a) written to avoid overflow for large a
        den = -math.expm1(-2 * a)
        lead = np.exp(a * (t - 1))
        e2 = np.exp(-2 * a * t)
        return lead * (1 - e2) / den, a * lead * (1 + e2) / den
    b = math.sqrt(-s)
    sb = math.sin(b)
    if abs(sb) < RESONANCE_TOL:
        raise ResonanceError(f"sin(sqrt(-s)) = {sb:.3e} at s = {s!r}")
    return np.sin(b * t) / sb, b * np.cos(b * t) / sb


def unit_slopes(s) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised (h psi'(d_j), h psi'(d_{j-1}), resonant) for an array of parameters s.

    Entries with |sin sqrt(-s)| below the resonance tolerance are flagged in
    the boolean third output and their slopes set to NaN.
    """
    s = np.asarray(s, dtype=float)
    top = np.empty_like(s)
    bottom = np.empty_like(s)
    small = np.abs(s) < SERIES_CUTOFF
    pos = s >= SERIES_CUTOFF
    neg = s <= -SERIES_CUTOFF
    den = _horner(_S_COEF, s[small])
    top[small] = _horner(_C_COEF, s[small]) / den
    bottom[small] = 1 / den
    a = np.sqrt(s[pos])
    e = np.exp(-2 * a)
    top[pos] = a * (1 + e) / -np.expm1(-2 * a)
    bottom[pos] = 2 * a * np.sqrt(e) / -np.expm1(-2 * a)
    b = np.sqrt(-s[neg])
    sb = np.sin(b)
    top[neg] = b * np.cos(b) / sb
    bottom[neg] = b / sb
    resonant = np.zeros(s.shape, dtype=bool)
    resonant[neg] = np.abs(sb) < RESONANCE_TOL
    top[resonant] = np.nan
    bottom[resonant] = np.nan
    return top, bottom, resonant


def mode_parameter(fs: FluidStack, j: int, kmag: float) -> float:
    """s = (|k|^2 - alpha_j^2) h_j^2."""
    h = fs.thickness(j)
    return (kmag * kmag - fs.beltrami(j) ** 2) * h * h


def _layer(fs: FluidStack, j: int):
    if not 1 <= j <= fs.n + 1:
        raise ValueError(f"layer index {j} outside 1..{fs.n + 1}")
    return fs.depth(j - 1), fs.thickness(j)


def psi(fs: FluidStack, j: int, kmag: float, z):
    """psi_j(z, k); accepts real or complex ``z``."""
    lo, h = _layer(fs, j)
    val, _ = _unit_mode(mode_parameter(fs, j, kmag), (np.asarray(z) - lo) / h)
    return val


def psi_prime(fs: FluidStack, j: int, kmag: float, z):
    lo, h = _layer(fs, j)
    _, der = _unit_mode(mode_parameter(fs, j, kmag), (np.asarray(z) - lo) / h)
    return der / h


def phi(fs: FluidStack, j: int, kmag: float, z):
    """phi_j(z, k) = psi_j(d_j + d_{j-1} - z, k)."""
    lo, h = _layer(fs, j)
    return psi(fs, j, kmag, 2 * lo + h - np.asarray(z))


def phi_prime(fs: FluidStack, j: int, kmag: float, z):
    lo, h = _layer(fs, j)
    return -psi_prime(fs, j, kmag, 2 * lo + h - np.asarray(z))


def boundary_slopes(fs: FluidStack, j: int, kmag: float) -> tuple[float, float]:
    """(psi_j'(d_j), psi_j'(d_{j-1})) for layer j."""
    _, h = _layer(fs, j)
    top, bottom = _unit_mode(mode_parameter(fs, j, kmag), np.array([1.0, 0.0]))[1]
    return float(top) / h, float(bottom) / h
