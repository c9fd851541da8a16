"""Physical and geometric parameters of the layered fluid.

Layers are numbered from the bottom, ``j = 1 .. n+1``, interfaces ``j = 1 .. n``.
All public functions take 1-based layer/interface indices to match the
mathematical notation; arrays are stored 0-based.
"""

from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

TOL_RES = 1e-9


class ConfigError(ValueError):
    """Raised when a configuration violates one of the model invariants."""


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class FluidStack:
    """Densities, Beltrami constants, rest heights and tensions of n+1 layers.

    ``rho``, ``alpha`` and ``d`` have length n+1 (``d`` holds d_1..d_{n+1},
    d_0 = 0 is implicit); ``sigma`` has length n.
    """

    n: int
    rho: np.ndarray
    alpha: np.ndarray
    d: np.ndarray
    sigma: np.ndarray
    g: float = 9.81

    def __post_init__(self):
        object.__setattr__(self, "rho", _frozen(self.rho))
        object.__setattr__(self, "alpha", _frozen(self.alpha))
        object.__setattr__(self, "d", _frozen(self.d))
        object.__setattr__(self, "sigma", _frozen(self.sigma))
        object.__setattr__(self, "g", float(self.g))
        check_fluid_stack(self)

    @property
    def m(self) -> int:
        """Number of active layers: n+1 if the top layer has mass, else n."""
        return self.n + 1 if self.rho[-1] > 0 else self.n

    def density(self, j: int) -> float:
        """rho_j, with rho_j = 0 above the top layer."""
        return float(self.rho[j - 1]) if 1 <= j <= self.n + 1 else 0.0

    def beltrami(self, j: int) -> float:
        return float(self.alpha[j - 1]) if 1 <= j <= self.n + 1 else 0.0

    def depth(self, j: int) -> float:
        """d_j for j = 0 .. n+1."""
        return 0.0 if j == 0 else float(self.d[j - 1])

    def thickness(self, j: int) -> float:
        return self.depth(j) - self.depth(j - 1)

    def tension(self, j: int) -> float:
        return float(self.sigma[j - 1])

    def density_jump(self, j: int) -> float:
        return self.density(j) - self.density(j + 1)

    def replace(self, **changes) -> "FluidStack":
        values = dict(n=self.n, rho=self.rho, alpha=self.alpha, d=self.d,
                      sigma=self.sigma, g=self.g)
        values.update(changes)
        return FluidStack(**values)

    def to_dict(self) -> dict:
        return {"n": self.n, "g": self.g, "rho": self.rho.tolist(),
                "alpha": self.alpha.tolist(), "d": self.d.tolist(),
                "sigma": self.sigma.tolist()}


def check_fluid_stack(fs: FluidStack) -> None:
    """Validate shapes and the ordering/positivity invariants of a stack."""
    n = fs.n
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ConfigError(f"n must be a positive integer, got {n!r}")
    for name, arr, size in (("rho", fs.rho, n + 1), ("alpha", fs.alpha, n + 1),
                            ("d", fs.d, n + 1), ("sigma", fs.sigma, n)):
        if arr.shape != (size,):
            raise ConfigError(f"{name} must have {size} entries, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ConfigError(f"{name} contains non-finite values")
    if not (math.isfinite(fs.g) and fs.g > 0):
        raise ConfigError(f"g must be positive, got {fs.g}")
    drho = np.diff(fs.rho)
    if np.any(drho >= 0):
        j = int(np.argmax(drho >= 0)) + 1
        raise ConfigError(f"rho not strictly decreasing: rho_{j} <= rho_{j + 1}")
    if fs.rho[-1] < 0:
        raise ConfigError(f"rho_{n + 1} must be non-negative")
    heights = np.diff(np.r_[0.0, fs.d])
    if np.any(heights <= 0):
        j = int(np.argmax(heights <= 0)) + 1
        raise ConfigError(f"d not strictly increasing: layer {j} has thickness <= 0")
    if np.any(fs.sigma <= 0):
        j = int(np.argmax(fs.sigma <= 0)) + 1
        raise ConfigError(f"sigma_{j} must be positive")


def _polar(vec) -> tuple[float, float]:
    return float(math.hypot(vec[0], vec[1])), float(math.atan2(vec[1], vec[0]))


def _rotation(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class Lattice:
    """Period lattice and its dual, stored in the canonical frame.

    The canonical frame has gamma1 = 0 and 0 < gamma2 < pi.  It is reached from
    the input frame by a rotation through ``rotation`` and, if ``flipped``, by
    replacing the second generator pair with its negative.
    """

    lambda1: np.ndarray
    lambda2: np.ndarray
    rotation: float = 0.0
    flipped: bool = False
    k1: np.ndarray = field(init=False)
    k2: np.ndarray = field(init=False)

    def __post_init__(self):
        l1 = np.asarray(self.lambda1, dtype=float)
        l2 = np.asarray(self.lambda2, dtype=float)
        if l1.shape != (2,) or l2.shape != (2,):
            raise ConfigError("lattice generators must be plane vectors")
        det = l1[0] * l2[1] - l1[1] * l2[0]
        if abs(det) <= 1e-14 * np.linalg.norm(l1) * np.linalg.norm(l2):
            raise ConfigError("lattice generators dependent")
        dual = 2 * np.pi * np.linalg.inv(np.column_stack([l1, l2])).T
        object.__setattr__(self, "lambda1", _frozen(l1))
        object.__setattr__(self, "lambda2", _frozen(l2))
        object.__setattr__(self, "k1", _frozen(dual[:, 0]))
        object.__setattr__(self, "k2", _frozen(dual[:, 1]))

    @classmethod
    def canonical(cls, lambda1, lambda2) -> "Lattice":
        """Rotate so k1 points along x and flip k2 (and lambda2) into the upper half plane."""
        raw = cls(lambda1, lambda2)
        _, g1 = _polar(raw.k1)
        rot = _rotation(-g1)
        l1 = rot @ raw.lambda1
        l2 = rot @ raw.lambda2
        k2 = rot @ raw.k2
        flipped = bool(math.atan2(k2[1], k2[0]) < 0)
        if flipped:
            l2 = -l2
        lat = cls(l1, l2, rotation=-g1, flipped=flipped)
        # exact zero for the rotated k1 angle
        k1 = lat.k1.copy()
        k1[1] = 0.0
        object.__setattr__(lat, "k1", _frozen(k1))
        return lat

    @property
    def kmag1(self) -> float:
        return float(np.hypot(*self.k1))

    @property
    def kmag2(self) -> float:
        return float(np.hypot(*self.k2))

    @property
    def gamma1(self) -> float:
        return float(math.atan2(self.k1[1], self.k1[0]))

    @property
    def gamma2(self) -> float:
        return float(math.atan2(self.k2[1], self.k2[0]))

    @property
    def cell_area(self) -> float:
        """|Gamma| = |det(lambda1, lambda2)|."""
        return float(abs(self.lambda1[0] * self.lambda2[1] - self.lambda1[1] * self.lambda2[0]))

    @property
    def dual_basis(self) -> np.ndarray:
        """2x2 matrix with columns k1, k2."""
        return np.column_stack([self.k1, self.k2])

    def is_symmetric(self, rtol: float = 1e-12) -> bool:
        a, b = np.linalg.norm(self.lambda1), np.linalg.norm(self.lambda2)
        return bool(abs(a - b) <= rtol * max(a, b))

    def is_non_degenerate(self, rtol: float = 1e-12) -> bool:
        """No lattice vector other than +-lambda1, +-lambda2 has length |lambda1|."""
        basis = np.column_stack([self.lambda1, self.lambda2])
        target = float(np.linalg.norm(self.lambda1))
        pts = _enumerate(basis, target * (1 + 10 * rtol))
        for m1, m2, norm in pts:
            if (abs(m1), abs(m2)) in ((1, 0), (0, 1)) and m1 * m2 == 0:
                continue
            if abs(norm - target) <= rtol * target:
                return False
        return True

    def to_dict(self) -> dict:
        return {"lambda1": self.lambda1.tolist(), "lambda2": self.lambda2.tolist(),
                "rotation": self.rotation, "flipped": self.flipped}


@dataclass(frozen=True)
class DualPoint:
    m1: int
    m2: int
    k: np.ndarray
    kmag: float
    gamma: float


def _enumerate(basis: np.ndarray, radius: float):
    smin = np.linalg.svd(basis, compute_uv=False)[-1]
    bound = int(math.ceil(radius / smin))
    rng = np.arange(-bound, bound + 1)
    m1, m2 = np.meshgrid(rng, rng, indexing="ij")
    m1, m2 = m1.ravel(), m2.ravel()
    vecs = basis @ np.vstack([m1, m2])
    norms = np.hypot(vecs[0], vecs[1])
    keep = (norms > 0) & (norms <= radius)
    order = np.lexsort((m2[keep], m1[keep], norms[keep]))
    return [(int(a), int(b), float(c)) for a, b, c in
            zip(m1[keep][order], m2[keep][order], norms[keep][order])]


def dual_lattice_array(lat: Lattice, radius: float) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised form of :func:`dual_lattice_points`: integer pairs (N, 2) and vectors (N, 2)."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    found = _enumerate(lat.dual_basis, radius)
    m = np.array([(a, b) for a, b, _ in found], dtype=int).reshape(-1, 2)
    return m, m @ lat.dual_basis.T


def dual_lattice_points(lat: Lattice, radius: float) -> list[DualPoint]:
    """All nonzero dual vectors with |k| <= radius, sorted by (|k|, m1, m2)."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    basis = lat.dual_basis
    out = []
    for m1, m2, _ in _enumerate(basis, radius):
        k = basis @ np.array([m1, m2], dtype=float)
        kmag, gamma = _polar(k)
        out.append(DualPoint(m1, m2, k, kmag, gamma))
    return out


@dataclass
class ResonanceReport:
    ok: bool
    violations: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "violations": self.violations, "warnings": self.warnings}


def check_non_resonance(fs: FluidStack, lat: Lattice, tol: float = TOL_RES) -> ResonanceReport:
    """Test sqrt(alpha_j^2 - |k|^2) h_j / pi against the positive integers.

    Every active layer is checked for each dual vector with |k| < |alpha_j|,
    including k = 0 whenever alpha_j != 0.  A violation is a distance to the
    nearest positive integer below ``tol`` (relative); distances below
    ``10 * tol`` are reported as warnings.
    """
    report = ResonanceReport(ok=True)
    for j in range(1, fs.m + 1):
        a = abs(fs.beltrami(j))
        if a == 0:
            continue
        h = fs.thickness(j)
        candidates = [(0, 0, 0.0)]
        candidates += [(p.m1, p.m2, p.kmag) for p in dual_lattice_points(lat, a) if p.kmag < a]
        for m1, m2, kmag in candidates:
            x = math.sqrt(a * a - kmag * kmag) * h / math.pi
            nearest = round(x)
            if nearest < 1:
                continue
            dist = abs(x - nearest) / max(1.0, x)
            entry = {"layer": j, "m": [m1, m2], "kmag": kmag, "value": x}
            if dist < tol:
                report.ok = False
                report.violations.append(entry)
            elif dist < 10 * tol:
                report.warnings.append(entry)
    return report


@dataclass(frozen=True)
class Config:
    """A validated fluid stack together with its canonical lattice."""

    fluid: FluidStack
    lattice: Lattice

    def to_dict(self) -> dict:
        return {**self.fluid.to_dict(), "lattice": self.lattice.to_dict()}

    def digest(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()


def config_from_dict(data: dict) -> Config:
    try:
        n = data["n"]
        fs = FluidStack(n=int(n), rho=data["rho"], alpha=data["alpha"], d=data["d"],
                        sigma=data["sigma"], g=data["g"])
        lat = data["lattice"]
        lattice = Lattice.canonical(lat["lambda1"], lat["lambda2"])
    except KeyError as exc:
        raise ConfigError(f"missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    if int(n) != n:
        raise ConfigError("n must be an integer")
    report = check_non_resonance(fs, lattice)
    for w in report.warnings:
        warnings.warn(f"near resonance in layer {w['layer']} at m={w['m']}")
    return Config(fs, lattice)


def load_config(path) -> Config:
    """Read and validate a JSON configuration file."""
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    return config_from_dict(data)
