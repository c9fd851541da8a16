"""First-order waves at a bifurcation point.

For a Fourier mode k != 0 with interface amplitudes eta_hat, the linearised
interior field in layer j is W^(j)(z) e^{i k.x'} with

    W3 = i r |k| (eta_hat_{j-1} beta_{j-1} phi_j(z) + eta_hat_j beta_j psi_j(z)),
    W1 = i (k_x W3' + k_y alpha_j W3) / |k|^2,
    W2 = i (k_y W3' - k_x alpha_j W3) / |k|^2,

which is divergence free, satisfies curl W = alpha_j W and matches the
linearised kinematic condition W3(d_j) = U(d_j).grad eta_j at every interface.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import FluidStack, Lattice
from .flattening import InterfaceGrid
from .trivial_flows import Tau, bernoulli_pressure, interface_phases, trivial_velocity
from .vertical_modes import phi, phi_prime, psi, psi_prime

DEFAULT_SHAPE = (64, 64)
DEFAULT_NZ = 33
SLOPE_WARNING = 0.3
ETA_NORMALIZATION = "unit norm, first nonzero component positive"


class UnverifiedPointError(RuntimeError):
    """The bifurcation point has not passed verification."""


@dataclass
class ModeProfiles:
    """Vertical structure of one Fourier mode in every active layer."""

    fs: FluidStack
    tau: Tau
    k: np.ndarray
    eta_hat: np.ndarray
    z: list = field(default_factory=list)
    W: list = field(default_factory=list)

    @property
    def kmag(self) -> float:
        return float(np.hypot(*self.k))

    def _betas(self) -> np.ndarray:
        gamma = math.atan2(self.k[1], self.k[0])
        return np.cos(interface_phases(self.fs, self.tau.theta) - gamma)

    def evaluate(self, j: int, z) -> np.ndarray:
        """(W1, W2, W3)(z) in layer j, complex, vector index last."""
        z = np.asarray(z, dtype=float)
        kmag = self.kmag
        if kmag == 0:
            return np.zeros(z.shape + (3,), dtype=complex)
        fs = self.fs
        amp = np.r_[0.0, self.eta_hat, 0.0]
        b = np.r_[self._betas(), 0.0]
        lower = amp[j - 1] * b[j - 1]
        upper = amp[j] * b[j]
        pre = 1j * self.tau.r * kmag
        w3 = np.zeros(z.shape, dtype=complex)
        dw3 = np.zeros(z.shape, dtype=complex)
        if lower != 0:
            w3 += pre * lower * phi(fs, j, kmag, z)
            dw3 += pre * lower * phi_prime(fs, j, kmag, z)
        if upper != 0:
            w3 += pre * upper * psi(fs, j, kmag, z)
            dw3 += pre * upper * psi_prime(fs, j, kmag, z)
        a = fs.beltrami(j)
        kx, ky = self.k
        w1 = 1j * (kx * dw3 + ky * a * w3) / kmag**2
        w2 = 1j * (ky * dw3 - kx * a * w3) / kmag**2
        return np.stack([w1, w2, w3], axis=-1)

    def velocity(self, j: int, x, y, z) -> np.ndarray:
        """Real perturbation Re[W(z) e^{i k.x'}] at points (x, y, z)."""
        x, y, z = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, z)))
        phase = np.exp(1j * (self.k[0] * x + self.k[1] * y))
        return np.real(self.evaluate(j, z) * phase[..., None])


def solve_mode(fs: FluidStack, lat: Lattice, tau, k, eta_hat, nz: int = DEFAULT_NZ) -> ModeProfiles:
    """Linearised interior field of the mode ``k`` for amplitudes ``eta_hat``.

    Profiles are sampled on ``nz`` points per active layer; ``k = 0`` gives
    zero profiles.
    """
    tau = tau if isinstance(tau, Tau) else Tau(*tau)
    eta_hat = np.asarray(eta_hat, dtype=float)
    if eta_hat.shape != (fs.n,):
        raise ValueError(f"eta_hat must have {fs.n} entries")
    prof = ModeProfiles(fs=fs, tau=tau, k=np.asarray(k, dtype=float), eta_hat=eta_hat)
    for j in range(1, fs.m + 1):
        z = np.linspace(fs.depth(j - 1), fs.depth(j), nz)
        prof.z.append(z)
        prof.W.append(prof.evaluate(j, z))
    return prof


@dataclass
class WaveFieldSample:
    """First-order interfaces and velocity/pressure on a grid over one cell."""

    xy: np.ndarray
    eta: np.ndarray
    z: list
    u: list
    p: list
    t: tuple
    grid: InterfaceGrid
    modes: tuple
    metadata: dict

    @property
    def n(self) -> int:
        return self.eta.shape[0]


def assemble_first_order(fs: FluidStack, lat: Lattice, point, t1: float, t2: float,
                         shape=DEFAULT_SHAPE, nz: int = DEFAULT_NZ, force: bool = False,
                         config_hash: str | None = None) -> WaveFieldSample:
    """Sample eta = t1 eta1 cos(k1.x) + t2 eta2 cos(k2.x) and u = U + first-order field.

    ``u`` is the trivial flow plus t1 Re[W(k1) e^{i k1.x}] + t2 Re[W(k2) e^{i k2.x}]
    at the heights of a uniform grid in each layer, and ``p`` the Bernoulli
    pressure of that velocity at the same height.
    """
    report = getattr(point, "report", None)
    if not force and (report is None or not report.ok):
        raise UnverifiedPointError("bifurcation point is not verified; pass force=True to override")
    tau = point.tau_star
    modes = (solve_mode(fs, lat, tau, lat.k1, point.eta1, nz),
             solve_mode(fs, lat, tau, lat.k2, point.eta2, nz))
    grid = InterfaceGrid.from_modes(lat, [(lat.k1, t1 * point.eta1), (lat.k2, t2 * point.eta2)], shape)
    slope = float(np.max(np.hypot(grid.grad[:, 0], grid.grad[:, 1]))) if grid.eta.size else 0.0
    if slope > SLOPE_WARNING:
        warnings.warn(f"maximum interface slope {slope:.3f} exceeds {SLOPE_WARNING}; "
                      "first-order fields may be inaccurate")
    xy = grid.points()
    zs, us, ps = [], [], []
    for j in range(1, fs.m + 1):
        z = np.linspace(fs.depth(j - 1), fs.depth(j), nz)
        X = np.broadcast_to(xy[0][..., None], xy[0].shape + (nz,))
        Y = np.broadcast_to(xy[1][..., None], xy[1].shape + (nz,))
        Z = np.broadcast_to(z, X.shape)
        u = trivial_velocity(fs, tau, j, Z)
        for t, mode in zip((t1, t2), modes):
            if t != 0:
                u = u + t * mode.velocity(j, X, Y, Z)
        zs.append(z)
        us.append(u)
        ps.append(bernoulli_pressure(fs, tau, j, u, Z))
    meta = {
        "config_hash": config_hash,
        "r_star": tau.r, "theta_star": tau.theta,
        "iota": point.iota, "kappa": point.kappa,
        "t": [float(t1), float(t2)],
        "k1": list(map(float, lat.k1)), "k2": list(map(float, lat.k2)),
        "eta1": point.eta1.tolist(), "eta2": point.eta2.tolist(),
        "eta_normalization": ETA_NORMALIZATION,
        "verified": bool(report is not None and report.ok),
        "frame": "canonical lattice frame; z is the height inside each rest slab",
    }
    return WaveFieldSample(xy=xy, eta=grid.eta, z=zs, u=us, p=ps, t=(t1, t2), grid=grid,
                           modes=modes, metadata=meta)


def kinematic_residual(sample: WaveFieldSample, fs: FluidStack) -> float:
    """max |u3 - (U1 d_x eta_j + U2 d_y eta_j)| over all interfaces, both sides."""
    tau = Tau(sample.metadata["r_star"], sample.metadata["theta_star"])
    worst = 0.0
    xy = sample.xy
    t1, t2 = sample.t
    for j in range(1, fs.n + 1):
        U = trivial_velocity(fs, tau, j, fs.depth(j))
        target = U[0] * sample.grid.grad[j - 1, 0] + U[1] * sample.grid.grad[j - 1, 1]
        for layer in (j, j + 1):
            if layer > fs.m:
                continue
            u3 = sum(t * m.velocity(layer, xy[0], xy[1], fs.depth(j))[..., 2]
                     for t, m in zip((t1, t2), sample.modes))
            worst = max(worst, float(np.max(np.abs(u3 - target))))
    return worst


# ---------------------------------------------------------------------------
# export

ETA_FILE = "eta.csv"
VOLUME_FILE = "volume.csv"
META_FILE = "metadata.json"


def _write_rows(path: Path, header: list, rows: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join("%.17g" % v for v in row) + "\n")


def eta_table(sample: WaveFieldSample):
    header = ["x", "y"] + [f"eta_{j}" for j in range(1, sample.n + 1)]
    cols = [sample.xy[0].ravel(), sample.xy[1].ravel()] + [e.ravel() for e in sample.eta]
    return header, np.column_stack(cols) if cols[0].size else np.zeros((0, len(header)))


def volume_table(sample: WaveFieldSample):
    header = ["x", "y", "z", "layer", "u1", "u2", "u3", "p"]
    blocks = []
    for j, (z, u, p) in enumerate(zip(sample.z, sample.u, sample.p), start=1):
        X = np.broadcast_to(sample.xy[0][..., None], p.shape)
        Y = np.broadcast_to(sample.xy[1][..., None], p.shape)
        Z = np.broadcast_to(z, p.shape)
        blocks.append(np.column_stack([X.ravel(), Y.ravel(), Z.ravel(), np.full(p.size, j),
                                       u[..., 0].ravel(), u[..., 1].ravel(), u[..., 2].ravel(),
                                       p.ravel()]))
    return header, np.vstack(blocks) if blocks else np.zeros((0, len(header)))


def export_field(sample: WaveFieldSample, fmt: str, path) -> Path:
    """Write one representation of ``sample``: ``"eta"``, ``"volume"`` or ``"meta"``."""
    path = Path(path)
    if fmt == "eta":
        _write_rows(path, *eta_table(sample))
    elif fmt == "volume":
        _write_rows(path, *volume_table(sample))
    elif fmt == "meta":
        path.write_text(json.dumps(sample.metadata, indent=2, sort_keys=True) + "\n")
    else:
        raise ValueError(f"unknown export format {fmt!r}")
    return path


def read_table(path) -> tuple[list, np.ndarray]:
    """Read back a CSV written by :func:`export_field`."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    return header, np.array(rows).reshape(-1, len(header))
