"""Search for and verification of bifurcation points tau* = (r*, theta*).

A point tau* is a bifurcation point when A(tau*, k1) and A(tau*, k2) are both
singular.  Writing A = Sigma + r^2 (C B C + C D S), a kernel vector of A(k)
corresponds to an eigenpair (mu, xi) of

    R(k, theta) = Sigma^{-1/2} (C B C + C D S) Sigma^{-1/2}

with mu = -1/r^2.  The search therefore tracks the eigencurves mu(k_i, theta)
over one period in theta and refines their intersections.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq, linear_sum_assignment, minimize_scalar

from .config import FluidStack, Lattice, dual_lattice_array, dual_lattice_points
from .dispersion import (
    ModeData,
    assemble,
    assemble_R,
    dA_dr,
    dA_dtheta,
    det_batch,
    det_tridiagonal,
    kernel,
    matrix_scale,
    mode_data,
)
from .trivial_flows import Tau
from .vertical_modes import ResonanceError, boundary_slopes

logger = logging.getLogger(__name__)

DEFAULT_GRID = 2048
REFINE_FACTOR = 8
TOL_DET = 1e-10
TOL_NU = 1e-10
TOL_KERNEL_RESIDUAL = 1e-9
NEWTON_TOL = 1e-11
NEWTON_MAXITER = 50

REASON_POSITIVE = "positive_mu"
REASON_TANGENCY = "tangency"
REASON_LOST = "lost_bracket"


# ---------------------------------------------------------------------------
# eigencurves


@dataclass
class EigencurveScan:
    """Tracked eigencurves of R(k1, theta) and R(k2, theta) on [0, pi].

    ``theta`` has N+1 entries, the last one being pi, so the arrays close the
    period.  ``mu[i]`` has shape (N+1, n); column l holds the curve with label
    l+1, and ``xi[i][:, :, l]`` the matching unit eigenvectors.
    """

    theta: np.ndarray
    mu: tuple
    xi: tuple
    data: tuple
    k: tuple
    crossings: list = field(default_factory=list)
    candidates: list = field(default_factory=list)

    @property
    def theta_grid(self) -> np.ndarray:
        return self.theta[:-1]

    @property
    def n(self) -> int:
        return self.mu[0].shape[1]

    @property
    def scale(self) -> float:
        return float(max(np.max(np.abs(self.mu[0])), np.max(np.abs(self.mu[1])), 1e-300))


@dataclass(frozen=True)
class Crossing:
    """A grid bracket [theta[index], theta[index+1]] where mu_iota(k1) - mu_kappa(k2) changes sign."""

    index: int
    iota: int
    kappa: int


def _track(mu: np.ndarray, xi: np.ndarray, start: int):
    """Relabel eigenpairs along the grid by maximal eigenvector overlap.

    At ``start`` the labels follow ascending eigenvalue order.  Reference vectors
    are only updated at points where the spectrum is well separated, so that
    degenerate points (for example R = 0) do not scramble the labels.
    """
    npts, n = mu.shape
    out_mu = np.empty_like(mu)
    out_xi = np.empty_like(xi)
    out_mu[start] = mu[start]
    out_xi[start] = xi[start]
    scale = max(np.max(np.abs(mu)), 1e-300)
    for path in (range(start + 1, npts), range(start - 1, -1, -1)):
        ref = xi[start].copy()
        for i in path:
            overlap = np.abs(ref.T @ xi[i])
            rows, cols = linear_sum_assignment(-overlap)
            perm = cols[np.argsort(rows)]
            vecs = xi[i][:, perm]
            signs = np.sign(np.sum(ref * vecs, axis=0))
            signs[signs == 0] = 1.0
            vecs = vecs * signs
            out_mu[i] = mu[i][perm]
            out_xi[i] = vecs
            vals = mu[i]
            gap = np.min(np.diff(vals)) if n > 1 else np.inf
            if np.max(np.abs(vals)) > 1e-8 * scale and gap > 1e-9 * scale:
                ref = vecs
    return out_mu, out_xi


def _reference_index(theta: np.ndarray, gamma: float) -> int:
    target = gamma % math.pi
    dist = np.abs((theta[:-1] - target + math.pi / 2) % math.pi - math.pi / 2)
    return int(np.argmin(dist))


def scan_eigencurves(fs: FluidStack, lat: Lattice, N: int = DEFAULT_GRID,
                     tangency_rtol: float = 1e-2) -> EigencurveScan:
    """Eigen-decompose R(k_i, theta) on a uniform grid and record all crossings."""
    if N < 64:
        raise ValueError("grid size N must be at least 64")
    theta = np.linspace(0.0, math.pi, N + 1)
    mus, xis, datas = [], [], []
    for k, gamma in ((lat.k1, lat.gamma1), (lat.k2, lat.gamma2)):
        data = mode_data(fs, float(np.hypot(*k)))
        R = assemble_R(fs, theta, k, data)
        try:
            mu, xi = np.linalg.eigh(R)
        except np.linalg.LinAlgError:
            for t, Ri in zip(theta, R):
                try:
                    np.linalg.eigh(Ri)
                except np.linalg.LinAlgError:
                    raise np.linalg.LinAlgError(f"eigen decomposition failed at theta={t!r}") from None
            raise
        mu, xi = _track(mu, xi, _reference_index(theta, gamma))
        mus.append(mu)
        xis.append(xi)
        datas.append(data)
    scan = EigencurveScan(theta=theta, mu=tuple(mus), xi=tuple(xis), data=tuple(datas),
                          k=(lat.k1, lat.k2))
    scale = scan.scale
    n = fs.n
    for iota in range(n):
        for kappa in range(n):
            dif = mus[0][:, iota] - mus[1][:, kappa]
            sgn = np.sign(dif)
            for i in np.flatnonzero(sgn[:-1] * sgn[1:] < 0):
                scan.crossings.append(Crossing(int(i), iota + 1, kappa + 1))
            for i in np.flatnonzero(sgn[:-1] == 0):
                scan.crossings.append(Crossing(int(i), iota + 1, kappa + 1))
            ad = np.abs(dif)
            for i in range(1, N):
                if sgn[i - 1] == sgn[i] == sgn[i + 1] != 0 and ad[i] <= ad[i - 1] \
                        and ad[i] <= ad[i + 1] and ad[i] < tangency_rtol * scale:
                    scan.candidates.append(Crossing(i, iota + 1, kappa + 1))
    scan.crossings.sort(key=lambda c: (c.iota, c.kappa, c.index))
    scan.candidates.sort(key=lambda c: (c.iota, c.kappa, c.index))
    return scan


def branch_eigenpair(fs: FluidStack, k, data: ModeData, theta: float, ref: np.ndarray):
    """Eigenpair of R(k, theta) whose vector best overlaps ``ref``."""
    R = assemble_R(fs, theta, k, data)
    mu, xi = np.linalg.eigh(R)
    overlaps = xi.T @ ref
    i = int(np.argmax(np.abs(overlaps)))
    vec = xi[:, i] if overlaps[i] >= 0 else -xi[:, i]
    return float(mu[i]), vec, float(abs(overlaps[i]))


# ---------------------------------------------------------------------------
# refinement


@dataclass
class Rejection:
    iota: int
    kappa: int
    theta: float
    reason: str
    detail: str
    mu: float | None = None

    def to_dict(self) -> dict:
        return {"iota": self.iota, "kappa": self.kappa, "theta": self.theta,
                "reason": self.reason, "detail": self.detail, "mu": self.mu}


@dataclass
class RefinedCrossing:
    iota: int
    kappa: int
    theta: float
    mu: float
    xi1: np.ndarray
    xi2: np.ndarray


def _difference(fs, scan, refs):
    def f(t):
        m1, _, _ = branch_eigenpair(fs, scan.k[0], scan.data[0], t, refs[0])
        m2, _, _ = branch_eigenpair(fs, scan.k[1], scan.data[1], t, refs[1])
        return m1 - m2
    return f


def _finish(fs, scan, refs, theta, iota, kappa, tol_mu):
    m1, v1, o1 = branch_eigenpair(fs, scan.k[0], scan.data[0], theta, refs[0])
    m2, v2, o2 = branch_eigenpair(fs, scan.k[1], scan.data[1], theta, refs[1])
    mu = 0.5 * (m1 + m2)
    theta = theta % math.pi
    if mu >= -tol_mu:
        return Rejection(iota, kappa, theta, REASON_POSITIVE,
                         "eigencurves intersect at mu >= 0, so no real r* exists", mu)
    return RefinedCrossing(iota, kappa, theta, mu, v1, v2)


def _local_rescan(fs, scan, c: Crossing):
    """Track both branches on an 8x finer grid around the bracket of ``c``."""
    lo = max(c.index - 1, 0)
    hi = min(c.index + 2, len(scan.theta) - 1)
    sub = np.linspace(scan.theta[lo], scan.theta[hi], REFINE_FACTOR * (hi - lo) + 1)
    out = []
    for side, label in ((0, c.iota), (1, c.kappa)):
        R = assemble_R(fs, sub, scan.k[side], scan.data[side])
        mu, xi = np.linalg.eigh(R)
        ref = scan.xi[side][lo][:, label - 1]
        overlap = np.abs(np.einsum("i,ij->j", ref, xi[0]))
        mu, xi = _track(mu, xi, 0)
        col = int(np.argmax(overlap))
        out.append((mu[:, col], xi[:, :, col]))
    return sub, out


def refine_crossing(fs: FluidStack, scan: EigencurveScan, c: Crossing,
                    tol_mu: float | None = None):
    """Refine a bracketed crossing to machine precision.

    Returns a :class:`RefinedCrossing`, or a :class:`Rejection` when the
    intersection lies at mu >= 0 or the bracket cannot be recovered.
    """
    tol_mu = 1e-12 * scan.scale if tol_mu is None else tol_mu
    i = c.index
    a, b = scan.theta[i], scan.theta[i + 1]
    refs = (scan.xi[0][i][:, c.iota - 1], scan.xi[1][i][:, c.kappa - 1])
    f = _difference(fs, scan, refs)
    fa, fb = f(a), f(b)
    if fa == 0:
        return _finish(fs, scan, refs, a, c.iota, c.kappa, tol_mu)
    if fa * fb < 0:
        t = brentq(f, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
        m1, _, o1 = branch_eigenpair(fs, scan.k[0], scan.data[0], t, refs[0])
        m2, _, o2 = branch_eigenpair(fs, scan.k[1], scan.data[1], t, refs[1])
        if min(o1, o2) > 0.5 and abs(m1 - m2) <= 1e-12 * (1 + abs(m1)) * max(1.0, scan.scale):
            return _finish(fs, scan, refs, t, c.iota, c.kappa, tol_mu)
    logger.debug("bracket lost at theta=%g for (%d,%d); rescanning", a, c.iota, c.kappa)
    sub, branches = _local_rescan(fs, scan, c)
    dif = branches[0][0] - branches[1][0]
    idx = np.flatnonzero(np.sign(dif[:-1]) * np.sign(dif[1:]) < 0)
    if idx.size == 0:
        return Rejection(c.iota, c.kappa, float(a), REASON_LOST,
                         "sign change not recovered on the refined grid")
    j = int(idx[np.argmin(np.abs(idx - REFINE_FACTOR * (i - max(i - 1, 0)) - REFINE_FACTOR // 2))])
    refs = (branches[0][1][j], branches[1][1][j])
    f = _difference(fs, scan, refs)
    lo, hi = sub[j], sub[j + 1]
    if f(lo) * f(hi) > 0:
        return Rejection(c.iota, c.kappa, float(lo), REASON_LOST,
                         "branch matching failed inside the refined bracket")
    t = brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    return _finish(fs, scan, refs, t, c.iota, c.kappa, tol_mu)


def refine_candidate(fs: FluidStack, scan: EigencurveScan, c: Crossing,
                     tol_mu: float | None = None) -> list:
    """Inspect a near-touching local minimum of |mu_iota(k1) - mu_kappa(k2)|.

    If the difference really changes sign between grid points the two
    crossings are refined; otherwise a tangency rejection is returned when the
    curves come within ``1e-8`` (relative) of each other, and nothing at all
    when they stay apart.
    """
    i = c.index
    a, b = scan.theta[i - 1], scan.theta[i + 1]
    refs = (scan.xi[0][i][:, c.iota - 1], scan.xi[1][i][:, c.kappa - 1])
    f = _difference(fs, scan, refs)
    sgn = 1.0 if f(scan.theta[i]) > 0 else -1.0
    res = minimize_scalar(lambda t: sgn * f(t), bounds=(a, b), method="bounded",
                          options={"xatol": 1e-14})
    tm = float(res.x)
    fm = f(tm)
    if sgn * fm < 0:
        out = []
        for lo, hi in ((a, tm), (tm, b)):
            t = brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
            out.append(_finish(fs, scan, refs, t, c.iota, c.kappa,
                               1e-12 * scan.scale if tol_mu is None else tol_mu))
        return out
    if abs(fm) < 1e-8 * scan.scale:
        m1, _, _ = branch_eigenpair(fs, scan.k[0], scan.data[0], tm, refs[0])
        return [Rejection(c.iota, c.kappa, tm % math.pi, REASON_TANGENCY,
                          "eigencurves touch without a transversal sign change", m1)]
    return []


# ---------------------------------------------------------------------------
# points


@dataclass
class AssumptionReport:
    part1: dict
    part2: dict
    part3: dict
    lattice: dict
    ok: bool

    def to_dict(self) -> dict:
        return {"ok": self.ok, "part1": self.part1, "part2": self.part2,
                "part3": self.part3, "lattice": self.lattice}


@dataclass
class BifurcationPoint:
    """A pair of simultaneous one-dimensional kernels of A(tau*, k1), A(tau*, k2)."""

    tau_star: Tau
    iota: int
    kappa: int
    eta1: np.ndarray
    eta2: np.ndarray
    mu: float
    nu: np.ndarray
    k1: np.ndarray
    k2: np.ndarray
    kernel_dims: tuple
    residuals: tuple
    xi1: np.ndarray
    xi2: np.ndarray
    canonical: bool = True
    report: AssumptionReport | None = None
    sigma: np.ndarray | None = None

    @property
    def det_nu(self) -> float:
        return float(np.linalg.det(self.nu))

    def to_dict(self) -> dict:
        out = {
            "r_star": self.tau_star.r, "theta_star": self.tau_star.theta,
            "iota": self.iota, "kappa": self.kappa, "mu": self.mu,
            "eta1": self.eta1.tolist(), "eta2": self.eta2.tolist(),
            "nu": self.nu.tolist(), "det_nu": self.det_nu,
            "k1": self.k1.tolist(), "k2": self.k2.tolist(),
            "kernel_dims": list(self.kernel_dims), "residuals": list(self.residuals),
            "canonical": self.canonical, "eta_normalization": "unit norm, first nonzero component positive",
        }
        if self.report is not None:
            out["report"] = self.report.to_dict()
        if self.sigma is not None:
            out["sigma"] = self.sigma.tolist()
        return out


def _normalise(v: np.ndarray) -> np.ndarray:
    v = v / np.linalg.norm(v)
    nz = np.flatnonzero(np.abs(v) > 1e-12)
    return -v if v[nz[0]] < 0 else v


def make_point(fs: FluidStack, lat: Lattice, theta: float, iota: int, kappa: int,
               xi1: np.ndarray | None = None, xi2: np.ndarray | None = None,
               mu: float | None = None) -> BifurcationPoint:
    """Build the bifurcation point on the crossing of branches (iota, kappa) at ``theta``.

    ``xi1``/``xi2`` select the branch by eigenvector overlap; without them the
    labels are read as positions in ascending eigenvalue order at ``theta``.
    """
    pairs = []
    for k, ref, label in ((lat.k1, xi1, iota), (lat.k2, xi2, kappa)):
        data = mode_data(fs, float(np.hypot(*k)))
        if ref is None:
            vals, vecs = np.linalg.eigh(assemble_R(fs, theta, k, data))
            m, v = float(vals[label - 1]), vecs[:, label - 1]
        else:
            m, v, _ = branch_eigenpair(fs, k, data, theta, ref)
        pairs.append((m, v, data))
    if mu is None:
        mu = 0.5 * (pairs[0][0] + pairs[1][0])
    if mu >= 0:
        raise ValueError(f"crossing at mu = {mu} >= 0 has no real r*")
    tau = Tau(1 / math.sqrt(-mu), theta)
    etas, nus, dims, res = [], [], [], []
    for (m, v, data), k in zip(pairs, (lat.k1, lat.k2)):
        eta = _normalise(v / np.sqrt(data.Sigma))
        dm = assemble(fs, tau, k, data)
        etas.append(eta)
        nus.append([eta @ dA_dr(dm) @ eta, eta @ dA_dtheta(dm) @ eta])
        dims.append(kernel(dm)[0])
        res.append(float(np.linalg.norm(dm.A @ eta) / matrix_scale(dm)))
    return BifurcationPoint(tau_star=tau, iota=iota, kappa=kappa, eta1=etas[0], eta2=etas[1],
                            mu=float(mu), nu=np.array(nus), k1=np.array(lat.k1),
                            k2=np.array(lat.k2), kernel_dims=tuple(dims), residuals=tuple(res),
                            xi1=pairs[0][1], xi2=pairs[1][1])


def gershgorin_radius(fs: FluidStack, lat: Lattice, r: float) -> tuple[float, float]:
    """(K_min, K_max) such that A(tau, k) is diagonally dominant for |k| >= K_max.

    For |k| >= K > max|alpha| every |psi_j'| at the layer boundaries is bounded
    by sqrt(|k|^2 + a^2) coth(sqrt(K^2 - a^2) h_min) with a = max|alpha|.
    Replacing sqrt(|k|^2 + a^2) by |k| + a turns row-wise dominance into a
    quadratic inequality in |k| whose largest root R(K) decreases with K.  Any
    K with R(K) <= K is a valid radius; the smallest one is found by bisection,
    starting from K_min = max(2 a, shortest dual vector).
    """
    amax = float(np.max(np.abs(fs.alpha[: fs.m])))
    shortest = min(lat.kmag1, lat.kmag2, *(p.kmag for p in dual_lattice_points(lat, max(lat.kmag1, lat.kmag2))))
    kmin = max(2 * amax, shortest)
    hmin = float(np.min(np.diff(np.r_[0.0, fs.d[: fs.m]])))
    D = np.abs(fs.rho[:-1] * fs.alpha[:-1] - fs.rho[1:] * fs.alpha[1:])

    def root(K):
        coth = 1 / math.tanh(math.sqrt(K**2 - amax**2) * hmin)
        out = 0.0
        for j in range(fs.n):
            b = 2 * r * r * (fs.rho[j] + fs.rho[j + 1]) * coth
            c0 = (fs.rho[j] - fs.rho[j + 1]) * fs.g - b * amax - r * r * D[j]
            s = fs.sigma[j]
            disc = b * b - 4 * s * c0
            if disc > 0:
                out = max(out, (b + math.sqrt(disc)) / (2 * s))
        return out

    hi = max(kmin, root(kmin))
    if root(kmin) <= kmin:
        return kmin, kmin * (1 + 1e-12)
    lo = kmin
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if root(mid) <= mid:
            hi = mid
        else:
            lo = mid
    return kmin, hi * (1 + 1e-12)


def classify_lattice(lat: Lattice) -> dict:
    return {"symmetric": lat.is_symmetric(), "non_degenerate": lat.is_non_degenerate()}


def verify_assumption(fs: FluidStack, lat: Lattice, point: BifurcationPoint,
                      tol_det: float = TOL_DET, tol_nu: float = TOL_NU) -> AssumptionReport:
    """Check the three parts of the existence assumption at ``point``.

    (i) one-dimensional kernels at k1 and k2, (ii) invertible nu matrix and
    (iii) det A(tau*, k) != 0 for every other nonzero dual vector.  Part (iii)
    scans all dual vectors up to the Gershgorin radius K_max, beyond which A is
    diagonally dominant and hence invertible.
    """
    tau = point.tau_star
    dm1 = assemble(fs, tau, lat.k1)
    dm2 = assemble(fs, tau, lat.k2)
    dims = [kernel(dm1)[0], kernel(dm2)[0]]
    res = [float(np.linalg.norm(dm1.A @ point.eta1) / matrix_scale(dm1)),
           float(np.linalg.norm(dm2.A @ point.eta2) / matrix_scale(dm2))]
    part1 = {"kernel_dims": dims, "residuals": res,
             "ok": dims == [1, 1] and max(res) < TOL_KERNEL_RESIDUAL}
    threshold = tol_nu * matrix_scale(dm1) * matrix_scale(dm2)
    det_nu = point.det_nu
    part2 = {"nu": point.nu.tolist(), "det_nu": det_nu, "threshold": float(threshold),
             "ok": bool(abs(det_nu) > threshold)}

    kmin, kmax = gershgorin_radius(fs, lat, tau.r)
    m, ks = dual_lattice_array(lat, kmax)
    # A(tau, -k) = A(tau, k), so one vector of each +-k pair suffices
    keep = (m[:, 0] > 0) | ((m[:, 0] == 0) & (m[:, 1] > 0))
    keep &= ~(((m[:, 0] == 1) & (m[:, 1] == 0)) | ((m[:, 0] == 0) & (m[:, 1] == 1)))
    m, ks = m[keep], ks[keep]
    scanned = 2 * len(m)
    det, sigma_prod, resonant = det_batch(fs, tau, ks)
    ratio = np.abs(det) / sigma_prod
    violations = []
    for i in np.flatnonzero(resonant):
        violations.append({"m": m[i].tolist(), "kmag": float(np.hypot(*ks[i])),
                           "reason": "resonance in the vertical modes"})
    for i in np.flatnonzero(~resonant & (ratio <= tol_det)):
        violations.append({"m": m[i].tolist(), "kmag": float(np.hypot(*ks[i])),
                           "det_ratio": float(ratio[i])})
    finite = ratio[~resonant]
    min_ratio = float(np.min(finite)) if finite.size else math.inf
    part3 = {"K_min": kmin, "K_max": kmax, "scanned": scanned,
             "min_det_ratio": None if math.isinf(min_ratio) else min_ratio,
             "violations": violations, "ok": not violations}
    ok = bool(part1["ok"] and part2["ok"] and part3["ok"])
    return AssumptionReport(part1=part1, part2=part2, part3=part3,
                            lattice=classify_lattice(lat), ok=ok)


@dataclass
class SearchResult:
    points: list
    rejections: list
    scan: EigencurveScan


def find_bifurcation_points(fs: FluidStack, lat: Lattice, N: int = DEFAULT_GRID,
                            verify: bool = True) -> SearchResult:
    """Scan, refine and assemble all bifurcation points over theta in [0, pi).

    Points are ordered by (iota, kappa, theta*); the smallest theta* of each
    mode pair is marked canonical.
    """
    scan = scan_eigencurves(fs, lat, N)
    refined, rejections = [], []
    for c in scan.crossings:
        out = refine_crossing(fs, scan, c)
        (rejections if isinstance(out, Rejection) else refined).append(out)
    for c in scan.candidates:
        for out in refine_candidate(fs, scan, c):
            (rejections if isinstance(out, Rejection) else refined).append(out)
    refined = _dedupe(refined)
    points = []
    for rc in refined:
        pt = make_point(fs, lat, rc.theta, rc.iota, rc.kappa, rc.xi1, rc.xi2, rc.mu)
        if verify:
            pt.report = verify_assumption(fs, lat, pt)
        points.append(pt)
    points.sort(key=lambda p: (p.iota, p.kappa, p.tau_star.theta))
    seen = set()
    for p in points:
        p.canonical = (p.iota, p.kappa) not in seen
        seen.add((p.iota, p.kappa))
    return SearchResult(points=points, rejections=rejections, scan=scan)


def _dedupe(refined: list) -> list:
    out = []
    for rc in sorted(refined, key=lambda r: (r.iota, r.kappa, r.theta)):
        if out and (out[-1].iota, out[-1].kappa) == (rc.iota, rc.kappa):
            d = abs(out[-1].theta - rc.theta)
            if min(d, math.pi - d) < 1e-10:
                continue
        out.append(rc)
    return out


# ---------------------------------------------------------------------------
# sigma rescaling


def rescaled_sigma(fs: FluidStack, lat: Lattice, q: float) -> np.ndarray:
    """(sigma_q)_j = [(1+q) sigma_j k1^2 + q g (rho_j - rho_{j+1})] / k1^2."""
    k2 = lat.kmag1**2
    return ((1 + q) * fs.sigma * k2 + q * fs.g * (fs.rho[:-1] - fs.rho[1:])) / k2


def sigma_rescue(fs: FluidStack, lat: Lattice, point: BifurcationPoint, q: float):
    """Rescale the tensions so that tau*_q = (sqrt(1+q) r*, theta*) stays a bifurcation point.

    Then A_q(tau*_q, k_i) = (1+q) A(tau*, k_i) for i = 1, 2, which needs
    |k1| = |k2|.  Returns ``(fs_q, point_q)`` with ``point_q.report`` filled in.
    """
    if not q > -1:
        raise ValueError("q must exceed -1")
    if abs(lat.kmag1 - lat.kmag2) > 1e-12 * lat.kmag1:
        raise ValueError("sigma rescaling needs |k1| = |k2| (symmetric lattice)")
    sig = rescaled_sigma(fs, lat, q)
    if np.any(sig <= 0):
        raise ValueError(f"q = {q} makes some tension non-positive")
    fs_q = fs.replace(sigma=sig)
    tau_q = Tau(math.sqrt(1 + q) * point.tau_star.r, point.tau_star.theta)
    nus = []
    for k, eta in ((lat.k1, point.eta1), (lat.k2, point.eta2)):
        dm = assemble(fs_q, tau_q, k)
        nus.append([eta @ dA_dr(dm) @ eta, eta @ dA_dtheta(dm) @ eta])
    point_q = replace(point, tau_star=tau_q, mu=point.mu / (1 + q), nu=np.array(nus), report=None,
                      sigma=sig)
    point_q.report = verify_assumption(fs_q, lat, point_q)
    return fs_q, point_q


def rescue_sweep(fs: FluidStack, lat: Lattice, point: BifurcationPoint,
                 q_max: float = 1e-2, q_start: float = 1e-4):
    """Try q = +-q_start, +-2 q_start, ... up to q_max; return the first passing (q, fs_q, point_q)."""
    q = q_start
    while q <= q_max * (1 + 1e-12):
        for cand in (q, -q):
            try:
                fs_q, pt = sigma_rescue(fs, lat, point, cand)
            except ValueError:
                continue
            if pt.report.ok:
                return cand, fs_q, pt
        q *= 2
    raise RuntimeError("sigma rescaling sweep exhausted without clearing part (iii)")


# ---------------------------------------------------------------------------
# continuation in alpha


class ContinuationError(RuntimeError):
    def __init__(self, message, last_alpha, last_tau):
        super().__init__(message)
        self.last_alpha = last_alpha
        self.last_tau = last_tau


def adjugate(A: np.ndarray) -> np.ndarray:
    """Adjugate through the SVD, well defined for singular ``A``."""
    U, s, Vt = np.linalg.svd(A)
    n = len(s)
    prods = np.array([np.prod(np.delete(s, i)) for i in range(n)]) if n > 1 else np.ones(1)
    sign = np.linalg.det(U) * np.linalg.det(Vt)
    return sign * (Vt.T * prods) @ U.T


def det_system(fs: FluidStack, lat: Lattice, tau: Tau):
    """G = (det A(tau,k1), det A(tau,k2)) / prod Sigma(k_i) and its Jacobian in (r, theta)."""
    G = np.empty(2)
    J = np.empty((2, 2))
    for i, k in enumerate((lat.k1, lat.k2)):
        dm = assemble(fs, tau, k)
        scale = float(np.prod(dm.Sigma))
        adj = adjugate(dm.A)
        G[i] = det_tridiagonal(dm.A) / scale
        J[i, 0] = np.trace(adj @ dA_dr(dm)) / scale
        J[i, 1] = np.trace(adj @ dA_dtheta(dm)) / scale
    return G, J


def newton_tau(fs: FluidStack, lat: Lattice, tau: Tau, tol: float = NEWTON_TOL,
               maxiter: int = NEWTON_MAXITER):
    x = np.array([tau.r, tau.theta])
    for it in range(maxiter):
        G, J = det_system(fs, lat, Tau(abs(x[0]), x[1]))
        if np.max(np.abs(G)) < tol:
            return Tau(abs(x[0]), x[1]), J, it
        x = x - np.linalg.solve(J, G)
    raise RuntimeError(f"Newton did not converge in {maxiter} iterations")


def continue_alpha(fs0: FluidStack, lat: Lattice, point0: BifurcationPoint, alpha_target,
                   steps: int = 10, tol_delta: float = 1e-12) -> BifurcationPoint:
    """Follow ``point0`` from the vorticity in ``fs0`` to ``alpha_target``.

    The Beltrami constants are moved linearly in ``steps`` increments; at each
    step (r, theta) is corrected by Newton's method on the pair of
    determinants, with the Jacobian from Jacobi's formula.
    """
    alpha0 = np.array(fs0.alpha)
    target = np.asarray(alpha_target, dtype=float)
    if target.shape != alpha0.shape:
        raise ValueError(f"alpha_target must have {alpha0.size} entries")
    if np.array_equal(target, alpha0):
        return point0
    tau = point0.tau_star
    xi1, xi2 = point0.xi1, point0.xi2
    last = alpha0
    for step in range(1, steps + 1):
        alpha = alpha0 + (target - alpha0) * step / steps
        fs = fs0.replace(alpha=alpha)
        try:
            tau, J, _ = newton_tau(fs, lat, tau)
        except (RuntimeError, np.linalg.LinAlgError, ResonanceError) as exc:
            raise ContinuationError(str(exc), last, tau) from None
        if abs(np.linalg.det(J)) < tol_delta:
            raise ContinuationError("det Delta below tolerance", last, tau)
        pt = make_point(fs, lat, tau.theta % math.pi, point0.iota, point0.kappa, xi1, xi2)
        xi1, xi2 = pt.xi1, pt.xi2
        last = alpha
    pt.report = verify_assumption(fs, lat, pt)
    return pt


def delta_matrix(fs: FluidStack, lat: Lattice, tau: Tau) -> np.ndarray:
    """Unscaled Jacobian of (det A(tau,k1), det A(tau,k2)) in (r, theta)."""
    J = np.empty((2, 2))
    for i, k in enumerate((lat.k1, lat.k2)):
        dm = assemble(fs, tau, k)
        adj = adjugate(dm.A)
        J[i] = [np.trace(adj @ dA_dr(dm)), np.trace(adj @ dA_dtheta(dm))]
    return J


# ---------------------------------------------------------------------------
# two-layer sufficient conditions


def check_two_layer_conditions(fs: FluidStack, lat: Lattice) -> dict:
    """Sufficient conditions for a bifurcation point when n = 1."""
    if fs.n != 1:
        raise ValueError("two-layer conditions need n = 1")

    def stiffness(kmag):
        val = fs.rho[0] * boundary_slopes(fs, 1, kmag)[0]
        if fs.rho[1] > 0:
            val += fs.rho[1] * boundary_slopes(fs, 2, kmag)[0]
        return val

    P1, P2 = stiffness(lat.kmag1), stiffness(lat.kmag2)
    D = fs.rho[0] * fs.alpha[0] - fs.rho[1] * fs.alpha[1]
    cond_i = bool(P1 >= P2 > 0 and D > 0)
    if D > 0:
        spread = math.atan(P1 / D) - math.atan(P2 / D)
    elif D == 0:
        spread = 0.0 if P1 > 0 and P2 > 0 else math.nan
    else:
        spread = math.atan(P1 / D) - math.atan(P2 / D)
    cond_ii = bool(spread < lat.gamma2)
    alternative = bool(D == 0)
    return {"P1": P1, "P2": P2, "D": D, "arctan_difference": spread, "gamma2": lat.gamma2,
            "cond_i": cond_i, "cond_ii": cond_ii, "alternative": alternative,
            "ok": bool((cond_i and cond_ii) or alternative)}
