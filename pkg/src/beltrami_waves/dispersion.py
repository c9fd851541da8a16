"""The linearised interface operator A(tau, k) and its constituents.

For a dual vector k != 0 the operator acting on the interface amplitudes is the
symmetric tridiagonal matrix

    A = Sigma + r^2 (C B C + C D S),

where Sigma holds the gravity/tension restoring terms, B the vertical-mode
coupling, D the vorticity jumps and C, S the projections
beta_j = cos(theta_j - alpha_j d_j - gamma), beta_j_perp = sin(...).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import FluidStack
from .trivial_flows import Tau, interface_phases
from .vertical_modes import boundary_slopes, phi_prime, unit_slopes

KERNEL_RTOL = 1e-8


@dataclass(frozen=True)
class ModeData:
    """theta-independent pieces of A at a fixed wavenumber |k|."""

    kmag: float
    Sigma: np.ndarray
    B: np.ndarray
    D: np.ndarray


@dataclass(frozen=True)
class DispersionMatrix:
    A: np.ndarray
    Sigma: np.ndarray
    B: np.ndarray
    C: np.ndarray
    S: np.ndarray
    D: np.ndarray
    k: np.ndarray
    kmag: float
    gamma: float
    tau: Tau

    @property
    def n(self) -> int:
        return self.A.shape[0]


def sigma_diagonal(fs: FluidStack, kmag: float) -> np.ndarray:
    """Sigma_jj = sigma_j |k|^2 + (rho_j - rho_{j+1}) g."""
    return fs.sigma * kmag**2 + (fs.rho[:-1] - fs.rho[1:]) * fs.g


def vorticity_jumps(fs: FluidStack) -> np.ndarray:
    """D_jj = rho_j alpha_j - rho_{j+1} alpha_{j+1}."""
    ra = fs.rho * fs.alpha
    return ra[:-1] - ra[1:]


def coupling_matrix(fs: FluidStack, kmag: float) -> np.ndarray:
    """B(k): diagonal -rho_{j+1} psi'_{j+1}(d_{j+1}) - rho_j psi'_j(d_j),
    off-diagonal rho_{j+1} psi'_{j+1}(d_j).

    Layers with zero density are never evaluated, so an empty top layer does
    not need to satisfy the non-resonance condition.
    """
    n = fs.n
    slopes = {}
    for j in range(1, n + 2):
        if fs.density(j) > 0:
            slopes[j] = boundary_slopes(fs, j, kmag)
    B = np.zeros((n, n))
    for j in range(1, n + 1):
        val = -fs.density(j) * slopes[j][0]
        if j + 1 in slopes:
            val -= fs.density(j + 1) * slopes[j + 1][0]
        B[j - 1, j - 1] = val
        if j < n:
            off = fs.density(j + 1) * slopes[j + 1][1]
            B[j - 1, j] = B[j, j - 1] = off
    return B


def off_diagonal_pair(fs: FluidStack, tau, k) -> np.ndarray:
    """Both closed forms of the coupling between interfaces j and j+1.

    Column 0 is a_{j,j+1} = r^2 beta_j beta_{j+1} rho_{j+1} psi'_{j+1}(d_j) and
    column 1 is a_{j+1,j} = -r^2 beta_{j+1} beta_j rho_{j+1} phi'_{j+1}(d_{j+1}),
    each computed from its own mode function.
    """
    tau = tau if isinstance(tau, Tau) else Tau(*tau)
    k = np.asarray(k, dtype=float)
    kmag = float(np.hypot(*k))
    gamma = float(np.arctan2(k[1], k[0]))
    c = np.cos(interface_phases(fs, tau.theta)[1:] - gamma)
    out = np.zeros((fs.n - 1, 2))
    for j in range(1, fs.n):
        w = tau.r**2 * c[j - 1] * c[j] * fs.density(j + 1)
        out[j - 1, 0] = w * boundary_slopes(fs, j + 1, kmag)[1]
        out[j - 1, 1] = -w * float(phi_prime(fs, j + 1, kmag, fs.depth(j + 1)))
    return out


def mode_data(fs: FluidStack, kmag: float) -> ModeData:
    return ModeData(kmag=float(kmag), Sigma=sigma_diagonal(fs, kmag),
                    B=coupling_matrix(fs, kmag), D=vorticity_jumps(fs))


def projections(fs: FluidStack, theta, gamma: float):
    """(C, S) diagonals, beta_j and beta_j_perp for j = 1..n; theta may be an array."""
    phase = interface_phases(fs, theta)[..., 1:] - gamma
    return np.cos(phase), np.sin(phase)


def assemble(fs: FluidStack, tau, k, data: ModeData | None = None) -> DispersionMatrix:
    """Assemble A(tau, k) for a dual vector ``k`` (given as a plane vector)."""
    tau = tau if isinstance(tau, Tau) else Tau(*tau)
    k = np.asarray(k, dtype=float)
    kmag = float(np.hypot(*k))
    gamma = float(np.arctan2(k[1], k[0])) if kmag > 0 else 0.0
    C, S = projections(fs, tau.theta, gamma)
    if kmag == 0:
        Sigma = sigma_diagonal(fs, 0.0)
        zeros = np.zeros((fs.n, fs.n))
        return DispersionMatrix(A=np.diag(Sigma), Sigma=Sigma, B=zeros, C=C, S=S,
                                D=vorticity_jumps(fs), k=k, kmag=0.0, gamma=gamma, tau=tau)
    if data is None:
        data = mode_data(fs, kmag)
    B = data.B
    A = np.zeros((fs.n, fs.n))
    r2 = tau.r**2
    idx = np.arange(fs.n)
    A[idx, idx] = r2 * C * (C * np.diag(B) + S * data.D) + data.Sigma
    off = r2 * C[:-1] * C[1:] * np.diag(B, 1)
    A[idx[:-1], idx[1:]] = off
    A[idx[1:], idx[:-1]] = off
    return DispersionMatrix(A=A, Sigma=data.Sigma, B=B, C=C, S=S, D=data.D, k=k,
                            kmag=kmag, gamma=gamma, tau=tau)


def perturbation(dm: DispersionMatrix) -> np.ndarray:
    """C B C + C D S, the coefficient of r^2 in A."""
    return dm.C[:, None] * dm.B * dm.C[None, :] + np.diag(dm.C * dm.D * dm.S)


def dA_dr(dm: DispersionMatrix) -> np.ndarray:
    return 2 * dm.tau.r * perturbation(dm)


def dA_dtheta(dm: DispersionMatrix) -> np.ndarray:
    """r^2 (-S B C - C B S + C D C - S D S)."""
    C, S = dm.C, dm.S
    sbc = S[:, None] * dm.B * C[None, :]
    return dm.tau.r**2 * (-sbc - sbc.T + np.diag(dm.D * (C * C - S * S)))


def det_tridiagonal(A: np.ndarray) -> float:
    """Determinant of a symmetric tridiagonal matrix by the three-term recurrence."""
    A = np.asarray(A, dtype=float)
    prev, cur = 1.0, float(A[0, 0])
    for j in range(1, A.shape[0]):
        prev, cur = cur, A[j, j] * cur - A[j, j - 1] * A[j - 1, j] * prev
    return cur


def det_A(dm: DispersionMatrix) -> float:
    return det_tridiagonal(dm.A)


def det_batch(fs: FluidStack, tau, ks) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """det A(tau, k) for many dual vectors at once.

    ``ks`` has shape (N, 2).  Returns the determinants, prod_j Sigma_jj(k) and
    a mask of vectors at which some massive layer is resonant (their
    determinants are NaN).
    """
    tau = tau if isinstance(tau, Tau) else Tau(*tau)
    ks = np.asarray(ks, dtype=float).reshape(-1, 2)
    kmag = np.hypot(ks[:, 0], ks[:, 1])
    gamma = np.arctan2(ks[:, 1], ks[:, 0])
    n = fs.n
    top = np.zeros((n + 1, kmag.size))
    bottom = np.zeros((n + 1, kmag.size))
    resonant = np.zeros(kmag.size, dtype=bool)
    for j in range(1, n + 2):
        if fs.density(j) == 0:
            continue
        h = fs.thickness(j)
        t, b, res = unit_slopes((kmag**2 - fs.beltrami(j) ** 2) * h * h)
        top[j - 1], bottom[j - 1] = fs.density(j) * t / h, fs.density(j) * b / h
        resonant |= res
    diag_B = -top[:n] - top[1:]
    off_B = bottom[1:n]
    Sigma = fs.sigma[:, None] * kmag**2 + ((fs.rho[:-1] - fs.rho[1:]) * fs.g)[:, None]
    phase = interface_phases(fs, tau.theta)[1:, None] - gamma[None, :]
    C, S = np.cos(phase), np.sin(phase)
    r2 = tau.r**2
    diag = Sigma + r2 * C * (C * diag_B + S * vorticity_jumps(fs)[:, None])
    off2 = (r2 * C[:-1] * C[1:] * off_B) ** 2
    prev, cur = np.ones(kmag.size), diag[0]
    for j in range(1, n):
        prev, cur = cur, diag[j] * cur - off2[j - 1] * prev
    return cur, np.prod(Sigma, axis=0), resonant


def _sign_fix(v: np.ndarray, rule: str) -> np.ndarray:
    if rule == "first":
        nz = np.flatnonzero(np.abs(v) > 1e-12 * np.max(np.abs(v)))
        ref = v[nz[0]]
    else:
        ref = v[np.argmax(np.abs(v))]
    return -v if ref < 0 else v


def matrix_scale(dm: DispersionMatrix) -> float:
    """Size of the terms that make up A; the reference for "numerically zero".

    At a bifurcation point A itself nearly vanishes (always so for n = 1), so
    its own norm is no yardstick; Sigma and the flow term are.
    """
    pert = dm.tau.r**2 * perturbation(dm)
    return float(max(np.linalg.norm(dm.A, np.inf), np.max(np.abs(dm.Sigma)),
                     np.linalg.norm(pert, np.inf)))


def kernel(A, tol: float | None = None, scale: float | None = None) -> tuple[int, np.ndarray]:
    """Numerical kernel of ``A``.

    Returns the dimension (number of singular values below ``tol * scale``,
    default ``tol = 1e-8``) and an array whose rows are unit kernel vectors
    with first nonzero component positive.  ``scale`` defaults to
    :func:`matrix_scale` for a :class:`DispersionMatrix` and to ``||A||_inf``
    for a plain array.
    """
    if isinstance(A, DispersionMatrix):
        scale = matrix_scale(A) if scale is None else scale
        A = A.A
    A = np.asarray(A, dtype=float)
    tol = KERNEL_RTOL if tol is None else tol
    if scale is None:
        scale = float(np.max(np.sum(np.abs(A), axis=1)))
    _, sv, vt = np.linalg.svd(A)
    small = sv < tol * scale if scale > 0 else np.ones_like(sv, dtype=bool)
    basis = np.array([_sign_fix(v, "first") for v in vt[small]]).reshape(-1, A.shape[1])
    return int(small.sum()), basis


@dataclass(frozen=True)
class EigenPairs:
    """Eigenvalues (ascending) and eigenvectors (columns) of a symmetric matrix."""

    mu: np.ndarray
    xi: np.ndarray
    labels: np.ndarray


def eigen(R) -> EigenPairs:
    R = np.asarray(R, dtype=float)
    mu, xi = np.linalg.eigh(R)
    xi = np.column_stack([_sign_fix(xi[:, i], "max") for i in range(len(mu))])
    return EigenPairs(mu=mu, xi=xi, labels=np.arange(1, len(mu) + 1))


def assemble_R(fs: FluidStack, theta, k, data: ModeData | None = None) -> np.ndarray:
    """R(k, theta) = Sigma^{-1/2} (C B C + C D S) Sigma^{-1/2}.

    ``theta`` may be an array of angles; the result then has shape
    ``theta.shape + (n, n)``.
    """
    k = np.asarray(k, dtype=float)
    kmag = float(np.hypot(*k))
    gamma = float(np.arctan2(k[1], k[0]))
    if data is None:
        data = mode_data(fs, kmag)
    C, S = projections(fs, theta, gamma)
    w = 1 / np.sqrt(data.Sigma)
    Bs = w[:, None] * data.B * w[None, :]
    R = C[..., :, None] * Bs * C[..., None, :]
    diag = C * S * data.D * w * w
    idx = np.arange(fs.n)
    R[..., idx, idx] += diag
    return R


def coupling_splitting(fs: FluidStack, kmag: float) -> tuple[np.ndarray, np.ndarray]:
    """Split B(k) = B_hat + B_check by layer parity.

    B_hat collects the couplings through the even layers 2, 4, ... and B_check
    those through the odd layers 1, 3, ...; each is block diagonal with 2x2
    blocks rho_L [[-psi'_L(d_L), psi'_L(d_{L-1})], [psi'_L(d_{L-1}), -psi'_L(d_L)]]
    (the bottom layer and an odd-numbered top layer give 1x1 blocks).
    """
    n = fs.n
    parts = (np.zeros((n, n)), np.zeros((n, n)))
    for L in range(1, n + 2):
        rho = fs.density(L)
        if rho == 0:
            continue
        top, bottom = boundary_slopes(fs, L, kmag)
        M = parts[0] if L % 2 == 0 else parts[1]
        lo, hi = L - 2, L - 1  # 0-based rows of interfaces L-1 and L
        if lo >= 0:
            M[lo, lo] -= rho * top
        if hi < n:
            M[hi, hi] -= rho * top
        if lo >= 0 and hi < n:
            M[lo, hi] = M[hi, lo] = rho * bottom
    return parts


def splitting_minors(fs: FluidStack, kmag: float) -> tuple[np.ndarray, np.ndarray]:
    """Closed forms of the leading principal minors det(-B_hat_l), det(-B_check_l).

    Valid for alpha = 0 in the layers involved, where psi'(d_L)^2 - psi'(d_{L-1})^2 = |k|^2.
    A 2x2 block contributes rho_L^2 |k|^2 and a truncated block its diagonal
    entry rho_L psi'_L(d_L), so

        det(-B_hat_l)   = k^l prod_{i<=l/2} rho_{2i}^2                              (l even)
                        = k^{l-1} prod_{i<=(l-1)/2} rho_{2i}^2 rho_{l+1} psi'_{l+1}(d_{l+1})  (l odd)
        det(-B_check_l) = rho_1 psi'_1(d_1) k^{l-1} prod_{i<=(l-1)/2} rho_{2i+1}^2     (l odd)
                        = rho_1 psi'_1(d_1) k^{l-2} prod_{i<=(l-2)/2} rho_{2i+1}^2
                          rho_{l+1} psi'_{l+1}(d_{l+1})                              (l even)
    """
    n = fs.n

    def edge(L):
        rho = fs.density(L)
        return rho * boundary_slopes(fs, L, kmag)[0] if rho > 0 else 0.0

    hat = np.empty(n)
    check = np.empty(n)
    for l in range(1, n + 1):
        if l % 2 == 0:
            hat[l - 1] = kmag**l * np.prod([fs.density(2 * i) ** 2 for i in range(1, l // 2 + 1)])
            check[l - 1] = (edge(1) * kmag ** (l - 2) * edge(l + 1)
                            * np.prod([fs.density(2 * i + 1) ** 2 for i in range(1, (l - 2) // 2 + 1)]))
        else:
            hat[l - 1] = (kmag ** (l - 1) * edge(l + 1)
                          * np.prod([fs.density(2 * i) ** 2 for i in range(1, (l - 1) // 2 + 1)]))
            check[l - 1] = (edge(1) * kmag ** (l - 1)
                            * np.prod([fs.density(2 * i + 1) ** 2 for i in range(1, (l - 1) // 2 + 1)]))
    return hat, check
