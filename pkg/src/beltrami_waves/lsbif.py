"""Finite-dimensional multi-parameter bifurcation by Lyapunov-Schmidt reduction.

Consider F(x, c) = 0 with F(0, c) = 0 for all c, where D_x F(0, c*) has an
n-dimensional kernel spanned by x_1..x_n and the cokernel is detected by the
functionals y_1*..y_n*.  Writing x = sum s_i x_i + x~ with x~ orthogonal to the
kernel, the complementary equations (I - P) F = 0 determine x~(s, c), and the
remaining n equations reduce to

    H_i(s, c) = y_i* F(sum s_j x_j + x~(s, c), c) / s_i = 0.

When the matrix nu_ij = dH_i/dc_j(0, c*) is invertible these equations give a
branch c[s] through c*.  Where some s_i = 0 the quotient is replaced by its
limit, and the branch is one solution among possibly many: with s_i = 0 the
parameter c_i is typically not determined by F at all.

Smoothness of ``F`` (at least C^2) is the caller's responsibility.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import null_space

EPS = np.finfo(float).eps
FD_STEP = EPS ** (1 / 3)


class ReductionError(RuntimeError):
    """Newton failure or an ill-conditioned complement block."""


def _jacobian(fun, x0):
    """Central-difference Jacobian with steps scaled by |x0|."""
    x0 = np.asarray(x0, dtype=float)
    cols = []
    for i in range(x0.size):
        h = FD_STEP * max(1.0, abs(x0[i]))
        e = np.zeros_like(x0)
        e[i] = h
        cols.append((np.asarray(fun(x0 + e)) - np.asarray(fun(x0 - e))) / (2 * h))
    return np.column_stack(cols) if cols else np.zeros((0, 0))


@dataclass
class BifProblem:
    """F(x, c) with kernel vectors (rows of ``kernel_basis``) and cokernel functionals."""

    F: Callable
    c_star: np.ndarray
    kernel_basis: np.ndarray
    cokernel: np.ndarray
    jac_x: Callable | None = None
    _T: np.ndarray = field(init=False, repr=False)
    _Z: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.c_star = np.atleast_1d(np.asarray(self.c_star, dtype=float))
        self.kernel_basis = np.atleast_2d(np.asarray(self.kernel_basis, dtype=float))
        self.cokernel = np.atleast_2d(np.asarray(self.cokernel, dtype=float))
        n = self.c_star.size
        if self.kernel_basis.shape[0] != n or self.cokernel.shape[0] != n:
            raise ValueError("need as many kernel vectors and functionals as parameters")
        if self.kernel_basis.shape[1] != self.cokernel.shape[1]:
            raise ValueError("kernel vectors and functionals act on different spaces")
        # orthonormal bases of ker Y* (range of I - P) and of the kernel's complement
        self._T = null_space(self.cokernel)
        self._Z = null_space(self.kernel_basis)

    @property
    def N(self) -> int:
        return self.kernel_basis.shape[1]

    @property
    def n(self) -> int:
        return self.c_star.size

    def residual(self, x, c) -> np.ndarray:
        return np.asarray(self.F(np.asarray(x, dtype=float), np.asarray(c, dtype=float)), dtype=float)

    def projector_P(self) -> np.ndarray:
        """P = Y_hat Y* with Y_hat = Y*^T (Y* Y*^T)^{-1}."""
        Y = self.cokernel
        return Y.T @ np.linalg.solve(Y @ Y.T, Y)

    def projector_Q(self) -> np.ndarray:
        """Orthogonal projector onto the kernel."""
        X = self.kernel_basis.T
        return X @ np.linalg.solve(X.T @ X, X.T)

    def jacobian_x(self, x, c) -> np.ndarray:
        if self.jac_x is not None:
            return np.asarray(self.jac_x(x, c), dtype=float)
        return _jacobian(lambda v: self.residual(v, c), x)

    def check(self, samples: int = 5, radius: float = 1e-2, seed: int = 0) -> dict:
        """Trivial-branch and kernel/cokernel consistency diagnostics."""
        rng = np.random.default_rng(seed)
        trivial = 0.0
        for _ in range(samples):
            c = self.c_star + radius * rng.standard_normal(self.n)
            trivial = max(trivial, float(np.max(np.abs(self.residual(np.zeros(self.N), c)))))
        J = self.jacobian_x(np.zeros(self.N), self.c_star)
        coupling = self.cokernel @ J @ self.kernel_basis.T
        return {"trivial_residual": trivial, "kernel_coupling": float(np.max(np.abs(coupling))),
                "complement_condition": float(np.linalg.cond(self._T.T @ J @ self._Z))
                if self._Z.size else 1.0}


@dataclass
class BranchPoint:
    s: np.ndarray
    x: np.ndarray
    c: np.ndarray
    residual: float
    unique_claimed: bool
    iterations: int = 0


def reduce(problem: BifProblem, s, c, tol: float = 1e-12, maxiter: int = 50) -> np.ndarray:
    """Solve (I - P) F(sum s_j x_j + x~, c) = 0 for x~ orthogonal to the kernel."""
    s = np.asarray(s, dtype=float)
    c = np.asarray(c, dtype=float)
    N = problem.N
    if not np.any(s) or problem._Z.shape[1] == 0:
        return np.zeros(N)
    base = s @ problem.kernel_basis
    T, Z = problem._T, problem._Z

    def G(w):
        return T.T @ problem.residual(base + Z @ w, c)

    w = np.zeros(Z.shape[1])
    g = G(w)
    scale = 1.0 + float(np.max(np.abs(problem.residual(base, c))))
    for it in range(maxiter):
        if np.max(np.abs(g)) < tol * scale:
            return Z @ w
        J = T.T @ problem.jacobian_x(base + Z @ w, c) @ Z
        if np.linalg.cond(J) > 1 / EPS:
            raise ReductionError("complement block is numerically singular")
        w = w - np.linalg.solve(J, g)
        g = G(w)
    if np.max(np.abs(g)) < tol * scale:
        return Z @ w
    raise ReductionError(f"reduction Newton did not converge in {maxiter} iterations")


def _projected(problem: BifProblem, s, c) -> np.ndarray:
    x = np.asarray(s, dtype=float) @ problem.kernel_basis + reduce(problem, s, c)
    return problem.cokernel @ problem.residual(x, c)


def reduced_map(problem: BifProblem, s, c) -> np.ndarray:
    """H(s, c); components with s_i = 0 use the derivative in s_i instead of the quotient."""
    s = np.asarray(s, dtype=float)
    c = np.asarray(c, dtype=float)
    g = _projected(problem, s, c)
    H = np.empty(problem.n)
    for i in range(problem.n):
        if s[i] != 0:
            H[i] = g[i] / s[i]
        else:
            h = 1e-6 * max(1.0, float(np.linalg.norm(s)))
            e = np.zeros_like(s)
            e[i] = h
            H[i] = (_projected(problem, s + e, c)[i] - _projected(problem, s - e, c)[i]) / (2 * h)
    return H


def nu_matrix(problem: BifProblem, eps: float = 1e-4, delta: float = 1e-4) -> np.ndarray:
    """nu_ij = y_i* d_{c_j} D_x F(0, c*) x_i by central differences."""
    nu = np.empty((problem.n, problem.n))
    for i in range(problem.n):
        xi = problem.kernel_basis[i]
        for j in range(problem.n):
            e = np.zeros(problem.n)
            e[j] = delta
            vals = []
            for cc in (problem.c_star + e, problem.c_star - e):
                d = (problem.residual(eps * xi, cc) - problem.residual(-eps * xi, cc)) / (2 * eps)
                vals.append(problem.cokernel[i] @ d)
            nu[i, j] = (vals[0] - vals[1]) / (2 * delta)
    return nu


def check_condition_iv(problem: BifProblem, s_samples, c=None, tol: float = 1e-8) -> float:
    """Largest |y_i* F| over samples with s_i = 0; warns above ``tol``.

    This is the computable stand-in for the invariant-subspace hypothesis that
    makes the quotient H_i well defined at s_i = 0.
    """
    c = problem.c_star if c is None else np.asarray(c, dtype=float)
    worst = 0.0
    for s in s_samples:
        s = np.asarray(s, dtype=float)
        g = _projected(problem, s, c)
        for i in np.flatnonzero(s == 0):
            worst = max(worst, abs(float(g[i])))
    if worst > tol:
        warnings.warn(f"y_i* F does not vanish on s_i = 0 (max {worst:.3e}); H_i may be singular")
    return worst


def solve_branch(problem: BifProblem, s, tol: float = 1e-13, maxiter: int = 50) -> BranchPoint:
    """Newton in c on H(s, c) = 0 starting from c*."""
    s = np.asarray(s, dtype=float)
    c = problem.c_star.copy()
    if not np.any(s):
        return BranchPoint(s=s, x=np.zeros(problem.N), c=c, residual=0.0,
                           unique_claimed=False, iterations=0)
    nu = nu_matrix(problem)
    cond = np.linalg.cond(nu)
    if not np.isfinite(cond) or cond > 1e12:
        raise ReductionError(f"nu matrix is singular (condition number {cond:.3e})")
    it = 0
    H = reduced_map(problem, s, c)
    for it in range(1, maxiter + 1):
        J = _jacobian(lambda v: reduced_map(problem, s, v), c)
        c = c - np.linalg.solve(J, H)
        H = reduced_map(problem, s, c)
        if np.max(np.abs(H)) < tol * (1 + float(np.max(np.abs(c)))):
            break
    else:
        raise ReductionError(f"branch Newton did not converge in {maxiter} iterations")
    x = s @ problem.kernel_basis + reduce(problem, s, c)
    res = float(np.linalg.norm(problem.residual(x, c)))
    return BranchPoint(s=s, x=x, c=c, residual=res, unique_claimed=bool(np.all(s != 0)),
                       iterations=it)


# ---------------------------------------------------------------------------
# analytic test problems


def pitchfork_problem(c_star=(1.0, 2.0)) -> BifProblem:
    """F_i = (c_i - c_i*) x_i - x_i^3; branch c_i = c_i* + s_i^2."""
    cs = np.asarray(c_star, dtype=float)

    def F(x, c):
        return (c - cs) * x - x**3

    return BifProblem(F, cs, np.eye(2), np.eye(2))


def complement_problem(c_star=(1.0, 2.0)) -> BifProblem:
    """Pitchfork plus x3 + x1^2 = 0, so x~ = (0, 0, -s1^2)."""
    cs = np.asarray(c_star, dtype=float)

    def F(x, c):
        return np.array([(c[0] - cs[0]) * x[0] - x[0] ** 3,
                         (c[1] - cs[1]) * x[1] - x[1] ** 3,
                         x[2] + x[0] ** 2])

    return BifProblem(F, cs, np.eye(3)[:2], np.eye(3)[:2])


def coupled_problem(c_star=(0.5, -1.0)) -> BifProblem:
    """Quadratically coupled toy with a closed-form branch, see :func:`coupled_branch`."""
    cs = np.asarray(c_star, dtype=float)

    def F(x, c):
        e1, e2 = c - cs
        return np.array([e1 * x[0] + x[0] * x[2] + x[0] * x[1] ** 2,
                         e2 * x[1] + 2 * x[1] * x[2],
                         x[2] + x[0] ** 2 + x[1] ** 2 + e1 * x[2]])

    return BifProblem(F, cs, np.eye(3)[:2], np.eye(3)[:2])


def coupled_branch(s, c_star=(0.5, -1.0)) -> np.ndarray:
    """Exact c[s] of :func:`coupled_problem`."""
    s1, s2 = s
    b = 1 + s2**2
    e1 = (-b + np.sqrt(b * b + 4 * s1**2)) / 2
    e2 = 2 * (s1**2 + s2**2) / (1 + e1)
    return np.asarray(c_star, dtype=float) + np.array([e1, e2])
