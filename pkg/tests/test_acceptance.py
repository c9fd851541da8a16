"""Acceptance criteria 1-14; each test prints one PASS/FAIL line."""

import dataclasses
import math

import numpy as np
from scipy.optimize import brentq

from beltrami_waves.bifurcation import (
    continue_alpha,
    delta_matrix,
    find_bifurcation_points,
    rescaled_sigma,
    rescue_sweep,
)
from beltrami_waves.config import FluidStack, Lattice, check_non_resonance
from beltrami_waves.dispersion import (
    assemble,
    coupling_splitting,
    dA_dr,
    dA_dtheta,
    det_A,
    matrix_scale,
    mode_data,
    off_diagonal_pair,
    splitting_minors,
)
from beltrami_waves.lsbif import (
    complement_problem,
    coupled_branch,
    coupled_problem,
    pitchfork_problem,
    reduce,
    solve_branch,
)
from beltrami_waves.trivial_flows import Tau, trivial_velocity
from beltrami_waves.vertical_modes import phi, psi, psi_prime
from beltrami_waves.wavefield import assemble_first_order, solve_mode

from conftest import random_lattice, random_resonance_free, random_stack


def _rel(a, b):
    return float(np.max(np.abs(np.asarray(a) - b)) / max(np.max(np.abs(b)), 1e-300))


def _zeta_chi(fs, k, r, theta):
    """zeta = r^2 cos^2(theta - gamma) and chi'(zeta) from the eigenvalues of Sigma^-1/2 B Sigma^-1/2."""
    data = mode_data(fs, float(np.hypot(*k)))
    w = 1 / np.sqrt(data.Sigma)
    mub = np.linalg.eigvalsh(w[:, None] * data.B * w)
    zeta = r * r * math.cos(theta - math.atan2(k[1], k[0])) ** 2
    dchi = np.prod(data.Sigma) * sum(
        mub[i] * np.prod([1 + zeta * mub[j] for j in range(len(mub)) if j != i])
        for i in range(len(mub)))
    return zeta, dchi, data


def _alpha0_points(seed, count, ns=(1, 2, 3), grid=512):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        fs, lat = random_resonance_free(rng, int(rng.choice(ns)), 0.0)
        res = find_bifurcation_points(fs, lat, grid, verify=False)
        out.extend((fs, lat, p) for p in res.points)
    return out[:count]


# ---------------------------------------------------------------------------


def test_c01_tridiagonal_structure(criterion):
    rng = np.random.default_rng(1)
    worst_off, worst_pair = 0.0, 0.0
    for i in range(200):
        fs, lat = random_resonance_free(rng, int(rng.integers(1, 6)), 0.8, top_mass=bool(i % 2))
        tau = Tau(rng.uniform(0.2, 3), rng.uniform(0, 2 * math.pi))
        k = lat.k1 if i % 3 else lat.k1 + lat.k2
        A = assemble(fs, tau, k).A
        outside = np.abs(np.subtract.outer(np.arange(fs.n), np.arange(fs.n))) > 1
        worst_off = max(worst_off, float(np.max(np.abs(A[outside]), initial=0.0)))
        if fs.n > 1:
            pair = off_diagonal_pair(fs, tau, k)
            scale = np.maximum(np.abs(pair[:, 0]), 1e-300)
            worst_pair = max(worst_pair, float(np.max(np.abs(pair[:, 0] - pair[:, 1]) / scale)))
            worst_pair = max(worst_pair, _rel(np.diag(A, 1), pair[:, 0]))
    assert worst_off == 0.0
    criterion(1, "tridiagonal, off-diagonal closed forms agree (rel)", worst_pair, 1e-12)


def test_c02_decomposition(criterion):
    rng = np.random.default_rng(2)
    worst = 0.0
    for i in range(100):
        fs, lat = random_resonance_free(rng, int(rng.integers(1, 6)), 1.0)
        tau = Tau(rng.uniform(0.2, 3), rng.uniform(0, 2 * math.pi))
        k = lat.k2
        kmag, gamma = float(np.hypot(*k)), math.atan2(k[1], k[0])
        # assemble every piece directly from the layer data
        Sigma = np.diag([fs.sigma[j] * kmag**2 + (fs.rho[j] - fs.rho[j + 1]) * fs.g
                         for j in range(fs.n)])
        B = np.zeros((fs.n, fs.n))
        for j in range(1, fs.n + 1):
            hi = fs.depth(j)
            B[j - 1, j - 1] = -fs.rho[j - 1] * psi_prime(fs, j, kmag, hi)
            if fs.rho[j] > 0:
                B[j - 1, j - 1] -= fs.rho[j] * float(psi_prime(fs, j + 1, kmag, fs.depth(j + 1)))
            if j < fs.n:
                B[j - 1, j] = B[j, j - 1] = fs.rho[j] * psi_prime(fs, j + 1, kmag, hi)
        phases = [tau.theta - sum(fs.alpha[i] * fs.thickness(i + 1) for i in range(j))
                  for j in range(1, fs.n + 1)]
        C = np.diag(np.cos(np.array(phases) - gamma))
        S = np.diag(np.sin(np.array(phases) - gamma))
        D = np.diag([fs.rho[j] * fs.alpha[j] - fs.rho[j + 1] * fs.alpha[j + 1] for j in range(fs.n)])
        ref = Sigma + tau.r**2 * (C @ B @ C + C @ D @ S)
        worst = max(worst, _rel(assemble(fs, tau, k).A, ref))
    criterion(2, "A = Sigma + r^2 (CBC + CDS) (rel)", worst, 1e-12)


def test_c03_negative_definite(criterion):
    rng = np.random.default_rng(3)
    worst = 0.0
    max_eig = -math.inf
    for i in range(200):
        fs = random_stack(rng, int(rng.integers(1, 6)), top_mass=bool(i % 2))
        lat = random_lattice(rng)
        kmag = lat.kmag1 * rng.uniform(0.3, 3)
        B = mode_data(fs, kmag).B
        max_eig = max(max_eig, float(np.max(np.linalg.eigvalsh(B))))
        Bh, Bc = coupling_splitting(fs, kmag)
        hat, check = splitting_minors(fs, kmag)
        for M, closed in ((Bh, hat), (Bc, check)):
            brute = np.array([np.linalg.det(-M[:l, :l]) for l in range(1, fs.n + 1)])
            nonzero = closed != 0
            # the last minor vanishes identically when the top layer is empty
            assert np.all(brute[nonzero] > 0)
            assert np.all(np.abs(brute[~nonzero]) <= 1e-12 * np.max(np.abs(brute)))
            worst = max(worst, float(np.max(np.abs(brute[nonzero] / closed[nonzero] - 1), initial=0.0)))
    assert max_eig < 0
    criterion(3, "B < 0, minors positive and match closed forms (rel)", worst, 1e-10)


def test_c04_n_squared_points(criterion):
    rng = np.random.default_rng(4)
    worst_res, min_count_margin, configs = 0.0, math.inf, 0
    while configs < 20:
        n = 2 + configs % 2
        fs0, lat = random_resonance_free(rng, n, 0.0)
        alpha = rng.uniform(-1, 1, n + 1)
        alpha *= rng.uniform(0.2, 1.0) * 1e-2 / np.linalg.norm(alpha)
        fs = fs0.replace(alpha=alpha)
        if not check_non_resonance(fs, lat).ok:
            continue
        configs += 1
        found = find_bifurcation_points(fs0, lat, 1024)
        accepted = []
        for p in found.points:
            if not (p.report.part1["ok"] and p.report.part2["ok"]):
                continue
            q = continue_alpha(fs0, lat, p, alpha, steps=2)
            rep = q.report
            res = [float(np.linalg.norm(assemble(fs, q.tau_star, k).A @ e)
                         / matrix_scale(assemble(fs, q.tau_star, k)))
                   for k, e in ((lat.k1, q.eta1), (lat.k2, q.eta2))]
            if rep.part1["kernel_dims"] == [1, 1] and max(res) < 1e-9 and rep.part2["ok"]:
                accepted.append(q)
                worst_res = max(worst_res, max(res))
        pairs = {(q.iota, q.kappa) for q in accepted}
        assert len(pairs) == n * n
        min_count_margin = min(min_count_margin, len(accepted) - n * n)
    criterion(4, "n^2 accepted points per config; worst scaled residual", worst_res, 1e-9,
              passed=min_count_margin >= 0 and worst_res < 1e-9)


def test_c05_nu_closed_form(criterion):
    worst = 0.0
    for fs, lat, p in _alpha0_points(5, 30):
        r, th = p.tau_star.r, p.tau_star.theta
        Q = [e @ (mode_data(fs, float(np.hypot(*k))).Sigma * e)
             for k, e in ((lat.k1, p.eta1), (lat.k2, p.eta2))]
        ref = 4 / r * abs(math.tan(th - lat.gamma2) - math.tan(th - lat.gamma1)) * Q[0] * Q[1]
        worst = max(worst, abs(abs(p.det_nu) / ref - 1))
    criterion(5, "|det nu| closed form at alpha = 0 (rel)", worst, 1e-8)


def test_c06_delta_closed_form(criterion):
    worst = 0.0
    for fs, lat, p in _alpha0_points(6, 30):
        r, th = p.tau_star.r, p.tau_star.theta
        z1, c1, _ = _zeta_chi(fs, lat.k1, r, th)
        z2, c2, _ = _zeta_chi(fs, lat.k2, r, th)
        tan_diff = math.tan(th - lat.gamma1) - math.tan(th - lat.gamma2)
        ref = abs(4 * z1 * z2 / r * c1 * c2 * tan_diff)
        got = abs(np.linalg.det(delta_matrix(fs, lat, p.tau_star)))
        worst = max(worst, abs(got / ref - 1))
    criterion(6, "|det Delta| closed form at alpha = 0 (rel)", worst, 1e-8)


def _violation_config():
    lat = Lattice.canonical([2 * math.pi, 0.0], [0.0, 2 * math.pi])

    def det_at_2k1(s):
        fs = FluidStack(n=1, rho=[1, 0], alpha=[0, 0], d=[1, 2], sigma=[s], g=1)
        r2 = 2 * (s + 1) * math.tanh(1)
        return det_A(assemble(fs, Tau(math.sqrt(r2), math.pi / 4), 2 * lat.k1))

    s = brentq(det_at_2k1, 0.1, 0.5, xtol=1e-15)
    return FluidStack(n=1, rho=[1, 0], alpha=[0, 0], d=[1, 2], sigma=[s], g=1), lat


def test_c07_sigma_rescaling(criterion):
    rng = np.random.default_rng(7)
    worst, cases = 0.0, 0
    while cases < 50:
        L = rng.uniform(3, 8)
        ang = rng.uniform(0.4, math.pi - 0.4)
        lat = Lattice.canonical([L, 0], [L * math.cos(ang), L * math.sin(ang)])
        fs = random_stack(rng, int(rng.integers(1, 4)), alpha_scale=0.3)
        if not check_non_resonance(fs, lat).ok:
            continue
        res = find_bifurcation_points(fs, lat, 256, verify=False)
        if not res.points:
            continue
        p = res.points[int(rng.integers(len(res.points)))]
        q = float(rng.choice([-1, 1]) * 10 ** rng.uniform(-4, -0.5))
        sig = rescaled_sigma(fs, lat, q)
        if np.any(sig <= 0):
            continue
        fs_q = fs.replace(sigma=sig)
        tau_q = Tau(math.sqrt(1 + q) * p.tau_star.r, p.tau_star.theta)
        for k in (lat.k1, lat.k2):
            A0 = assemble(fs, p.tau_star, k)
            Aq = assemble(fs_q, tau_q, k).A
            worst = max(worst, float(np.max(np.abs(Aq - (1 + q) * A0.A))) / matrix_scale(A0))
        cases += 1
    fs, lat = _violation_config()
    pts = find_bifurcation_points(fs, lat, 512).points
    assert pts and all(not p.report.part3["ok"] for p in pts)
    assert all(p.report.part1["ok"] and p.report.part2["ok"] for p in pts)
    q, _, rescued = rescue_sweep(fs, lat, pts[0])
    criterion(7, "A_q = (1+q) A_0 entrywise; violation cleared", worst, 1e-12,
              passed=worst < 1e-12 and abs(q) <= 1e-2 and rescued.report.ok)


def test_c08_classical_limit(criterion):
    fs = FluidStack(n=1, rho=[1, 0], alpha=[0, 0], d=[1, 2], sigma=[1], g=1)
    exact = 2 * math.tanh(1.0)
    k = np.array([1.0, 0.0])
    r2 = brentq(lambda x: det_A(assemble(fs, Tau(math.sqrt(x), 0.0), k)), 0.5, 3.0, xtol=1e-15)
    # the pipeline on the square lattice crosses at theta* = pi/4 with cos^2 = 1/2
    lat = Lattice.canonical([2 * math.pi, 0.0], [0.0, 2 * math.pi])
    p = find_bifurcation_points(fs, lat, 512).points[0]
    piped = p.tau_star.r**2 * math.cos(p.tau_star.theta - lat.gamma1) ** 2
    err = max(abs(r2 - exact), abs(piped - exact)) / exact
    criterion(8, "r*^2 = 2 tanh(1) (rel)", err, 1e-10)


def _accepted_points(seed, count):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        fs, lat = random_resonance_free(rng, int(rng.integers(1, 3)), 0.6)
        res = find_bifurcation_points(fs, lat, 512)
        out.extend((fs, lat, p) for p in res.points if p.report.ok)
    return out[:count]


def _curl(f, x, y, z, h):
    def d(axis):
        e = np.zeros(3)
        e[axis] = h
        return (f(x + e[0], y + e[1], z + e[2]) - f(x - e[0], y - e[1], z - e[2])) / (2 * h)

    dx, dy, dz = d(0), d(1), d(2)
    curl = np.stack([dy[..., 2] - dz[..., 1], dz[..., 0] - dx[..., 2], dx[..., 1] - dy[..., 0]], -1)
    return curl, dx[..., 0] + dy[..., 1] + dz[..., 2]


def test_c09_linear_field_physics(criterion):
    rng = np.random.default_rng(9)
    worst = {"beltrami": 0.0, "divergence": 0.0, "kinematic": 0.0, "mean": 0.0}
    for fs, lat, p in _accepted_points(9, 20):
        tau = p.tau_star
        for k, eta in ((lat.k1, p.eta1), (lat.k2, p.eta2)):
            mode = solve_mode(fs, lat, tau, k, eta)
            kmag = mode.kmag
            size = max(float(np.max(np.abs(w))) for w in mode.W)
            for j in range(1, fs.m + 1):
                lo, hi = fs.depth(j - 1), fs.depth(j)
                x, y = rng.uniform(0, 10, (2, 16))
                z = rng.uniform(lo + 0.05 * (hi - lo), hi - 0.05 * (hi - lo), 16)
                curl, div = _curl(lambda a, b, c: mode.velocity(j, a, b, c), x, y, z, 1e-5)
                u = mode.velocity(j, x, y, z)
                scale = (kmag + abs(fs.beltrami(j))) * size
                worst["beltrami"] = max(worst["beltrami"],
                                        float(np.max(np.abs(curl - fs.beltrami(j) * u))) / scale)
                worst["divergence"] = max(worst["divergence"], float(np.max(np.abs(div))) / scale)
                # cell average over a uniform grid at a few heights
                a, b = np.meshgrid(np.arange(24) / 24, np.arange(24) / 24, indexing="ij")
                X = a * lat.lambda1[0] + b * lat.lambda2[0]
                Y = a * lat.lambda1[1] + b * lat.lambda2[1]
                for zz in np.linspace(lo, hi, 3):
                    mean = mode.velocity(j, X, Y, np.full_like(X, zz)).mean(axis=(0, 1))
                    worst["mean"] = max(worst["mean"], float(np.max(np.abs(mean))) / size)
            for j in range(1, fs.n + 1):
                x, y = rng.uniform(0, 10, (2, 16))
                h = 1e-5
                eta_j = lambda a, b: eta[j - 1] * np.cos(k[0] * a + k[1] * b)  # noqa: E731
                gx = (eta_j(x + h, y) - eta_j(x - h, y)) / (2 * h)
                gy = (eta_j(x, y + h) - eta_j(x, y - h)) / (2 * h)
                U = trivial_velocity(fs, tau, j, fs.depth(j))
                target = U[0] * gx + U[1] * gy
                ref = tau.r * kmag * max(abs(eta[j - 1]), 1e-3)
                for layer in (j, j + 1):
                    if layer > fs.m:
                        continue
                    w3 = mode.velocity(layer, x, y, np.full_like(x, fs.depth(j)))[..., 2]
                    worst["kinematic"] = max(worst["kinematic"],
                                             float(np.max(np.abs(w3 - target))) / ref)
    value = max(worst.values())
    criterion(9, "Beltrami/div/kinematic/mean residuals " + " ".join(
        f"{k}={v:.1e}" for k, v in worst.items()), value, 1e-6)


def test_c10_gradients(criterion):
    rng = np.random.default_rng(10)
    worst = 0.0
    for _ in range(40):
        fs, lat = random_resonance_free(rng, int(rng.integers(1, 5)), 0.8)
        tau = Tau(rng.uniform(0.3, 3), rng.uniform(0, 2 * math.pi))
        k = lat.k1 + (lat.k2 if rng.integers(2) else 0)
        dm = assemble(fs, tau, k)
        h = 1e-6
        fr = (assemble(fs, Tau(tau.r + h, tau.theta), k).A
              - assemble(fs, Tau(tau.r - h, tau.theta), k).A) / (2 * h)
        ft = (assemble(fs, Tau(tau.r, tau.theta + h), k).A
              - assemble(fs, Tau(tau.r, tau.theta - h), k).A) / (2 * h)
        worst = max(worst, _rel(fr, dA_dr(dm)), _rel(ft, dA_dtheta(dm)))
    for fs, lat, p in _accepted_points(11, 10):
        h = 1e-6
        r, th = p.tau_star.r, p.tau_star.theta
        for i, (k, e) in enumerate(((lat.k1, p.eta1), (lat.k2, p.eta2))):
            def quad(rr, tt):
                return e @ assemble(fs, Tau(rr, tt), k).A @ e
            fd = [(quad(r + h, th) - quad(r - h, th)) / (2 * h),
                  (quad(r, th + h) - quad(r, th - h)) / (2 * h)]
            worst = max(worst, _rel(fd, p.nu[i]))
    criterion(10, "dA/dr, dA/dtheta, nu vs central differences (rel)", worst, 1e-6)


def test_c11_vertical_modes(criterion):
    rng = np.random.default_rng(11)
    cont, ode, bdry = 0.0, 0.0, 0.0
    for _ in range(30):
        fs = random_stack(rng, 2, top_mass=True, alpha_scale=2.0)
        j = int(rng.integers(1, 4))
        a = abs(fs.beltrami(j)) or 1.0
        fs = fs.replace(alpha=np.where(np.arange(3) == j - 1, a, fs.alpha))
        lo, hi = fs.depth(j - 1), fs.depth(j)
        h = hi - lo
        z = np.linspace(lo, hi, 11)
        # across |k| = |alpha| and across the series cutoff on both sides
        ref = (psi(fs, j, a, z), psi_prime(fs, j, a, z))
        for eps in (1e-9, -1e-9):
            kk = math.sqrt(a * a + eps / h**2)
            cont = max(cont, _rel(psi(fs, j, kk, z), ref[0]), _rel(psi_prime(fs, j, kk, z), ref[1]))
        for s in (1e-4, -1e-4):
            k_lo = math.sqrt(max(a * a + s * (1 - 1e-12) / h**2, 0))
            k_hi = math.sqrt(max(a * a + s * (1 + 1e-12) / h**2, 0))
            cont = max(cont, _rel(psi(fs, j, k_lo, z), psi(fs, j, k_hi, z)),
                       _rel(psi_prime(fs, j, k_lo, z), psi_prime(fs, j, k_hi, z)))
        for kk in (0.5 * a, a, 1.7 * a, a + 1e-5, 6.0):
            try:
                ps = psi(fs, j, kk, z)
            except ArithmeticError:
                continue
            # psi'' by complex step on the analytic psi'
            zc = z[1:-1] + 1e-20j
            d2 = np.imag(psi_prime(fs, j, kk, zc)) / 1e-20
            dz = np.imag(psi(fs, j, kk, zc)) / 1e-20
            size = (kk * kk + a * a) * max(np.max(np.abs(ps)), 1.0)
            ode = max(ode, float(np.max(np.abs(d2 - (kk * kk - a * a) * ps[1:-1]))) / size,
                      _rel(dz, psi_prime(fs, j, kk, z[1:-1])))
            bdry = max(bdry, abs(float(psi(fs, j, kk, lo))), abs(float(psi(fs, j, kk, hi)) - 1),
                       abs(float(phi(fs, j, kk, lo)) - 1), abs(float(phi(fs, j, kk, hi))))
    assert bdry < 1e-14, bdry
    criterion(11, f"continuity {cont:.1e}, ODE {ode:.1e}, boundary {bdry:.1e}",
              max(cont, ode), 1e-8, passed=cont < 1e-8 and ode < 1e-8 and bdry < 1e-14)


def test_c12_lyapunov_schmidt(criterion):
    rng = np.random.default_rng(12)
    p = pitchfork_problem()
    err = 0.0
    for _ in range(10):
        s = rng.uniform(-0.05, 0.05, 2)
        err = max(err, float(np.max(np.abs(solve_branch(p, s).c - p.c_star - s**2))))
    cp = complement_problem()
    for _ in range(10):
        s = rng.uniform(-0.05, 0.05, 2)
        err = max(err, float(np.max(np.abs(reduce(cp, s, cp.c_star) - [0, 0, -s[0] ** 2]))))
    q = coupled_problem()
    s = np.array([0.6e-3, 0.8e-3])
    b = solve_branch(q, s)
    x_lin = s @ q.kernel_basis
    ratio = max(float(np.linalg.norm(b.x - x_lin)), float(np.linalg.norm(b.c - q.c_star))) / 1e-3
    assert np.max(np.abs(b.c - coupled_branch(s, q.c_star))) < 1e-10
    criterion(12, f"toy branches (o(|s|) ratio {ratio:.1e})", err, 1e-10,
              passed=err < 1e-10 and ratio < 0.1)


def test_c13_square_symmetry(criterion):
    fs = FluidStack(n=2, rho=[3.0, 2.0, 0.5], alpha=[0, 0, 0], d=[1.0, 1.8, 3.0],
                    sigma=[0.7, 0.4], g=1.0)
    lat = Lattice.canonical([2 * math.pi, 0.0], [0.0, 2 * math.pi])
    pts = find_bifurcation_points(fs, lat, 1024).points
    eta_err = 0.0
    for iota in (1, 2):
        vecs = [p.eta1 for p in pts if p.iota == iota] + [p.eta2 for p in pts if p.kappa == iota]
        eta_err = max(eta_err, max(float(np.max(np.abs(v - vecs[0]))) for v in vecs))
    swap_err, compared = 0.0, 0
    for A in pts:
        if A.iota == A.kappa:
            continue
        target = (math.pi / 2 - A.tau_star.theta) % (2 * math.pi)
        for B in pts:
            if (B.iota, B.kappa) != (A.kappa, A.iota):
                continue
            dth = (B.tau_star.theta - target) % math.pi
            if min(dth, math.pi - dth) > 1e-8:
                continue
            # theta* and theta* + pi describe the same crossing; use the mirror image of A
            B = dataclasses.replace(B, tau_star=Tau(B.tau_star.r, target))
            sa = assemble_first_order(fs, lat, A, 0.01, 0.02, shape=(16, 16), nz=9, force=True)
            sb = assemble_first_order(fs, lat, B, 0.02, 0.01, shape=(16, 16), nz=9, force=True)
            errs = [float(np.max(np.abs(sb.eta - sa.eta.transpose(0, 2, 1))))]
            for ua, ub, pa, pb in zip(sa.u, sb.u, sa.p, sb.p):
                mirrored = ua.transpose(1, 0, 2, 3)[..., [1, 0, 2]]
                errs.append(float(np.max(np.abs(ub - mirrored))) / float(np.max(np.abs(ua))))
                errs.append(float(np.max(np.abs(pb - pa.transpose(1, 0, 2))))
                            / float(np.max(np.abs(pa))))
            swap_err = max(swap_err, *errs)
            compared += 1
    assert compared >= 2
    criterion(13, f"eta_iota(k1) = eta_iota(k2) ({eta_err:.1e}); swapped fields", swap_err, 1e-10,
              passed=eta_err < 1e-12 and swap_err < 1e-10)


def test_c14_rejection_scenario(criterion):
    fs = FluidStack(n=1, rho=[1, 0], alpha=[1.4, 0], d=[2.4, 3.7], sigma=[0.3], g=1)
    lat = Lattice.canonical([6.75, -4.05], [0, 7.75])
    assert check_non_resonance(fs, lat).ok
    assert fs.rho[0] * fs.alpha[0] - fs.rho[1] * fs.alpha[1] != 0
    res = find_bifurcation_points(fs, lat)
    accepted = [p for p in res.points if p.report.ok]
    # independent oracle: scalar eigencurves from the explicit mode slope
    h = fs.d[0]
    theta = np.linspace(0, math.pi, 20001)
    curves = []
    for k, gamma in ((lat.kmag1, lat.gamma1), (lat.kmag2, lat.gamma2)):
        b = math.sqrt(fs.alpha[0] ** 2 - k * k) * h
        B = -fs.rho[0] * b / math.tan(b) / h
        Sig = fs.sigma[0] * k * k + fs.rho[0] * fs.g
        Dv = fs.rho[0] * fs.alpha[0]
        beta = theta - fs.alpha[0] * h - gamma
        curves.append((np.cos(beta) ** 2 * B + np.cos(beta) * np.sin(beta) * Dv) / Sig)
    diff = curves[0] - curves[1]
    idx = np.flatnonzero(np.sign(diff[:-1]) != np.sign(diff[1:]))
    mus = curves[0][idx]
    assert len(idx) == len(res.rejections) and np.all(mus > 0)
    reasons = {r.reason for r in res.rejections}
    ok = (not accepted and bool(res.rejections) and reasons <= {"positive_mu", "tangency", "lost_bracket"}
          and all(r.detail for r in res.rejections))
    criterion(14, f"no accepted points, {len(res.rejections)} reasoned rejections (min oracle mu)",
              float(np.min(mus)), 0.0, passed=ok)
