"""Independent reference computations used by the tests.

None of these share code paths with the package beyond the public
parameter types: Fock-space brute force for Gaussian dynamics, closed forms
for the static detector pair and the tanh expansion model, direct
quadrature for conformal time, and a vector-by-vector lattice mode sum.
"""
import numpy as np
import scipy.sparse as sp
from scipy.integrate import quad
from scipy.sparse.linalg import expm_multiply
from scipy.special import erfcx

# --- Fock space ------------------------------------------------------------------


def fock_annihilators(n_modes: int, trunc: int):
    a = sp.diags(np.sqrt(np.arange(1, trunc)), 1, format="csr")
    eye = sp.identity(trunc, format="csr")
    ops = []
    for k in range(n_modes):
        op = None
        for j in range(n_modes):
            f = a if j == k else eye
            op = f if op is None else sp.kron(op, f, format="csr")
        ops.append(op)
    return ops


def fock_hamiltonian(w, g, ops):
    """``sum w_ij a_i^+ a_j + g_ij a_i^+ a_j^+ + conj(g_ij) a_j a_i``."""
    n = len(ops)
    H = None
    for i in range(n):
        for j in range(n):
            ai, aj = ops[i], ops[j]
            term = w[i, j] * (ai.getH() @ aj) + g[i, j] * (ai.getH() @ aj.getH()) + np.conj(g[i, j]) * (aj @ ai)
            H = term if H is None else H + term
    return H.tocsr()


def fock_vacuum(n_modes: int, trunc: int):
    psi = np.zeros(trunc ** n_modes, dtype=complex)
    psi[0] = 1.0
    return psi


def fock_evolve(H, psi, t):
    return expm_multiply(-1j * t * H, psi)


def fock_covariance(psi, ops):
    """``sigma_ij = <x_i x_j + x_j x_i>`` in the order ``(q.., p..)``, vacuum = I."""
    n = len(ops)
    quads = [(a + a.getH()) / np.sqrt(2) for a in ops] + [1j * (a.getH() - a) / np.sqrt(2) for a in ops]
    vecs = [X @ psi for X in quads]
    sig = np.empty((2 * n, 2 * n))
    for i in range(2 * n):
        for j in range(2 * n):
            sig[i, j] = 2 * np.real(np.vdot(vecs[i], vecs[j]))
    return 0.5 * (sig + sig.T)


def fock_tms(r: float, trunc: int):
    n = np.arange(trunc)
    c = np.tanh(r) ** n / np.cosh(r)
    psi = np.zeros((trunc, trunc), dtype=complex)
    psi[n, n] = c
    return psi.ravel()


def fock_log_negativity(psi, trunc: int):
    """``ln ||rho^{T_B}||_1`` by explicit partial transposition."""
    rho = np.outer(psi, psi.conj()).reshape(trunc, trunc, trunc, trunc)
    pt = rho.transpose(0, 3, 2, 1).reshape(trunc * trunc, trunc * trunc)
    ev = np.linalg.eigvalsh(0.5 * (pt + pt.conj().T))
    return float(np.log(np.abs(ev).sum()))


def fock_reduced_thermal_nbar(psi, trunc: int):
    """Mean number of the first mode after tracing out the second."""
    M = psi.reshape(trunc, trunc)
    red = M @ M.conj().T
    return float(np.real(np.trace(red @ np.diag(np.arange(trunc)))))


# --- static detector pair, Gaussian switching -------------------------------------


def static_A(sigma_omega: float) -> float:
    """Local term for unit width and coupling: ``(e^{-x^2} - sqrt(pi) x erfc(x)) / 4 pi``."""
    x = sigma_omega
    return float(np.exp(-x * x) * (1 - np.sqrt(np.pi) * x * erfcx(x)) / (4 * np.pi))


def static_X(L: float, sigma_omega: float) -> complex:
    """Nonlocal term for two static detectors at distance ``L`` (``sigma = 1``).

    Reduces the double integral to a principal value over the time difference.
    """
    f = lambda u: np.exp(-u * u / 4)
    pv = (-quad(lambda u: f(u) / (u + L), 0, 60)[0] + quad(f, 0, 60, weight="cauchy", wvar=L)[0]) / (2 * L)
    res = 1j * np.pi * np.exp(-L * L / 4) / (2 * L)
    return complex(np.sqrt(np.pi) / (2 * np.pi ** 2) * np.exp(-sigma_omega ** 2) * (pv + res))


# --- tanh expansion model -----------------------------------------------------------


def tanh_model_beta2(k, m, eps, rho):
    """Closed-form ``|beta|^2`` for ``C = 1 + eps tanh(rho eta)`` (boson)."""
    wi = np.sqrt(k * k + m * m * (1 - eps))
    wo = np.sqrt(k * k + m * m * (1 + eps))
    wm = 0.5 * (wo - wi)
    return np.sinh(np.pi * wm / rho) ** 2 / (np.sinh(np.pi * wi / rho) * np.sinh(np.pi * wo / rho))


# --- cosmology -------------------------------------------------------------------------


def conformal_time_quadrature(a, t0, t1):
    """``int dt / a(t)`` by adaptive quadrature."""
    return quad(lambda t: 1.0 / a(t), t0, t1, epsabs=0, epsrel=1e-12, limit=400)[0]


def naive_mode_sum(a, eta, Omega, x0, L, T0, T, n_max, panel=0.01, order=20):
    """``sum_n |I_n|^2`` over every lattice vector ``0 < |n| <= n_max`` one at a time.

    Sudden switching on ``[T0, T]``, with the amplitude
    ``int dt e^{-2 pi i n.x0/L} e^{i (Omega t + w_n eta(t))} / (a(t) sqrt(2 w_n L^3))``.
    """
    edges = np.unique(np.concatenate([np.geomspace(T0, min(1.0, T), 80), np.arange(min(1.0, T), T, panel), [T]]))
    x, wq = np.polynomial.legendre.leggauss(order)
    mid, hw = 0.5 * (edges[1:] + edges[:-1]), 0.5 * (edges[1:] - edges[:-1])
    t = (mid[:, None] + hw[:, None] * x).ravel()
    wt = (hw[:, None] * wq).ravel()
    at, et = a(t), eta(t)
    total = 0.0
    r = range(-n_max, n_max + 1)
    for nx in r:
        for ny in r:
            for nz in r:
                s = nx * nx + ny * ny + nz * nz
                if s == 0 or s > n_max * n_max:
                    continue
                w = 2 * np.pi * np.sqrt(s) / L
                pos = np.exp(-2j * np.pi * (nx * x0[0] + ny * x0[1] + nz * x0[2]) / L)
                I = pos * np.sum(wt * np.exp(1j * (Omega * t + w * et)) / at) / np.sqrt(2 * w * L ** 3)
                total += abs(I) ** 2
    return total
