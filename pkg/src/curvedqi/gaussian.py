"""Phase-space engine for zero-mean Gaussian states.

Quadratures are stacked as ``(q_d1..q_dM, q_1..q_N, p_d1..p_dM, p_1..p_N)``
with ``q = (a + a^dag)/sqrt(2)`` and ``p = i(a^dag - a)/sqrt(2)``. The
covariance convention is ``sigma_ij = <x_i x_j + x_j x_i> - 2<x_i><x_j>``, so
the vacuum is the identity.

The symplectic form is called ``omega`` in code; detector gaps live elsewhere
and never share that name.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp

SYM_TOL = 1e-12
UNCERTAINTY_TOL = 1e-9


class GaussianError(ValueError):
    """Invalid Gaussian input (dimension, layout or physicality)."""


class IntegrationError(RuntimeError):
    """Raised when the propagator integration fails.

    Attributes:
        t_fail: time at which the integrator gave up
    """

    def __init__(self, message: str, t_fail: float):
        super().__init__(f"{message} (at t={t_fail:.6g})")
        self.t_fail = t_fail


@dataclass(frozen=True)
class PhaseSpaceLayout:
    """Mode bookkeeping: ``n_detectors`` detector modes followed by field modes."""

    n_detectors: int = 0
    n_field_modes: int = 0

    def __post_init__(self):
        if self.n_detectors < 0 or self.n_field_modes < 0:
            raise GaussianError("mode counts must be non-negative")
        if self.n < 1:
            raise GaussianError("layout needs at least one mode")

    @property
    def n(self) -> int:
        return self.n_detectors + self.n_field_modes

    @property
    def dim(self) -> int:
        return 2 * self.n

    def quadrature_indices(self, modes: Sequence[int]) -> np.ndarray:
        """Row indices of ``(q_modes..., p_modes...)`` for the given mode indices."""
        modes = np.asarray(modes, dtype=int)
        return np.concatenate([modes, modes + self.n])


def symplectic_form(layout: PhaseSpaceLayout | int) -> np.ndarray:
    r"""Block symplectic form :math:`[[0, I_n], [-I_n, 0]]`.

    Args:
        layout: a layout or a bare mode count

    Returns:
        array: real :math:`2n \times 2n` matrix
    """
    n = layout if isinstance(layout, (int, np.integer)) else layout.n
    if n < 1:
        raise GaussianError("n must be >= 1")
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, eye], [-eye, zero]])


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class CovarianceState:
    """Zero-mean Gaussian state.

    ``sigma`` is symmetrized on construction. Physicality
    (``sigma + i*omega >= 0``) is checked unless ``check=False``.
    """

    layout: PhaseSpaceLayout
    sigma: np.ndarray
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        s = np.asarray(self.sigma, dtype=float)
        if s.shape != (self.layout.dim, self.layout.dim):
            raise GaussianError(
                f"sigma has shape {s.shape}, layout expects {(self.layout.dim,) * 2}"
            )
        object.__setattr__(self, "sigma", _freeze(0.5 * (s + s.T)))
        if self.check:
            m = uncertainty_margin(self.sigma)
            if m < -UNCERTAINTY_TOL:
                raise GaussianError(f"uncertainty relation violated (min eig {m:.3e})")

    @property
    def n(self) -> int:
        return self.layout.n


@dataclass(frozen=True)
class SymplecticPropagator:
    layout: PhaseSpaceLayout
    S: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        S = np.asarray(self.S, dtype=float)
        if S.shape != (self.layout.dim, self.layout.dim):
            raise GaussianError("propagator shape does not match layout")
        object.__setattr__(self, "S", _freeze(S))

    def symplectic_defect(self) -> float:
        om = symplectic_form(self.layout)
        return float(np.max(np.abs(self.S @ om @ self.S.T - om)))


def uncertainty_margin(sigma: np.ndarray) -> float:
    """Smallest eigenvalue of ``sigma + i*omega``; non-negative for physical states."""
    n = sigma.shape[0] // 2
    return float(np.linalg.eigvalsh(sigma + 1j * symplectic_form(n)).min())


def assemble_F(w: np.ndarray, g: np.ndarray) -> np.ndarray:
    r"""Hermitian quadrature matrix of :math:`a^{\dagger T} w a + a^{\dagger T} g a^\dagger + a^T g^\dagger a`.

    Returns :math:`F = [[A, X], [X^\dagger, B]]` with
    :math:`A = (w+g+g^\dagger)/2`, :math:`B = (w-g-g^\dagger)/2` and
    :math:`X = i(w-g+g^\dagger)/2`, so that :math:`H = x^T F x` up to a constant.

    Args:
        w (array): Hermitian :math:`n \times n` matrix
        g (array): complex :math:`n \times n` matrix

    Returns:
        array: complex :math:`2n \times 2n` matrix
    """
    w = np.atleast_2d(np.asarray(w, dtype=complex))
    g = np.atleast_2d(np.asarray(g, dtype=complex))
    if w.shape != g.shape or w.shape[0] != w.shape[1]:
        raise GaussianError(f"w {w.shape} and g {g.shape} must be equal square shapes")
    gh = g.conj().T
    A = 0.5 * (w + g + gh)
    B = 0.5 * (w - g - gh)
    X = 0.5j * (w - g + gh)
    return np.block([[A, X], [X.conj().T, B]])


def symmetric_generator(w: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Real matrix ``F + F^T`` driving ``dS/dt = omega (F + F^T) S``."""
    F = assemble_F(w, g)
    Fs = F + F.T
    return Fs.real


@dataclass(frozen=True)
class QuadraticGenerator:
    """Time-dependent quadratic Hamiltonian given by ladder coefficients.

    ``w_of_t`` must return a Hermitian matrix, ``g_of_t`` any complex matrix.
    ``fsym_of_t`` may be supplied to bypass assembly when the real generator
    is cheaper to build directly.
    """

    layout: PhaseSpaceLayout
    w_of_t: Callable[[float], np.ndarray]
    g_of_t: Callable[[float], np.ndarray]
    fsym_of_t: Callable[[float], np.ndarray] | None = None

    @classmethod
    def constant(cls, layout: PhaseSpaceLayout, w, g=None) -> "QuadraticGenerator":
        w = np.atleast_2d(np.asarray(w, dtype=complex))
        g = np.zeros_like(w) if g is None else np.atleast_2d(np.asarray(g, dtype=complex))
        fs = symmetric_generator(w, g)
        return cls(layout, lambda t: w, lambda t: g, lambda t: fs)

    def F(self, t: float) -> np.ndarray:
        return assemble_F(self.w_of_t(t), self.g_of_t(t))

    def F_sym(self, t: float) -> np.ndarray:
        if self.fsym_of_t is not None:
            return self.fsym_of_t(t)
        return symmetric_generator(self.w_of_t(t), self.g_of_t(t))

    def check_hermitian(self, times: Sequence[float]) -> float:
        """Largest Hermiticity defect of ``w`` over ``times``."""
        defect = 0.0
        for t in times:
            w = np.atleast_2d(self.w_of_t(t))
            defect = max(defect, float(np.max(np.abs(w - w.conj().T))))
        return defect


def evolve_propagator(
    gen: QuadraticGenerator,
    t_span: tuple[float, float],
    rel_tol: float = 1e-10,
    abs_tol: float = 1e-12,
    t_eval: Sequence[float] | None = None,
    S0: np.ndarray | None = None,
):
    r"""Integrate :math:`\dot S = \Omega F^{sym}(t) S` with :math:`S(t_0) = I`.

    Uses an embedded Runge-Kutta 5(4) pair.

    Args:
        gen: quadratic generator
        t_span: ``(t0, t1)``
        rel_tol: relative tolerance in ``[1e-13, 1e-4]``
        abs_tol: absolute tolerance
        t_eval: optional sample times; when given a list of propagators is returned
        S0: optional initial matrix (defaults to identity)

    Returns:
        SymplecticPropagator or list of them (one per ``t_eval`` entry)
    """
    if not 1e-13 <= rel_tol <= 1e-4:
        raise GaussianError(f"rel_tol={rel_tol} outside [1e-13, 1e-4]")
    layout = gen.layout
    n = layout.n
    d = layout.dim
    t0, t1 = float(t_span[0]), float(t_span[1])
    y0 = (np.eye(d) if S0 is None else np.asarray(S0, dtype=float)).ravel()
    if t1 == t0:
        S = y0.reshape(d, d)
        if t_eval is not None:
            return [SymplecticPropagator(layout, S, t0) for _ in t_eval]
        return SymplecticPropagator(layout, S, t1)

    def rhs(t, y):
        M = gen.F_sym(t) @ y.reshape(d, d)
        # omega @ M without forming omega
        return np.concatenate([M[n:], -M[:n]]).ravel()

    sol = solve_ivp(
        rhs, (t0, t1), y0, method="RK45", rtol=rel_tol, atol=abs_tol,
        t_eval=None if t_eval is None else np.asarray(t_eval, dtype=float),
    )
    if sol.status != 0:
        t_fail = float(sol.t[-1]) if sol.t.size else t0
        raise IntegrationError(f"propagator integration failed: {sol.message}", t_fail)
    if t_eval is not None:
        return [
            SymplecticPropagator(layout, sol.y[:, k].reshape(d, d), float(sol.t[k]))
            for k in range(sol.t.size)
        ]
    return SymplecticPropagator(layout, sol.y[:, -1].reshape(d, d), t1)


def evolve_covariance(state: CovarianceState, prop: SymplecticPropagator) -> CovarianceState:
    """``sigma -> S sigma S^T``, symmetrized."""
    if state.layout.dim != prop.layout.dim:
        raise GaussianError("layout mismatch between state and propagator")
    S = prop.S
    return CovarianceState(state.layout, S @ state.sigma @ S.T, check=False)


def vacuum_state(layout: PhaseSpaceLayout) -> CovarianceState:
    return CovarianceState(layout, np.eye(layout.dim))


def thermal_state(layout: PhaseSpaceLayout, nbar) -> CovarianceState:
    """Product thermal state, ``(2 nbar + 1) I`` per mode.

    Args:
        layout: mode layout
        nbar (float or array): mean occupation, scalar or one per mode
    """
    nbar = np.broadcast_to(np.asarray(nbar, dtype=float), (layout.n,))
    if np.any(nbar < 0):
        raise GaussianError("nbar must be non-negative")
    diag = np.tile(2 * nbar + 1, 2)
    return CovarianceState(layout, np.diag(diag))


def two_mode_squeezed_state(r: float) -> CovarianceState:
    r"""Two-mode squeezed vacuum :math:`\sum_n \tanh^n r / \cosh r |nn\rangle`.

    Quadrature order is ``(q1, q2, p1, p2)``; the q-q correlation is
    ``+sinh 2r`` and the p-p correlation ``-sinh 2r``.
    """
    c, s = np.cosh(2 * r), np.sinh(2 * r)
    sigma = np.array(
        [[c, s, 0, 0], [s, c, 0, 0], [0, 0, c, -s], [0, 0, -s, c]], dtype=float
    )
    return CovarianceState(PhaseSpaceLayout(0, 2), sigma)


def direct_sum(a: CovarianceState, b: CovarianceState, layout: PhaseSpaceLayout | None = None) -> CovarianceState:
    """Tensor product of two Gaussian states; ``a``'s modes come first."""
    na, nb = a.n, b.n
    n = na + nb
    if layout is None:
        layout = PhaseSpaceLayout(0, n)
    if layout.n != n:
        raise GaussianError("target layout has the wrong number of modes")
    ia = np.concatenate([np.arange(na), n + np.arange(na)])
    ib = np.concatenate([na + np.arange(nb), n + na + np.arange(nb)])
    sigma = np.zeros((2 * n, 2 * n))
    sigma[np.ix_(ia, ia)] = a.sigma
    sigma[np.ix_(ib, ib)] = b.sigma
    return CovarianceState(layout, sigma, check=False)


def partial_state(state: CovarianceState, modes: Sequence[int], layout: PhaseSpaceLayout | None = None) -> CovarianceState:
    """Reduced state on ``modes`` (principal submatrix of sigma)."""
    modes = list(modes)
    if not modes:
        raise GaussianError("mode subset is empty")
    if min(modes) < 0 or max(modes) >= state.n:
        raise GaussianError("mode index outside layout")
    idx = state.layout.quadrature_indices(modes)
    if layout is None:
        layout = PhaseSpaceLayout(0, len(modes))
    return CovarianceState(layout, state.sigma[np.ix_(idx, idx)], check=False)


def _symplectic_spectrum(sigma: np.ndarray) -> np.ndarray:
    n = sigma.shape[0] // 2
    ev = np.sort(np.abs(np.linalg.eigvals(1j * symplectic_form(n) @ sigma)))
    # eigenvalues come in +/- pairs
    return ev[::2]


def symplectic_eigenvalues(state: CovarianceState) -> np.ndarray:
    """Sorted symplectic eigenvalues (``>= 1`` for physical states)."""
    if np.linalg.eigvalsh(state.sigma).min() <= 0:
        raise GaussianError("covariance is not positive definite")
    return _symplectic_spectrum(state.sigma)


def purity(state: CovarianceState) -> float:
    det = np.linalg.det(state.sigma)
    if det <= 0:
        raise GaussianError("covariance is not positive definite")
    return float(1.0 / np.sqrt(det))


def mean_excitation(state: CovarianceState, mode: int) -> float:
    """Mean number ``(sigma_qq + sigma_pp - 2)/4`` of one mode."""
    n = state.n
    return float((state.sigma[mode, mode] + state.sigma[mode + n, mode + n] - 2) / 4)


def log_negativity_two_mode(state: CovarianceState) -> float:
    """Gaussian log-negativity (natural log) of a two-mode state.

    Partial transposition flips the sign of the second mode's momentum.
    """
    if state.n != 2:
        raise GaussianError("log-negativity needs exactly two modes")
    if uncertainty_margin(state.sigma) < -UNCERTAINTY_TOL:
        raise GaussianError("invalid covariance")
    flip = np.diag([1.0, 1.0, 1.0, -1.0])
    nu_min = _symplectic_spectrum(flip @ state.sigma @ flip)[0]
    return float(max(0.0, -np.log(nu_min)))
