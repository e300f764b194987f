"""Bogoliubov coefficients for the tanh expansion model, entropy spectra and
the Rindler/Unruh chain.

Boson modes solve ``chi'' + (k^2 + m^2 C(eta)) chi = 0`` with
``C = 1 + eps*tanh(rho*eta)``. Fermion modes use the second-order reduction
``u'' + (k^2 + M^2 + i M') u = 0`` of the 1+1 Dirac system
``i u' = M u + k v``, ``i v' = k u - M v`` with ``M = m*a(eta)`` and
``a = 1 + eps*tanh(rho*eta)``.

Coefficients are defined through ``u_in = alpha*u_out + beta*conj(u_out)``
(boson) and the analogous spinor expansion for fermions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal

import numpy as np
from scipy.integrate import solve_ivp

Statistics = Literal["boson", "fermion"]

LAMBDA_WINDOW = 20.0  # rho*eta extent on each side; tanh(20) = 1 - 8.5e-18
NORM_TOL = 1e-8


class BogoliubovError(ValueError):
    pass


@dataclass(frozen=True)
class ExpansionModel:
    """Expansion profile with total volume ``epsilon`` and rapidity ``rho``."""

    epsilon: float
    rho: float
    mass: float = 0.0
    statistics: Statistics = "boson"

    def __post_init__(self):
        errs = []
        if not 0 < self.epsilon < 1:
            errs.append(f"epsilon={self.epsilon} must lie in (0, 1)")
        if not self.rho > 0:
            errs.append(f"rho={self.rho} must be positive")
        if not self.mass >= 0:
            errs.append(f"mass={self.mass} must be non-negative")
        if self.statistics not in ("boson", "fermion"):
            errs.append(f"statistics={self.statistics!r} must be 'boson' or 'fermion'")
        if errs:
            raise BogoliubovError("; ".join(errs))

    def a(self, eta):
        return 1 + self.epsilon * np.tanh(self.rho * eta)

    def a_prime(self, eta):
        return self.epsilon * self.rho / np.cosh(self.rho * eta) ** 2

    def C(self, eta):
        """Conformal factor: ``a`` for bosons, ``a**2`` for fermions."""
        a = self.a(eta)
        return a if self.statistics == "boson" else a * a

    @property
    def C_in(self) -> float:
        a = 1 - self.epsilon
        return a if self.statistics == "boson" else a * a

    @property
    def C_out(self) -> float:
        a = 1 + self.epsilon
        return a if self.statistics == "boson" else a * a

    @property
    def mu_in(self) -> float:
        return self.mass * (1 - self.epsilon)

    @property
    def mu_out(self) -> float:
        return self.mass * (1 + self.epsilon)


@dataclass(frozen=True)
class BogoliubovPair:
    k: float
    alpha: complex
    beta: complex
    statistics: Statistics = "boson"

    @property
    def norm(self) -> float:
        """``|alpha|^2 - |beta|^2`` (boson) or ``|alpha|^2 + |beta|^2`` (fermion)."""
        s = -1.0 if self.statistics == "boson" else 1.0
        return abs(self.alpha) ** 2 + s * abs(self.beta) ** 2


def asymptotic_frequencies(k: float, model: ExpansionModel) -> tuple[float, float]:
    """``(omega_in, omega_out)`` from the asymptotic dispersion relations."""
    if k == 0:
        raise BogoliubovError("zero mode k=0 is excluded")
    m2 = model.mass ** 2
    return math.sqrt(k * k + m2 * model.C_in), math.sqrt(k * k + m2 * model.C_out)


def _contour_offset(model: ExpansionModel, depth: float) -> float:
    # nearest singularities of tanh(rho*eta) sit at rho*eta = -i*pi/2 and +i*pi/2;
    # moving into the lower half plane amplifies the negative-frequency part
    if not 0 <= depth < 1:
        raise BogoliubovError("contour depth must lie in [0, 1)")
    return -depth * math.pi / (2 * model.rho)


def _integrate(rhs, eta0: complex, eta1: complex, y0: np.ndarray, tol: float):
    """Integrate a complex first-order system along the segment ``eta0 -> eta1``."""
    d = eta1 - eta0
    length = abs(d)
    unit = d / length
    n = y0.size

    def f(s, y):
        z = y[:n] + 1j * y[n:]
        dz = unit * rhs(eta0 + unit * s, z)
        return np.concatenate([dz.real, dz.imag])

    y0r = np.concatenate([y0.real, y0.imag])
    sol = solve_ivp(f, (0.0, length), y0r, method="DOP853", rtol=tol, atol=tol * 1e-3)
    if sol.status != 0:
        raise BogoliubovError(f"mode integration failed: {sol.message}")
    y = sol.y[:, -1]
    return y[:n] + 1j * y[n:]


def solve_mode_boson(
    k: float,
    model: ExpansionModel,
    tol: float = 1e-12,
    window: float = LAMBDA_WINDOW,
    contour_depth: float = 0.75,
) -> BogoliubovPair:
    r"""Bogoliubov pair for one bosonic momentum by mode matching.

    The mode equation is analytic in :math:`\eta`, so integration runs along
    :math:`\mathrm{Im}\,\eta = -\text{depth}\cdot\pi/(2\rho)` where the
    asymptotic regions are still flat. This keeps exponentially small
    :math:`|\beta|` resolvable; ``contour_depth=0`` integrates on the real axis.

    Args:
        k: momentum, nonzero
        model: boson expansion model
        tol: relative integration tolerance
        window: half-width of the integration range in units of :math:`1/\rho`
        contour_depth: fraction of the distance to the nearest singularity

    Returns:
        BogoliubovPair
    """
    if model.statistics != "boson":
        raise BogoliubovError("model statistics must be 'boson'")
    w_in, w_out = asymptotic_frequencies(k, model)
    m2 = model.mass ** 2
    y = 1j * _contour_offset(model, contour_depth)
    eta0 = -window / model.rho + y
    eta1 = window / model.rho + y

    def rhs(eta, z):
        return np.array([z[1], -(k * k + m2 * model.C(eta)) * z[0]])

    chi0 = np.exp(-1j * w_in * eta0) / math.sqrt(2 * w_in)
    chi, dchi = _integrate(rhs, eta0, eta1, np.array([chi0, -1j * w_in * chi0]), tol)
    s = math.sqrt(2 * w_out) / 2
    alpha = s * np.exp(1j * w_out * eta1) * (chi + 1j * dchi / w_out)
    beta = s * np.exp(-1j * w_out * eta1) * (chi - 1j * dchi / w_out)
    pair = BogoliubovPair(k, complex(alpha), complex(beta), "boson")
    _check_norm(pair)
    return pair


def _spinors(k: float, omega: float, mu: float):
    """Real orthonormal positive/negative frequency spinors of ``[[mu, k], [k, -mu]]``."""
    sk = 1.0 if k > 0 else -1.0
    up = math.sqrt((omega + mu) / (2 * omega))
    dn = math.sqrt((omega - mu) / (2 * omega))
    return np.array([up, sk * dn]), np.array([dn, -sk * up])


def solve_mode_fermion(
    k: float,
    model: ExpansionModel,
    tol: float = 1e-12,
    window: float = LAMBDA_WINDOW,
    contour_depth: float = 0.75,
) -> BogoliubovPair:
    """Bogoliubov pair for one fermionic momentum (1+1 Grassmann-scalar reduction).

    Integrates ``u'' + (k^2 + M^2 + i M') u = 0`` for the upper spinor
    component, rebuilds ``v = (i u' - M u)/k`` and projects onto the
    asymptotic out spinors. Contour handling follows :func:`solve_mode_boson`.
    """
    if model.statistics != "fermion":
        raise BogoliubovError("model statistics must be 'fermion'")
    w_in, w_out = asymptotic_frequencies(k, model)
    m = model.mass
    y = 1j * _contour_offset(model, contour_depth)
    eta0 = -window / model.rho + y
    eta1 = window / model.rho + y

    def rhs(eta, z):
        M = m * model.a(eta)
        return np.array([z[1], -(k * k + M * M + 1j * m * model.a_prime(eta)) * z[0]])

    plus_in, _ = _spinors(k, w_in, model.mu_in)
    u0 = plus_in[0] * np.exp(-1j * w_in * eta0)
    u, du = _integrate(rhs, eta0, eta1, np.array([u0, -1j * w_in * u0]), tol)
    v = (1j * du - m * model.a(eta1) * u) / k
    psi = np.array([u, v])
    plus, minus = _spinors(k, w_out, model.mu_out)
    # bilinear projections stay valid off the real axis
    alpha = np.exp(1j * w_out * eta1) * (plus @ psi)
    beta = np.exp(-1j * w_out * eta1) * (minus @ psi)
    pair = BogoliubovPair(k, complex(alpha), complex(beta), "fermion")
    _check_norm(pair)
    return pair


def solve_mode(k: float, model: ExpansionModel, **kw) -> BogoliubovPair:
    if model.statistics == "boson":
        return solve_mode_boson(k, model, **kw)
    return solve_mode_fermion(k, model, **kw)


def _check_norm(pair: BogoliubovPair):
    if abs(pair.norm - 1) > NORM_TOL:
        raise BogoliubovError(
            f"normalization defect {pair.norm - 1:.3e} at k={pair.k} ({pair.statistics})"
        )


def particle_spectrum(pair: BogoliubovPair) -> float:
    """Mean number of created quanta ``|beta|^2``."""
    return abs(pair.beta) ** 2


def bosonic_entropy(pair: BogoliubovPair) -> float:
    """Entanglement entropy of the two-mode squeezed pair with ``tanh r = |beta/alpha|``."""
    t = abs(pair.beta) / abs(pair.alpha)
    if t == 0:
        return 0.0
    t2 = t * t
    c2 = 1.0 / (1.0 - t2)
    s2 = t2 * c2
    return float(-c2 * math.log1p(-t2) - s2 * math.log(s2))


def fermionic_theta(pair: BogoliubovPair, model: ExpansionModel) -> complex:
    r""":math:`\theta_F = (\beta^*/\alpha^*)(\mu_{out}/|k|)(1 - \omega_{out}/\mu_{out})`.

    Written as :math:`(\beta^*/\alpha^*)(\mu_{out} - \omega_{out})/|k|` so the
    massless case is finite.
    """
    if pair.k == 0:
        raise BogoliubovError("zero mode k=0 is excluded")
    _, w_out = asymptotic_frequencies(pair.k, model)
    return complex(np.conj(pair.beta) / np.conj(pair.alpha) * (model.mu_out - w_out) / abs(pair.k))


def fermionic_entropy(theta: complex) -> float:
    """``ln[(1+|t|^2) / |t|^(2|t|^2/(|t|^2+1))]``, zero at ``t = 0``."""
    x = abs(theta) ** 2
    if x == 0:
        return 0.0
    return float(math.log1p(x) - x / (1 + x) * math.log(x))


def in_vacuum_exponent(alpha, beta) -> np.ndarray:
    r"""Symmetric matrix :math:`V = -\beta^* \alpha^{-1}`.

    The 'in' vacuum is :math:`\exp(\tfrac12 a^{\dagger T}_{out} V a^\dagger_{out})|0_{out}\rangle`
    up to normalization, with :math:`\alpha, \beta` indexed as in
    :math:`a_{in,i} = \sum_j (\alpha_{ji} a_{out,j} + \beta^*_{ji} a^\dagger_{out,j})`.
    """
    alpha = np.atleast_2d(np.asarray(alpha, dtype=complex))
    beta = np.atleast_2d(np.asarray(beta, dtype=complex))
    if alpha.shape != beta.shape or alpha.shape[0] != alpha.shape[1]:
        raise BogoliubovError("alpha and beta must be square and of equal shape")
    if np.linalg.cond(alpha) > 1e14:
        raise BogoliubovError("alpha is singular")
    V = -np.linalg.solve(alpha.T, beta.conj().T).T
    return 0.5 * (V + V.T)


# --- Rindler / Unruh -------------------------------------------------------

def _check_positive(**kw):
    bad = [k for k, v in kw.items() if not v > 0]
    if bad:
        raise BogoliubovError(f"must be positive: {', '.join(bad)}")


def unruh_squeezing(omega: float, accel: float) -> float:
    """``r = atanh(exp(-pi*omega/accel))``."""
    _check_positive(omega=omega, accel=accel)
    return float(np.arctanh(np.exp(-np.pi * omega / accel)))


def unruh_mean_number(omega: float, accel: float) -> float:
    """Bose-Einstein occupation ``1/(exp(2*pi*omega/accel) - 1)``."""
    _check_positive(omega=omega, accel=accel)
    x = 2 * np.pi * omega / accel
    return float(np.exp(-x) / -np.expm1(-x))  # overflow-free for small accel


def unruh_temperature(accel: float) -> float:
    _check_positive(accel=accel)
    return accel / (2 * np.pi)


def rindler_number_distribution(r: float, n_max: int) -> np.ndarray:
    """Occupation probabilities ``tanh(r)^(2n)/cosh(r)^2`` for ``n = 0..n_max``."""
    n = np.arange(n_max + 1)
    t2 = np.tanh(r) ** 2
    return t2 ** n / np.cosh(r) ** 2


def fit_temperature(probs: np.ndarray, omega: float) -> float:
    """Temperature of a geometric distribution ``p_n ~ exp(-n*omega/T)`` by log-linear least squares."""
    probs = np.asarray(probs, dtype=float)
    n = np.arange(probs.size)
    keep = probs > 1e-250
    slope = np.polyfit(n[keep], np.log(probs[keep]), 1)[0]
    return float(-omega / slope)


def conformal_coupling(D: int) -> Fraction:
    """``xi = (D-2)/(4(D-1))`` as an exact fraction."""
    if int(D) != D or D < 2:
        raise BogoliubovError("dimension must be an integer >= 2")
    D = int(D)
    return Fraction(D - 2, 4 * (D - 1))


def kg_inner_product(u, du, v, dv, x) -> complex:
    r"""Klein-Gordon product :math:`-i\int dx\,(u\,\partial_\eta v^* - v^*\partial_\eta u)`.

    ``x`` is a uniform periodic grid (endpoint excluded) shared by both modes;
    the rectangle rule is spectrally accurate there.
    """
    arrs = [np.asarray(a) for a in (u, du, v, dv, x)]
    if len({a.shape for a in arrs}) != 1:
        raise BogoliubovError("modes and grid must share one shape")
    u, du, v, dv, x = arrs
    dx = x[1] - x[0]
    if not np.allclose(np.diff(x), dx, rtol=1e-12, atol=0):
        raise BogoliubovError("grid must be uniform")
    integrand = u * np.conj(dv) - np.conj(v) * du
    return complex(-1j * dx * integrand.sum())


def plane_wave(k: float, omega: float, eta: float, x: np.ndarray, box: float):
    """Normalized plane wave and its time derivative on a periodic box."""
    u = np.exp(1j * (k * x - omega * eta)) / math.sqrt(2 * omega * box)
    return u, -1j * omega * u
