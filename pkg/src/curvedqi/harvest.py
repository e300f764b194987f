"""Leading-order entanglement harvesting between two Unruh-DeWitt detectors.

Both detectors share a gap ``Omega`` and a Gaussian window
``chi(tau) = exp(-tau^2 / (2 sigma^2))`` truncated at ``+-cut*sigma``. In the
massless Minkowski vacuum the harvested state depends on

    A = lam^2 int dtau dtau' chi chi' exp(-i Omega (tau - tau')) W(tau, tau')
    X = -lam^2 int dtau int^tau dtau' chi chi' exp(i Omega (tau + tau'))
            [W_ab(tau, tau') + W_ba(tau, tau')]

with ``W = -1 / (4 pi^2 [(dt - i eps)^2 - dx^2])``. Integrals are evaluated
at a fixed regulator schedule and Richardson-extrapolated to ``eps -> 0``.
Detectors entangle at this order iff ``|X| > A``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import IntegrationWarning, quad
from scipy.special import erf

EPS_SCHEDULE = (1e-2, 5e-3, 2.5e-3)  # in units of sigma, successive halvings
WINDOW_CUT = 6.0

_GL_X, _GL_W = leggauss(16)


class HarvestCase(str, Enum):
    DE_SITTER = "desitter"
    THERMAL = "thermal"
    MINKOWSKI = "minkowski"
    PARALLEL = "parallel"
    ANTIPARALLEL = "antiparallel"


NUMERIC_CASES = (HarvestCase.MINKOWSKI, HarvestCase.PARALLEL, HarvestCase.ANTIPARALLEL)


class HarvestError(ValueError):
    pass


@dataclass(frozen=True)
class HarvestConfiguration:
    """Detector pair setup.

    Args:
        case: spacetime/trajectory case
        kappa: proper acceleration or expansion rate (ignored for static detectors)
        L: separation, or distance of closest approach for accelerated pairs
        Omega: detector gap
        sigma: standard deviation of the Gaussian switching
        lam: coupling strength
        eps_schedule: regulator values in units of sigma
        cut: window truncation in units of sigma
    """

    case: HarvestCase
    kappa: float
    L: float
    Omega: float
    sigma: float
    lam: float = 1.0
    eps_schedule: tuple = EPS_SCHEDULE
    cut: float = WINDOW_CUT

    def __post_init__(self):
        object.__setattr__(self, "case", HarvestCase(self.case))
        bad = [n for n in ("L", "Omega", "sigma") if not getattr(self, n) > 0]
        if self.case is not HarvestCase.MINKOWSKI and not self.kappa > 0:
            bad.append("kappa")
        if bad:
            raise HarvestError(f"must be positive: {', '.join(bad)}")
        if len(self.eps_schedule) != 3:
            raise HarvestError("eps_schedule needs three successive halvings")


@dataclass(frozen=True)
class Extrapolated:
    """Richardson-extrapolated value with the raw regulator sequence."""

    value: complex
    raw: tuple
    flagged: bool = False

    @property
    def real(self):
        return self.value.real


def richardson(values) -> Extrapolated:
    """Second-order Richardson extrapolation for regulators ``4h, 2h, h``.

    Flags the point when the successive differences fail to shrink.
    """
    f4, f2, f1 = (complex(v) for v in values)
    value = (8 * f1 - 6 * f2 + f4) / 3
    d1, d2 = abs(f2 - f4), abs(f1 - f2)
    flagged = d2 > d1 and d2 > 1e-14 * max(abs(f1), 1e-300)
    return Extrapolated(value, (f4, f2, f1), flagged)


# --- Wightman function and trajectories -------------------------------------

def wightman_minkowski(dt, dx, eps):
    r"""Massless 3+1 vacuum Wightman function :math:`-1/(4\pi^2[(\Delta t - i\epsilon)^2 - |\Delta x|^2])`.

    Args:
        dt: coordinate time difference ``t - t'``
        dx: spatial separation (scalar distance or 3-vectors along the last axis)
        eps: regulator, positive
    """
    if eps <= 0:
        raise HarvestError("regulator must be positive")
    dx = np.asarray(dx, dtype=float)
    r2 = dx * dx if dx.ndim == 0 or dx.shape[-1] != 3 else np.sum(dx * dx, axis=-1)
    return -1.0 / (4 * np.pi ** 2 * ((np.asarray(dt) - 1j * eps) ** 2 - r2))


def _bump(kappa, tau):
    # (cosh(k tau) - 1)/k without cancellation
    return 2 * np.sinh(0.5 * kappa * tau) ** 2 / kappa


def trajectory(case, kappa: float, L: float, tau, detector: str = "a"):
    """Event ``(t, x)`` of detector ``a`` or ``b`` at proper time ``tau``.

    Motion is along one axis; ``x`` is that coordinate.
    """
    case = HarvestCase(case)
    tau = np.asarray(tau)
    tau = tau.astype(complex if np.iscomplexobj(tau) else float)
    sign = 1.0 if detector == "a" else -1.0
    if case is HarvestCase.MINKOWSKI:
        return tau.copy(), np.full_like(tau, sign * L / 2)
    if case not in NUMERIC_CASES:
        raise HarvestError(f"no numeric worldline for case {case.value!r}")
    t = np.sinh(kappa * tau) / kappa
    bump = _bump(kappa, tau)
    if case is HarvestCase.PARALLEL or detector == "a":
        return t, bump + sign * L / 2
    return t, -bump - L / 2


# --- A: single stationary worldline -----------------------------------------

def _W_proper(z, kappa, case):
    """Wightman function along one stationary worldline as a function of complex ``dtau``."""
    if case is HarvestCase.MINKOWSKI:
        return -1.0 / (4 * np.pi ** 2 * z * z)
    return -(kappa ** 2) / (16 * np.pi ** 2 * np.sinh(0.5 * kappa * z) ** 2)


def _A_regulated(cfg: HarvestConfiguration, eps: float) -> float:
    s, c, Om = cfg.sigma, cfg.cut, cfg.Omega

    def f(d):
        # exact centre-of-mass integral of the truncated Gaussian pair
        wT = s * math.sqrt(math.pi) * erf(c - abs(d) / (2 * s))
        val = np.exp(-d * d / (4 * s * s) - 1j * Om * d) * _W_proper(d - 1j * eps, cfg.kappa, cfg.case)
        return wT * val.real

    # integrand is Hermitian in d, so A = 2 Re int_0
    pts = [eps * 10 ** k for k in range(0, 4) if eps * 10 ** k < 2 * c * s]
    edges = [0.0] + pts + [2 * c * s]
    total = 0.0
    with warnings.catch_warnings():
        # roundoff notices at the tight tolerance; the value is still good
        warnings.simplefilter("ignore", IntegrationWarning)
        for a, b in zip(edges[:-1], edges[1:]):
            total += quad(f, a, b, limit=400, epsabs=1e-17, epsrel=1e-13)[0]
    return 2 * total


def compute_A(cfg: HarvestConfiguration) -> Extrapolated:
    """Single-detector excitation term ``A`` (identical for both detectors).

    The worldline of each detector is stationary, so the Wightman function
    depends on ``tau - tau'`` only and the centre-of-mass integral is done in
    closed form (truncation included); the remaining integral is adaptive.
    """
    if cfg.case not in NUMERIC_CASES:
        raise HarvestError(f"no numeric Wightman function for {cfg.case.value!r}")
    raw = [cfg.lam ** 2 * _A_regulated(cfg, e * cfg.sigma) for e in cfg.eps_schedule]
    return richardson(raw)


# --- X: two worldlines, time-ordered -----------------------------------------

def _graded_nodes(a: float, b: float, breaks, h: float, hmin: float):
    """Composite Gauss-Legendre nodes on ``[a, b]`` graded geometrically toward ``breaks``."""
    pts = [a, b]
    for c in breaks:
        if a < c < b:
            pts.append(c)
            d = h
            while d > hmin:
                pts.extend(x for x in (c - d, c + d) if a < x < b)
                d *= 0.5
    pts = np.unique(pts)
    widths = np.diff(pts)
    nsub = np.maximum(1, np.ceil(widths / h).astype(int))
    edges = np.concatenate(
        [np.linspace(p, q, n + 1)[:-1] for p, q, n in zip(pts[:-1], pts[1:], nsub)] + [[b]]
    )
    mid = 0.5 * (edges[1:] + edges[:-1])
    hw = 0.5 * (edges[1:] - edges[:-1])
    return (mid[:, None] + hw[:, None] * _GL_X).ravel(), (hw[:, None] * _GL_W).ravel()


def light_cone_roots(case, kappa: float, L: float, T):
    """Values of ``D = tau - tau' >= 0`` where ``x_a(tau)``/``x_b(tau')`` (first
    column) and ``x_b(tau)``/``x_a(tau')`` (second column) are null separated,
    at centre time ``T = (tau + tau')/2``. ``nan`` marks no crossing.
    """
    case = HarvestCase(case)
    T = np.asarray(T, dtype=float)
    if case is HarvestCase.MINKOWSKI:
        r = np.full(T.shape, L)
        return np.stack([r, r], axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        if case is HarvestCase.PARALLEL:
            ab = 2 / kappa * np.arcsinh(0.5 * L * kappa * np.exp(kappa * T))
            ba = 2 / kappa * np.arcsinh(0.5 * L * kappa * np.exp(-kappa * T))
            return np.stack([ab, ba], axis=-1)
        if case is HarvestCase.ANTIPARALLEL:
            if L * kappa >= 2:
                r = np.full(T.shape, np.nan)
            else:
                r = 2 / kappa * np.log(2 * np.cosh(kappa * T) / (2 - L * kappa))
            return np.stack([r, r], axis=-1)
    raise HarvestError(f"no numeric worldline for case {case.value!r}")


def _graded_interval(a, b, levels: int, order_x, order_w):
    """Nodes on ``[a, b]`` (arrays of equal shape) graded geometrically toward both ends."""
    k = np.arange(levels + 1)
    frac = 0.5 * 2.0 ** (-k)  # 1/2, 1/4, ...
    cuts = np.concatenate([[0.0], frac[::-1], 1 - frac[1:], [1.0]])
    lo, hi = cuts[:-1], cuts[1:]
    mid = 0.5 * (lo + hi)
    hw = 0.5 * (hi - lo)
    u = (mid[:, None] + hw[:, None] * order_x).ravel()
    wu = (hw[:, None] * order_w).ravel()
    span = (b - a)[..., None]
    return a[..., None] + span * u, span * wu


def _X_regulated(cfg: HarvestConfiguration, eps_list, panel: float = 0.5, levels: int = 14,
                 labels=("a", "b")):
    s, c = cfg.sigma, cfg.cut
    Om, kappa, L, case = cfg.Omega, cfg.kappa, cfg.L, cfg.case
    T, wT = _graded_nodes(-c * s, c * s, [], panel * s, panel * s)
    dmax = 2 * (c * s - np.abs(T))
    roots = light_cone_roots(case, kappa, L, T)
    roots = np.where(np.isfinite(roots), np.clip(roots, 0.0, dmax[:, None]), dmax[:, None])
    roots.sort(axis=1)
    bounds = np.concatenate([np.zeros((T.size, 1)), roots, dmax[:, None]], axis=1)
    gx, gw = leggauss(10)
    totals = np.zeros(len(eps_list), dtype=complex)
    for j in range(bounds.shape[1] - 1):
        d, wd = _graded_interval(bounds[:, j], bounds[:, j + 1], levels, gx, gw)
        TT = T[:, None]
        weight = np.exp(-(TT * TT) / (s * s) - d * d / (4 * s * s) + 2j * Om * TT) * wd * wT[:, None]
        p, q = labels
        ta, xa = trajectory(case, kappa, L, TT + d / 2, p)
        tb, xb = trajectory(case, kappa, L, TT - d / 2, q)
        tb2, xb2 = trajectory(case, kappa, L, TT + d / 2, q)
        ta2, xa2 = trajectory(case, kappa, L, TT - d / 2, p)
        for k, e in enumerate(eps_list):
            w = wightman_minkowski(ta - tb, xa - xb, e) + wightman_minkowski(tb2 - ta2, xb2 - xa2, e)
            totals[k] += np.sum(weight * w)
    return -totals


def compute_A_plane(cfg: HarvestConfiguration, n: int = 1200, detector: str = "a",
                    reverse: bool = False) -> Extrapolated:
    """Dual route for ``A``: midpoint double sum over the full ``(tau, tau')`` plane.

    The regulator is applied by shifting the two proper times to
    ``tau - i eps/2`` and ``tau' + i eps/2`` on the complexified worldline, which
    reproduces the proper-time regularisation of :func:`compute_A` without
    using the stationary form of the Wightman function. Much slower than
    :func:`compute_A`; meant for checks. ``reverse`` evaluates the integral
    after the substitution ``tau -> -tau``.
    """
    if cfg.case not in NUMERIC_CASES:
        raise HarvestError(f"no numeric Wightman function for {cfg.case.value!r}")
    s, c = cfg.sigma, cfg.cut
    edges = np.linspace(-c * s, c * s, n + 1)
    tau = 0.5 * (edges[1:] + edges[:-1])
    h = edges[1] - edges[0]
    sgn = -1.0 if reverse else 1.0
    chi = np.exp(-(tau * tau) / (2 * s * s) - 1j * sgn * cfg.Omega * tau)
    raw = []
    for e in cfg.eps_schedule:
        shift = 0.5j * e * s
        t1, x1 = trajectory(cfg.case, cfg.kappa, cfg.L, sgn * tau - shift, detector)
        t2, x2 = trajectory(cfg.case, cfg.kappa, cfg.L, sgn * tau + shift, detector)
        dt, dx = t1[:, None] - t2[None, :], x1[:, None] - x2[None, :]
        W = -1.0 / (4 * np.pi ** 2 * (dt * dt - dx * dx))
        raw.append(cfg.lam ** 2 * h * h * np.real(chi @ W @ np.conj(chi)))
    return richardson(raw)


def compute_X(cfg: HarvestConfiguration, swap: bool = False) -> Extrapolated:
    """Nonlocal correlation term ``X`` for the detector pair.

    Integrates over ``T = (tau + tau')/2`` and ``D = tau - tau' >= 0``. For each
    ``T`` node the light-cone crossings in ``D`` are located and the ``D`` mesh
    is graded toward them. ``swap`` exchanges the roles of the two detectors.
    """
    if cfg.case not in NUMERIC_CASES:
        raise HarvestError(f"no numeric Wightman function for {cfg.case.value!r}")
    eps = [e * cfg.sigma for e in cfg.eps_schedule]
    raw = cfg.lam ** 2 * _X_regulated(cfg, eps, labels=("b", "a") if swap else ("a", "b"))
    return richardson(raw)


def negativity_estimate(A: float, X: complex) -> float:
    """Leading-order negativity proxy ``max(0, |X| - A)``."""
    return max(0.0, abs(X) - A)


# --- closed-form region boundaries ------------------------------------------

def region_boundary(case, L_kappa: float, ks2o: float) -> bool:
    """Closed-form entanglement condition at ``(L*kappa, kappa*sigma^2*Omega)``.

    For the Minkowski vacuum the condition ``L/2 < sigma^2 Omega`` is scale
    free and is evaluated in the same units.
    """
    case = HarvestCase(case)
    if L_kappa <= 0 or ks2o <= 0:
        raise HarvestError("point must lie in the positive quadrant")
    half = 0.5 * L_kappa
    if case in (HarvestCase.DE_SITTER, HarvestCase.PARALLEL):
        return half < math.sin(ks2o)
    if case is HarvestCase.THERMAL:
        return half * math.tanh(half) < math.sin(ks2o) ** 2
    if case is HarvestCase.MINKOWSKI:
        return half < ks2o
    raise HarvestError("the anti-parallel case has no closed-form boundary")


def critical_distance(kappa: float, sigma: float, Omega: float) -> float:
    """``L_crit = (2/kappa) (1 - cos(kappa sigma^2 Omega))``."""
    if min(kappa, sigma, Omega) <= 0:
        raise HarvestError("inputs must be positive")
    return 2.0 / kappa * (1 - math.cos(kappa * sigma * sigma * Omega))


# --- region maps ---------------------------------------------------------------

@dataclass
class RegionMap:
    """Classification of a ``(L kappa, kappa sigma^2 Omega)`` grid.

    Arrays are indexed ``[row, col]`` with rows along ``ks2o`` and columns
    along ``L_kappa``. Numeric maps are evaluated at fixed ``sigma Omega``.
    """

    case: HarvestCase
    L_kappa: np.ndarray
    ks2o: np.ndarray
    sigma_omega: float | None
    entangled: np.ndarray
    A: np.ndarray | None = None
    X: np.ndarray | None = None
    flagged: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def negativity(self) -> np.ndarray:
        if self.A is None:
            return np.where(self.entangled, np.nan, 0.0)
        return np.maximum(0.0, np.abs(self.X) - self.A)

    def rows(self):
        """Flat records, one per cell."""
        out = []
        for i, s in enumerate(self.ks2o):
            for j, lk in enumerate(self.L_kappa):
                rec = {"L_kappa": float(lk), "ks2o": float(s), "entangled": bool(self.entangled[i, j])}
                if self.A is not None:
                    rec.update(
                        A=float(self.A[i, j]),
                        X_re=float(self.X[i, j].real),
                        X_im=float(self.X[i, j].imag),
                        negativity=float(self.negativity[i, j]),
                        flagged=bool(self.flagged[i, j]),
                    )
                out.append(rec)
        return out


def cell_centres(lo: float, hi: float, n: int) -> np.ndarray:
    """Centres of ``n`` equal cells on ``[lo, hi]``."""
    edges = np.linspace(lo, hi, n + 1)
    return 0.5 * (edges[1:] + edges[:-1])


def map_configuration(case, L_kappa: float, ks2o: float, sigma_omega: float, **kw) -> HarvestConfiguration:
    """Physical parameters of a map cell in units ``sigma = 1``."""
    kappa = ks2o / sigma_omega
    return HarvestConfiguration(case, kappa, L_kappa / kappa, sigma_omega, 1.0, **kw)


def _cell_X(case, lk, s, x, kw):
    try:
        r = compute_X(map_configuration(case, lk, s, x, **kw))
        return r.value, r.flagged
    except Exception:  # per-cell failure is flagged, map still returned
        return complex("nan"), True


def _row_A(case, s, x, kw):
    try:
        r = compute_A(map_configuration(case, 1.0, s, x, **kw))
        return r.value.real, r.flagged
    except Exception:
        return float("nan"), True


def region_map(case, L_kappa, ks2o, sigma_omega: float = 4.0, workers: int = 1, **kw) -> RegionMap:
    """Entanglement map over cell centres ``L_kappa`` x ``ks2o``.

    Closed-form cases are filled from :func:`region_boundary`. Numeric cases
    use :func:`compute_A` (once per row, since it does not depend on ``L``)
    and :func:`compute_X` per cell, in parallel over cells.
    """
    case = HarvestCase(case)
    L_kappa = np.asarray(L_kappa, dtype=float)
    ks2o = np.asarray(ks2o, dtype=float)
    meta = {"eps_schedule": list(kw.get("eps_schedule", EPS_SCHEDULE)), "cut": kw.get("cut", WINDOW_CUT)}
    if case not in NUMERIC_CASES or case is HarvestCase.MINKOWSKI and sigma_omega is None:
        ent = np.array([[region_boundary(case, lk, s) for lk in L_kappa] for s in ks2o])
        return RegionMap(case, L_kappa, ks2o, None, ent, metadata={"method": "closed-form"})
    from joblib import Parallel, delayed

    par = Parallel(n_jobs=max(1, int(workers)))
    rowA = par(delayed(_row_A)(case, s, sigma_omega, kw) for s in ks2o)
    cells = par(delayed(_cell_X)(case, lk, s, sigma_omega, kw) for s in ks2o for lk in L_kappa)
    shape = (ks2o.size, L_kappa.size)
    X = np.array([c[0] for c in cells]).reshape(shape)
    A = np.repeat(np.array([a for a, _ in rowA])[:, None], L_kappa.size, axis=1)
    flagged = np.array([c[1] for c in cells]).reshape(shape) | np.array([f for _, f in rowA])[:, None]
    flagged |= ~np.isfinite(X) | ~np.isfinite(A)
    ent = np.abs(X) > A
    meta.update(method="numeric", sigma_omega=sigma_omega)
    return RegionMap(case, L_kappa, ks2o, sigma_omega, ent, A, X, flagged, meta)


def boundary_offsets(entangled: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Per-row distance in cells between the first separable column of two maps.

    A row that is entangled everywhere has its transition at the row length.
    """
    def first_off(m):
        off = ~np.asarray(m, dtype=bool)
        return np.where(off.any(axis=1), off.argmax(axis=1), off.shape[1])

    return np.abs(first_off(entangled) - first_off(reference))
