"""Comoving detector response in GR versus bouncing (LQC effective) cosmologies.

A massless conformal field on a flat three-torus sits in its conformal vacuum.
A comoving Unruh-DeWitt detector switched on at ``T0`` after the bounce is
excited with probability

    P_e(T0, T) = lam^2 sum_{n != 0} |I_n(T0, T)|^2,
    I_n = int dt chi(t) / (a(t) sqrt(2 w_n L^3)) e^{-2 pi i n.x0/L} e^{i[Omega t + w_n eta(t)]}

with ``w_n = 2 pi |n| / L``. Planck units (``l_p = 1``) throughout. The torus
length drops out of ``w_n eta`` and of the amplitude, so it only enters the
position phase.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad
from scipy.special import gamma

_GL16 = leggauss(16)
_GL8 = leggauss(8)


class EchoError(ValueError):
    pass


# --- Gauss hypergeometric function -------------------------------------------

def _series(a, b, c, z, tol=1e-17, max_terms=2000):
    z = np.asarray(z, dtype=float)
    term = np.ones_like(z)
    total = np.ones_like(z)
    for k in range(max_terms):
        term = term * (a + k) * (b + k) / ((c + k) * (k + 1)) * z
        total = total + term
        if np.all(np.abs(term) <= tol * np.abs(total)):
            return total
    raise EchoError("hypergeometric series did not converge")


def _near_one(a, b, c, w):
    """``2F1(a, b; c; w)`` for ``0.5 < w < 1`` via the connection formula in ``1 - w``."""
    s = c - a - b
    if abs(s - round(s)) < 1e-12:
        raise EchoError("connection formula needs c - a - b non-integer")
    u = 1.0 - w
    g1 = gamma(c) * gamma(s) / (gamma(c - a) * gamma(c - b))
    g2 = gamma(c) * gamma(-s) / (gamma(a) * gamma(b))
    return g1 * _series(a, b, 1 - s, u) + g2 * u ** s * _series(c - a, c - b, 1 + s, u)


def hyp2f1(a: float, b: float, c: float, z):
    """Gauss hypergeometric function for real parameters and real ``z < 1``.

    Power series for ``|z| <= 0.5``; the Pfaff transformation maps ``z < -0.5``
    to ``w = z/(z-1)`` in ``(1/3, 1)``, and arguments above 0.5 use the
    connection formula around 1.
    """
    z = np.asarray(z, dtype=float)
    if np.any(z >= 1):
        raise EchoError("hyp2f1 implemented for z < 1 only")
    out = np.empty_like(z)
    small = np.abs(z) <= 0.5
    out[small] = _series(a, b, c, z[small])
    upper = z > 0.5
    if np.any(upper):
        out[upper] = _near_one(a, b, c, z[upper])
    neg = z < -0.5
    if np.any(neg):
        zn = z[neg]
        w = zn / (zn - 1)
        pref = (1 - zn) ** (-a)
        val = np.empty_like(w)
        lo = w <= 0.5
        val[lo] = _series(a, c - b, c, w[lo])
        if np.any(~lo):
            val[~lo] = _near_one(a, c - b, c, w[~lo])
        out[neg] = pref * val
    return out if out.ndim else float(out)


# --- backgrounds ----------------------------------------------------------------

class Dynamics(str, Enum):
    GR = "GR"
    LQC = "LQC"


@dataclass(frozen=True)
class CosmologyBackground:
    """Flat FLRW background sourced by a massless scalar with momentum ``pi_phi``.

    Args:
        kind: ``"GR"`` (big bang at t = 0) or ``"LQC"`` (bounce at t = 0)
        pi_phi: scalar-field momentum, a constant of motion
        l: quantization length of the bounce; must be 0 for GR
        L_torus: comoving length of the torus
    """

    kind: Dynamics = Dynamics.GR
    pi_phi: float = 1000.0
    l: float = 0.0
    L_torus: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", Dynamics(self.kind))
        bad = []
        if not self.pi_phi > 0:
            bad.append("pi_phi")
        if not self.L_torus > 0:
            bad.append("L_torus")
        if self.kind is Dynamics.LQC and not self.l > 0:
            bad.append("l")
        if self.kind is Dynamics.GR and self.l != 0:
            bad.append("l")
        if bad:
            raise EchoError(f"invalid background parameters: {', '.join(bad)}")

    @classmethod
    def gr(cls, pi_phi=1000.0, L_torus=1.0):
        return cls(Dynamics.GR, pi_phi, 0.0, L_torus)

    @classmethod
    def lqc(cls, l, pi_phi=1000.0, L_torus=1.0):
        return cls(Dynamics.LQC, pi_phi, l, L_torus)

    @property
    def bounce_time(self) -> float:
        """``l^3``: the time scale on which the two dynamics differ."""
        return self.l ** 3


def scale_factor(bg: CosmologyBackground, t):
    t = np.asarray(t, dtype=float)
    p3 = bg.pi_phi ** (1 / 3)
    if bg.kind is Dynamics.GR:
        if np.any(t <= 0):
            raise EchoError("GR scale factor needs t > 0")
        return p3 * np.cbrt(t) / bg.L_torus
    x = t / bg.l ** 3
    return bg.l / bg.L_torus * p3 * (1 + x * x) ** (1 / 6)


def conformal_time(bg: CosmologyBackground, t):
    """Conformal time with ``eta(0) = 0``; ``d eta/dt = 1/a``."""
    t = np.asarray(t, dtype=float)
    p3 = bg.pi_phi ** (1 / 3)
    if bg.kind is Dynamics.GR:
        if np.any(t <= 0):
            raise EchoError("GR conformal time needs t > 0")
        return 1.5 * bg.L_torus * np.cbrt(t) ** 2 / p3
    x = t / bg.l ** 3
    return bg.L_torus / (bg.l * p3) * t * hyp2f1(1 / 6, 0.5, 1.5, -x * x)


def beta_offset(bg: CosmologyBackground) -> float:
    """Late-time offset ``eta_LQC - eta_GR``; zero for GR."""
    if bg.kind is Dynamics.GR:
        return 0.0
    return (bg.l ** 2 * bg.L_torus * math.sqrt(math.pi) * gamma(-1 / 3)
            / (bg.pi_phi ** (1 / 3) * 2 * gamma(1 / 6)))


# --- switching --------------------------------------------------------------------

class Switching(str, Enum):
    CHI1 = "chi1"  # sudden
    CHI2 = "chi2"  # linear ramps
    CHI3 = "chi3"  # tanh ramps
    CHI4 = "chi4"  # smooth compact ramps


def _S(x):
    # [1 - tanh(cot x)]/2 on (0, pi), with its limits at the ends
    x = np.asarray(x, dtype=float)
    out = np.where(x <= 0, 0.0, 1.0)
    inside = (x > 0) & (x < np.pi)
    xi = x[inside]
    out[inside] = 0.5 * (1 - np.tanh(np.cos(xi) / np.sin(xi)))
    return out


@dataclass(frozen=True)
class SwitchingFunction:
    kind: Switching
    T0: float
    T: float
    delta: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", Switching(self.kind))
        bad = []
        if not self.T > self.T0:
            bad.append("T")
        if not self.delta > 0:
            bad.append("delta")
        if bad:
            raise EchoError(f"invalid switching parameters: {', '.join(bad)}")

    def with_end(self, T: float) -> "SwitchingFunction":
        return replace(self, T=T)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        T0, T, d = self.T0, self.T, self.delta
        inside = (t >= T0) & (t <= T)  # the integrals only ever use [T0, T]
        if self.kind is Switching.CHI1:
            val = np.ones_like(t)
        elif self.kind is Switching.CHI2:
            mid = 0.5 * (T + T0)
            val = np.where(t < mid, np.minimum((t - T0) / d, 1.0), np.minimum((T - t) / d, 1.0))
        elif self.kind is Switching.CHI3:
            val = np.tanh((t - T0) / d) - np.tanh((t - T) / d) + np.tanh((T0 - T) / d)
        else:
            val = np.where(
                t < T0 + np.pi * d,
                _S((t - T0) / d),
                np.where(t >= T - np.pi * d, _S((T - t) / d), 1.0),
            )
        if self.kind in (Switching.CHI2, Switching.CHI4):
            val = np.where(inside, val, 0.0)
        return val

    def on_ramp(self, t):
        """The switching profile with the switch-off sent to infinity."""
        t = np.asarray(t, dtype=float)
        T0, d = self.T0, self.delta
        if self.kind is Switching.CHI1:
            val = np.ones_like(t)
        elif self.kind is Switching.CHI2:
            val = np.minimum((t - T0) / d, 1.0)
        elif self.kind is Switching.CHI3:
            val = np.tanh((t - T0) / d)
        else:
            val = np.where(t < T0 + np.pi * d, _S((t - T0) / d), 1.0)
        return np.where(t >= T0, val, 0.0)

    @property
    def off_window(self) -> float:
        """Width before ``T`` beyond which the profile equals :meth:`on_ramp` to round-off."""
        return {Switching.CHI1: 0.0, Switching.CHI2: self.delta,
                Switching.CHI3: 20.0 * self.delta, Switching.CHI4: math.pi * self.delta}[self.kind]

    @property
    def on_window(self) -> float:
        return self.off_window

    def breakpoints(self):
        """Kinks and ramp ends, where quadrature panels should start."""
        T0, T, d = self.T0, self.T, self.delta
        if self.kind is Switching.CHI2:
            pts = [T0 + d, 0.5 * (T + T0), T - d]
        elif self.kind is Switching.CHI4:
            pts = [T0 + np.pi * d, T - np.pi * d]
        elif self.kind is Switching.CHI3:
            pts = [T0 + 20 * d, T - 20 * d]
        else:
            pts = []
        return [p for p in pts if T0 < p < T]


# --- configuration -----------------------------------------------------------------

@dataclass(frozen=True)
class EchoConfig:
    """Detector and averaging parameters.

    Args:
        Omega: detector gap, assumed far below the bounce scale ``1/l^3``
        lam: coupling strength
        x0: comoving position in ``[0, L)^3``
        T0: switch-on time
        T_m: time after which the two dynamics differ only by the offset beta
        T_late: start of the late window averaged over
        T: end of the late window
        n_max: shells with ``|n|^2 <= n_max^2`` are summed
        T_avg: resolution time of the inner running average
        step: spacing of the switch-off grid used for the averages
    """

    Omega: float = 0.1
    lam: float = 1.0
    x0: tuple = (0.0, 0.0, 0.0)
    T0: float = 0.01
    T_m: float = 0.5
    T_late: float = 20.0
    T: float = 40.0
    n_max: int = 15
    T_avg: float = 5.0
    step: float = 0.025

    def __post_init__(self):
        bad = []
        if not self.Omega > 0:
            bad.append("Omega")
        if len(self.x0) != 3:
            bad.append("x0")
        if not (self.T0 < self.T_m < self.T_late < self.T):
            bad.append("T0 < T_m < T_late < T")
        if int(self.n_max) < 1:
            bad.append("n_max")
        if not 0 < self.T_avg <= self.T_late - self.T0:
            bad.append("T_avg")
        if not self.step > 0:
            bad.append("step")
        if bad:
            raise EchoError(f"invalid echo parameters: {', '.join(bad)}")

    @property
    def delta_T(self) -> float:
        return self.T - self.T_late

    def check_scales(self, bg: CosmologyBackground) -> list[str]:
        """Warnings about the separation of scales the estimator relies on."""
        notes = []
        if bg.kind is Dynamics.LQC:
            b = bg.bounce_time
            if self.Omega * b > 0.1:
                notes.append("gap is not far below the bounce scale 1/l^3")
            if self.T_avg < 10 * b:
                notes.append("averaging time not much longer than l^3")
            if self.T_m < 3 * b:
                notes.append("T_m shorter than a few l^3")
        return notes


# --- mode sums ---------------------------------------------------------------------

def shell_multiplicities(n_max: int) -> dict[int, int]:
    """Number of nonzero lattice vectors on each shell ``|n|^2 <= n_max^2``."""
    r = np.arange(-n_max, n_max + 1)
    nx, ny, nz = np.meshgrid(r, r, r, indexing="ij")
    s = (nx * nx + ny * ny + nz * nz).ravel()
    s = s[(s > 0) & (s <= n_max * n_max)]
    keys, counts = np.unique(s, return_counts=True)
    return {int(k): int(c) for k, c in zip(keys, counts)}


def _mode_prefactor(bg, norm_n):
    w = 2 * np.pi * norm_n / bg.L_torus
    return w, 1.0 / np.sqrt(2 * w * bg.L_torus ** 3)


def _integrand(cfg, bg, chi, t, norm_n):
    """Integrand of ``I_n`` without the position phase; ``t`` along axis 0."""
    w, amp = _mode_prefactor(bg, np.asarray(norm_n, dtype=float))
    a = scale_factor(bg, t)
    eta = conformal_time(bg, t)
    phase = cfg.Omega * t[..., None] + eta[..., None] * w
    return (chi / a)[..., None] * amp * np.exp(1j * phase)


def _phase_rate(cfg, bg, t, w_max):
    return cfg.Omega + w_max / scale_factor(bg, t)


def _panel_edges(cfg, bg, sw, a, b, w_max, max_phase=1.5, extra=()):
    """Panel boundaries on ``[a, b]`` sized by the local phase rate, relative
    width and the switching ramps. ``extra`` points are forced to be edges."""
    d = sw.delta
    ramps = [(sw.T0, sw.T0 + max(sw.on_window, d))]
    fine = d / 8 if sw.kind is Switching.CHI4 else d / 4
    edges = [a]
    forced = sorted({p for p in list(extra) + sw.breakpoints() if a < p < b} | {b})
    t = a
    for stop in forced:
        while t < stop:
            h = max_phase / _phase_rate(cfg, bg, t, w_max)
            h = min(h, 0.2 * max(t, 1e-12), stop - t)
            if sw.kind is not Switching.CHI1 and any(lo <= t < hi for lo, hi in ramps):
                h = min(h, fine)
            t = t + h if stop - (t + h) > 1e-12 * stop else stop
            edges.append(t)
    return np.asarray(edges)


def _gl_nodes(edges, rule=_GL16):
    x, wgt = rule
    mid = 0.5 * (edges[1:] + edges[:-1])
    hw = 0.5 * (edges[1:] - edges[:-1])
    return (mid[:, None] + hw[:, None] * x), (hw[:, None] * wgt)


def shell_amplitudes(cfg: EchoConfig, bg: CosmologyBackground, sw: SwitchingFunction, ends):
    """``I`` per shell (no position phase) for each switch-off time in ``ends``.

    Returns ``(shells, mult, I)`` with ``I`` of shape ``(len(ends), n_shells)``.
    The on-ramp part is accumulated once on a shared composite Gauss-Legendre
    mesh; only the switch-off window is integrated separately per end time.
    """
    ends = np.atleast_1d(np.asarray(ends, dtype=float))
    if np.any(ends <= sw.T0):
        raise EchoError("switch-off times must follow T0")
    mult = shell_multiplicities(int(cfg.n_max))
    shells = np.array(sorted(mult))
    norms = np.sqrt(shells)
    counts = np.array([mult[s] for s in shells])
    w_max = 2 * np.pi * norms[-1] / bg.L_torus
    W = sw.off_window
    # ends whose switch-off window reaches back into the switch-on ramp are done directly
    direct = ends - W <= sw.T0 + 2 * sw.on_window + sw.delta * (sw.kind is Switching.CHI2)
    out = np.empty((ends.size, shells.size), dtype=complex)
    fast = ends[~direct]
    if fast.size:
        starts = fast - W
        edges = _panel_edges(cfg, bg, sw, sw.T0, float(fast.max()), w_max,
                             extra=np.concatenate([fast, starts]))
        t, wt = _gl_nodes(edges)
        f = _integrand(cfg, bg, sw.on_ramp(t.ravel()), t.ravel(), norms)
        f = f.reshape(t.shape + (shells.size,)) * wt[..., None]
        cum = np.concatenate([np.zeros((1, shells.size)), np.cumsum(f.sum(axis=1), axis=0)])
        idx = np.searchsorted(edges, starts)
        if not np.allclose(edges[idx], starts, rtol=0, atol=1e-12 * edges[-1]):
            raise EchoError("internal: switch-off window start is not a panel edge")
        base = cum[idx]
        if W > 0:
            # local off-ramp window, graded panels of width delta/4
            npan = max(1, int(math.ceil(W / (sw.delta / 4))))
            u = np.linspace(0.0, 1.0, npan + 1)
            for k, T_end in enumerate(fast):
                e = starts[k] + W * u
                tt, ww = _gl_nodes(e, _GL8)
                chi = sw.with_end(T_end)(tt.ravel())
                g = _integrand(cfg, bg, chi, tt.ravel(), norms)
                base[k] += np.sum(g * ww.ravel()[:, None], axis=0)
        out[~direct] = base
    for k in np.flatnonzero(direct):
        swk = sw.with_end(ends[k])
        edges = _panel_edges(cfg, bg, swk, sw.T0, ends[k], w_max)
        tt, ww = _gl_nodes(edges)
        g = _integrand(cfg, bg, swk(tt.ravel()), tt.ravel(), norms)
        out[k] = np.sum(g * ww.ravel()[:, None], axis=0)
    return shells, counts, out


def mode_amplitude_In(cfg: EchoConfig, bg: CosmologyBackground, sw: SwitchingFunction, n,
                      rel_tol: float = 1e-6) -> complex:
    """``I_n(T0, T)`` for one lattice vector by adaptive quadrature.

    Subintervals are bounded by the local phase derivative so each carries a
    few radians of phase. Raises :class:`EchoError` naming the subinterval
    where the adaptive rule fails to reach ``rel_tol``.
    """
    n = np.asarray(n, dtype=int)
    if n.shape != (3,) or not np.any(n):
        raise EchoError("n must be a nonzero integer 3-vector")
    norm = float(np.sqrt(n @ n))
    w, amp = _mode_prefactor(bg, norm)
    edges = _panel_edges(cfg, bg, sw, sw.T0, sw.T, w, max_phase=2 * np.pi)
    pos = np.exp(-2j * np.pi * (n @ np.asarray(cfg.x0, dtype=float)) / bg.L_torus)

    def f(t, part):
        t = float(t)
        val = sw(t) / scale_factor(bg, t) * amp * np.exp(1j * (cfg.Omega * t + w * conformal_time(bg, t)))
        return float(val.real if part == 0 else val.imag)

    total = 0j
    pieces = []
    for a, b in zip(edges[:-1], edges[1:]):
        re, ere = quad(f, a, b, args=(0,), epsabs=0, epsrel=rel_tol * 1e-2, limit=200)
        im, eim = quad(f, a, b, args=(1,), epsabs=0, epsrel=rel_tol * 1e-2, limit=200)
        pieces.append((a, b, ere + eim))
        total += re + 1j * im
    scale = max(abs(total), 1e-300)
    for a, b, err in pieces:
        if err > rel_tol * scale:
            raise EchoError(f"quadrature did not converge on [{a:.6g}, {b:.6g}]")
    return complex(pos * total)


@dataclass(frozen=True)
class ProbabilityResult:
    value: float
    tail_ratio: float
    flagged: bool


def _probabilities(cfg, bg, sw, ends):
    shells, counts, I = shell_amplitudes(cfg, bg, sw, ends)
    contrib = counts * np.abs(I) ** 2
    P = cfg.lam ** 2 * contrib.sum(axis=1)
    tail = contrib[:, -1] / np.maximum(contrib.sum(axis=1), 1e-300)
    return P, tail


def excitation_probability(cfg: EchoConfig, bg: CosmologyBackground, sw: SwitchingFunction) -> ProbabilityResult:
    """Leading-order excitation probability at the switch-off time ``sw.T``.

    The tail proxy is the share of the outermost shell; above 5% the result
    is flagged as not converged in ``n_max``.
    """
    P, tail = _probabilities(cfg, bg, sw, [sw.T])
    return ProbabilityResult(float(P[0]), float(tail[0]), bool(tail[0] > 0.05))


def delta_probability(cfg: EchoConfig, sw: SwitchingFunction, lqc: CosmologyBackground,
                      gr: CosmologyBackground | None = None) -> float:
    """``P(lqc) - P(gr)``; ``gr`` defaults to GR with the same ``pi_phi`` and torus."""
    if gr is None:
        gr = CosmologyBackground.gr(lqc.pi_phi, lqc.L_torus)
    return excitation_probability(cfg, lqc, sw).value - excitation_probability(cfg, gr, sw).value


def split_delta_probability(cfg: EchoConfig, sw: SwitchingFunction, lqc: CosmologyBackground) -> float:
    """``P(lqc) - P(gr)`` from the early/late split at ``T_m``.

    After ``T_m`` the bouncing background is replaced by GR with conformal
    time shifted by ``beta``, so the late amplitude only picks up the phase
    ``exp(i beta w_n)``. Agrees with :func:`delta_probability` up to the
    error of that replacement.
    """
    gr = CosmologyBackground.gr(lqc.pi_phi, lqc.L_torus)
    if not sw.T0 + 2 * sw.on_window < cfg.T_m < sw.T - sw.off_window:
        raise EchoError("split needs both switching ramps away from T_m")
    shells = np.array(sorted(shell_multiplicities(int(cfg.n_max))))
    counts = np.array([shell_multiplicities(int(cfg.n_max))[k] for k in shells])
    norms = np.sqrt(shells)
    w = 2 * np.pi * norms / gr.L_torus

    def piece(bg, a, b):
        edges = _panel_edges(cfg, bg, sw, a, b, w[-1])
        t, wt = _gl_nodes(edges)
        g = _integrand(cfg, bg, sw(t.ravel()), t.ravel(), norms)
        return np.sum(g * wt.ravel()[:, None], axis=0)

    I_gr_early = piece(gr, sw.T0, cfg.T_m)
    I_lqc_early = piece(lqc, sw.T0, cfg.T_m)
    I_gr_late = piece(gr, cfg.T_m, sw.T)
    I_lqc_late = np.exp(1j * beta_offset(lqc) * w) * I_gr_late
    P_gr = counts * np.abs(I_gr_early + I_gr_late) ** 2
    P_lqc = counts * np.abs(I_lqc_early + I_lqc_late) ** 2
    return float(cfg.lam ** 2 * np.sum(P_lqc - P_gr))


# --- estimator -------------------------------------------------------------------------

@dataclass(frozen=True)
class EchoEstimate:
    value: float
    tail_ratio: float
    flagged: bool
    notes: tuple = field(default_factory=tuple)


def _simpson_weights(n: int, h: float) -> np.ndarray:
    if n < 3 or n % 2 == 0:
        raise EchoError("composite Simpson needs an odd number (>= 3) of points")
    w = np.ones(n)
    w[1:-1:2] = 4
    w[2:-1:2] = 2
    return w * h / 3


def running_average(values: np.ndarray, step: float, window: int) -> np.ndarray:
    """Composite-Simpson averages of ``values`` over trailing windows of ``window`` steps."""
    w = _simpson_weights(window + 1, step)
    span = window * step
    n = values.shape[0] - window
    return np.array([values[k:k + window + 1] @ w for k in range(n)]) / span


def estimator_E(cfg: EchoConfig, sw: SwitchingFunction, lqc: CosmologyBackground,
                gr: CosmologyBackground | None = None) -> EchoEstimate:
    """Mean relative difference of running-averaged excitation probabilities.

    ``E = < <P_lqc - P_gr>_{T_avg} / <P_gr>_{T_avg} >_{[T_late, T]}``, where
    ``<.>_{T_avg}`` averages over switch-off times ``T' in [T'' - T_avg, T'']``
    and the outer average runs over ``T'' in [T_late, T]``. Both averages use
    composite Simpson rules on a grid of spacing ``cfg.step``.
    """
    if gr is None:
        gr = CosmologyBackground.gr(lqc.pi_phi, lqc.L_torus)
    n_avg = int(round(cfg.T_avg / cfg.step))
    n_out = int(round(cfg.delta_T / cfg.step))
    if abs(n_avg * cfg.step - cfg.T_avg) > 1e-9 * cfg.T_avg or abs(n_out * cfg.step - cfg.delta_T) > 1e-9 * cfg.delta_T:
        raise EchoError("T_avg and T - T_late must be multiples of step")
    if n_avg % 2 or n_out % 2:
        raise EchoError("T_avg and T - T_late must span an even number of steps")
    ends = cfg.T_late - cfg.T_avg + cfg.step * np.arange(n_avg + n_out + 1)
    sw = sw.with_end(cfg.T)
    P_gr, tail_gr = _probabilities(cfg, gr, sw, ends)
    if lqc == gr:
        P_lqc, tail_lqc = P_gr, tail_gr
    else:
        P_lqc, tail_lqc = _probabilities(cfg, lqc, sw, ends)
    avg_gr = running_average(P_gr, cfg.step, n_avg)
    avg_d = running_average(P_lqc - P_gr, cfg.step, n_avg)
    ratio = avg_d / avg_gr
    E = float(ratio @ _simpson_weights(n_out + 1, cfg.step) / cfg.delta_T)
    tail = float(max(tail_gr.max(), tail_lqc.max()))
    return EchoEstimate(E, tail, tail > 0.05, tuple(cfg.check_scales(lqc)))
