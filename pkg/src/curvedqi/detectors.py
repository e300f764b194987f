"""Oscillator detectors coupled to the modes of a Dirichlet cavity.

The Hamiltonian in the cavity time ``t`` is

    H = sum_n w_n a_n^dag a_n + sum_j (dtau_j/dt) Omega_j a_j^dag a_j
        + sum_{j,n} (dtau_j/dt) lam_j(t) v_n(x_j(t)) (a_j + a_j^dag)(a_n + a_n^dag)

with ``w_n = n pi / L`` and ``v_n(x) = sin(n pi x / L)``. Everything is
quadratic, so states stay Gaussian and are propagated with the symplectic
engine in :mod:`curvedqi.gaussian`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .gaussian import (
    CovarianceState,
    PhaseSpaceLayout,
    QuadraticGenerator,
    direct_sum,
    evolve_covariance,
    evolve_propagator,
    log_negativity_two_mode,
    partial_state,
    vacuum_state,
)


class DetectorError(ValueError):
    pass


@dataclass(frozen=True)
class LengthModulation:
    """Cavity length ``L + amplitude * sin(2 pi frequency t + phase)``."""

    amplitude: float
    frequency: float
    phase: float = 0.0

    def __call__(self, t):
        return self.amplitude * np.sin(2 * np.pi * self.frequency * t + self.phase)


@dataclass(frozen=True)
class CavitySpec:
    """Dirichlet cavity of length ``length`` truncated to ``n_modes`` modes."""

    length: float = 1.0
    n_modes: int = 40
    modulation: LengthModulation | None = None

    def __post_init__(self):
        bad = []
        if not self.length > 0:
            bad.append("length")
        if int(self.n_modes) < 1:
            bad.append("n_modes")
        if self.modulation is not None and abs(self.modulation.amplitude) > 0.05 * self.length:
            bad.append("modulation.amplitude")
        if bad:
            raise DetectorError(f"invalid cavity parameters: {', '.join(bad)}")

    @property
    def mode_numbers(self) -> np.ndarray:
        return np.arange(1, int(self.n_modes) + 1)

    def frequencies(self, t: float = 0.0) -> np.ndarray:
        L = self.length
        if self.modulation is not None:
            L = L + self.modulation(t)
        return self.mode_numbers * np.pi / L

    def mode_functions(self, x: float) -> np.ndarray:
        """``v_n(x)`` for all modes (the unmodulated profile)."""
        return np.sin(self.mode_numbers * np.pi * x / self.length)


@dataclass(frozen=True)
class CompactWindow:
    """Smooth compactly supported window on ``[start, start + duration]``.

    Ramps use ``S(x) = [1 - tanh(cot x)]/2`` over ``ramp`` time units on each
    side, with a plateau of 1 in between (the same profile as the ``chi4``
    switching of :mod:`curvedqi.echo`, in scalar form for the ODE right-hand side).
    """

    duration: float
    ramp: float
    start: float = 0.0

    def __post_init__(self):
        if not 0 < 2 * self.ramp <= self.duration:
            raise DetectorError("window ramps must fit inside the window")

    @staticmethod
    def _S(x: float) -> float:
        if x <= 0:
            return 0.0
        if x >= math.pi:
            return 1.0
        return 0.5 * (1 - math.tanh(math.cos(x) / math.sin(x)))

    def __call__(self, t) -> float:
        u = float(t) - self.start
        if u < 0 or u > self.duration:
            return 0.0
        k = math.pi / self.ramp
        if u < self.ramp:
            return self._S(u * k)
        if u > self.duration - self.ramp:
            return self._S((self.duration - u) * k)
        return 1.0


def _constant(value):
    return lambda t: value


def _as_function(v) -> Callable[[float], float]:
    return v if callable(v) else _constant(float(v))


@dataclass(frozen=True)
class DetectorSpec:
    """One harmonic-oscillator detector.

    Args:
        gap: proper gap ``Omega``
        position: fixed position in ``[0, L]`` or a function of ``t``
        lam0: coupling amplitude
        window: switching ``chi(t) >= 0``; always on by default
        dtau_dt: proper-time rate, constant or a function of ``t``
        modes: 1-based mode numbers the detector couples to (all by default)
    """

    gap: float
    position: float | Callable = 0.5
    lam0: float = 0.0
    window: Callable | None = None
    dtau_dt: float | Callable = 1.0
    modes: tuple | None = None

    def __post_init__(self):
        bad = []
        if not self.gap >= 0:
            bad.append("gap")
        if not callable(self.dtau_dt) and not 0 < self.dtau_dt <= 1:
            bad.append("dtau_dt")
        if bad:
            raise DetectorError(f"invalid detector parameters: {', '.join(bad)}")

    def coupling(self, t: float) -> float:
        chi = 1.0 if self.window is None else float(self.window(t))
        return self.lam0 * chi

    def x(self, t: float) -> float:
        return float(_as_function(self.position)(t))

    def rate(self, t: float) -> float:
        return float(_as_function(self.dtau_dt)(t))


def _check_positions(cavity: CavitySpec, detectors, times):
    for j, d in enumerate(detectors):
        for t in times:
            x = d.x(t)
            if not 0 <= x <= cavity.length:
                raise DetectorError(f"detector {j} outside cavity at t={t:g} (x={x:g})")
            r = d.rate(t)
            if not 0 < r <= 1:
                raise DetectorError(f"detector {j} has dtau/dt={r:g} outside (0, 1] at t={t:g}")


def _mode_mask(cavity: CavitySpec, d: DetectorSpec) -> np.ndarray:
    if d.modes is None:
        return np.ones(int(cavity.n_modes))
    mask = np.zeros(int(cavity.n_modes))
    for n in d.modes:
        if not 1 <= n <= cavity.n_modes:
            raise DetectorError(f"mode {n} not in the cavity")
        mask[n - 1] = 1.0
    return mask


def build_generator(cavity: CavitySpec, detectors: Sequence[DetectorSpec], t_offset: float = 0.0,
                    check_times: Sequence[float] = (0.0,)) -> QuadraticGenerator:
    """Quadratic generator for detectors plus cavity modes.

    ``w`` holds the free frequencies and the rotating couplings
    ``c_jn = (dtau_j/dt) lam_j(t) v_n(x_j)``; ``g`` holds the counter-rotating
    couplings with ``g_jn = c_jn`` (detector row, mode column) and zero in
    the transposed slot. The cavity (and its modulation) sees time
    ``t + t_offset``; detector windows see ``t``.
    """
    M, N = len(detectors), int(cavity.n_modes)
    layout = PhaseSpaceLayout(M, N)
    _check_positions(cavity, detectors, check_times)
    masks = [_mode_mask(cavity, d) for d in detectors]
    static_pos = all(not callable(d.position) for d in detectors)
    vs = [cavity.mode_functions(d.x(0.0)) * m for d, m in zip(detectors, masks)] if static_pos else None

    gaps = np.array([d.gap for d in detectors])
    fixed_freq = cavity.frequencies() if cavity.modulation is None else None

    def parts(t):
        rates = np.array([d.rate(t) for d in detectors])
        freq = fixed_freq if fixed_freq is not None else cavity.frequencies(t + t_offset)
        diag = np.concatenate([rates * gaps, freq])
        C = np.empty((M, N))
        seen = {}
        for j, d in enumerate(detectors):
            key = id(d.window)
            if key not in seen:  # detectors often share one window
                seen[key] = d.coupling(t) / d.lam0 if d.lam0 else 0.0
            v = vs[j] if static_pos else cavity.mode_functions(d.x(t)) * masks[j]
            C[j] = rates[j] * d.lam0 * seen[key] * v
        return diag, C

    def w_of_t(t):
        diag, C = parts(t)
        w = np.diag(diag).astype(complex)
        w[:M, M:] = C
        w[M:, :M] = C.T
        return w

    def g_of_t(t):
        _, C = parts(t)
        g = np.zeros((M + N, M + N), dtype=complex)
        g[:M, M:] = C
        return g

    def fsym_of_t(t):
        # real w, g: F + F^T = diag(w + g + g^T, w - g - g^T), the couplings only enter q-q
        diag, C = parts(t)
        n = M + N
        out = np.zeros((2 * n, 2 * n))
        idx = np.arange(n)
        out[idx, idx] = diag
        out[n + idx, n + idx] = diag
        out[:M, M:n] = 2 * C
        out[M:n, :M] = 2 * C.T
        return out

    return QuadraticGenerator(layout, w_of_t, g_of_t, fsym_of_t)


def simulate(cavity: CavitySpec, detectors: Sequence[DetectorSpec], initial: CovarianceState,
             t_span: tuple, rel_tol: float = 1e-10) -> CovarianceState:
    """Evolve a joint detectors-plus-cavity state over ``t_span``."""
    layout = PhaseSpaceLayout(len(detectors), int(cavity.n_modes))
    if initial.layout.n != layout.n:
        raise DetectorError(f"initial state has {initial.layout.n} modes, expected {layout.n}")
    t0, t1 = t_span
    gen = build_generator(cavity, detectors, check_times=np.linspace(t0, t1, 17))
    prop = evolve_propagator(gen, (t0, t1), rel_tol=rel_tol)
    out = evolve_covariance(CovarianceState(layout, initial.sigma, check=False), prop)
    return out


# --- farming -------------------------------------------------------------------

@dataclass(frozen=True)
class FarmingProtocol:
    """Pairs of detectors sent through the cavity one cycle after another.

    Detector windows and positions are functions of the time since the start
    of the current cycle. A run has converged once successive pair
    negativities differ by less than ``convergence_tol`` and the cavity
    covariance moves by less than ``state_tol`` (max norm) per cycle, for
    ``patience`` cycles in a row (fewer if the run is exactly stationary),
    so turning points of a slowly oscillating sequence do not count.
    """

    pair: tuple
    cycle_duration: float
    injected: CovarianceState | None = None
    max_cycles: int = 200
    convergence_tol: float = 1e-6
    state_tol: float = 1e-3
    patience: int = 5
    rel_tol: float = 1e-10

    def __post_init__(self):
        bad = []
        if len(self.pair) != 2:
            bad.append("pair")
        if not self.cycle_duration > 0:
            bad.append("cycle_duration")
        if int(self.max_cycles) < 1:
            bad.append("max_cycles")
        if not self.convergence_tol > 0:
            bad.append("convergence_tol")
        if bad:
            raise DetectorError(f"invalid farming protocol: {', '.join(bad)}")

    def detector_state(self) -> CovarianceState:
        return self.injected if self.injected is not None else vacuum_state(PhaseSpaceLayout(2, 0))


@dataclass
class FarmingReport:
    negativities: list
    snapshots: list
    converged: bool
    fixed_point_negativity: float
    cycles: int
    notes: list = field(default_factory=list)


def cycle_propagator(cavity: CavitySpec, protocol: FarmingProtocol, cycle: int = 0) -> np.ndarray:
    """Symplectic matrix of one cycle (detector pair plus cavity)."""
    T = protocol.cycle_duration
    gen = build_generator(cavity, protocol.pair, t_offset=cycle * T, check_times=np.linspace(0, T, 9))
    return evolve_propagator(gen, (0.0, T), rel_tol=protocol.rel_tol).S


def _is_periodic(cavity: CavitySpec, T: float) -> bool:
    m = cavity.modulation
    if m is None or m.amplitude == 0:
        return True
    k = m.frequency * T
    return abs(k - round(k)) < 1e-9


def farm(cavity: CavitySpec, protocol: FarmingProtocol, initial_cavity: CovarianceState | None = None,
         keep_snapshots: bool = True) -> FarmingReport:
    """Iterate the farming cycle until the pair negativity settles.

    Each cycle a fresh detector pair is tensored with the current cavity
    state, evolved for one cycle, its log-negativity recorded and the pair
    traced out. When the cavity generator repeats every cycle the cycle
    propagator is computed once and reused.
    """
    N = int(cavity.n_modes)
    layout = PhaseSpaceLayout(2, N)
    cav = initial_cavity if initial_cavity is not None else vacuum_state(PhaseSpaceLayout(0, N))
    if cav.n != N:
        raise DetectorError(f"initial cavity state has {cav.n} modes, expected {N}")
    det = protocol.detector_state()
    periodic = _is_periodic(cavity, protocol.cycle_duration)
    S = cycle_propagator(cavity, protocol, 0) if periodic else None
    negs, snaps = [], []
    converged = False
    streak = 0
    for k in range(int(protocol.max_cycles)):
        Sk = S if periodic else cycle_propagator(cavity, protocol, k)
        joint = direct_sum(det, cav, layout)
        sig = Sk @ joint.sigma @ Sk.T
        out = CovarianceState(layout, sig, check=False)
        negs.append(log_negativity_two_mode(partial_state(out, [0, 1])))
        new = partial_state(out, list(range(2, N + 2)))
        moved = float(np.max(np.abs(new.sigma - cav.sigma)))
        cav = new
        if keep_snapshots:
            snaps.append(cav.sigma)
        if k == 0:
            continue
        step = abs(negs[-1] - negs[-2])
        if step < protocol.convergence_tol and moved < protocol.state_tol:
            streak += 1
        else:
            streak = 0
        if streak >= protocol.patience or (step == 0 and moved == 0):
            converged = True
            break
    notes = [] if converged else [f"not converged after {len(negs)} cycles"]
    return FarmingReport(negs, snaps, converged, negs[-1], len(negs), notes)


def fixed_point(cavity: CavitySpec, protocol: FarmingProtocol, S: np.ndarray | None = None):
    """Exact cavity fixed point of a periodic protocol and its pair negativity.

    One cycle acts on the cavity covariance as ``sigma -> A sigma A^T + Q``
    with ``A`` the cavity block of the cycle propagator and ``Q`` the image
    of the injected detector state, so the fixed point solves a discrete
    Lyapunov equation. Needs every cavity mode to be damped (no mode at a
    common node of both detectors). Contraction slower than ``1e-6`` per cycle
    is treated as none, since integration error alone damps a free mode at
    about that level. Used as an oracle for :func:`farm`.
    """
    from scipy.linalg import solve_discrete_lyapunov

    N = int(cavity.n_modes)
    layout = PhaseSpaceLayout(2, N)
    if S is None:
        S = cycle_propagator(cavity, protocol)
    ic = layout.quadrature_indices(range(2, N + 2))
    idt = layout.quadrature_indices([0, 1])
    A = S[np.ix_(ic, ic)]
    B = S[np.ix_(ic, idt)]
    rho = float(np.max(np.abs(np.linalg.eigvals(A))))
    if rho >= 1 - 1e-6:
        raise DetectorError(f"cycle map is not contracting (spectral radius {rho:.3g})")
    Q = B @ protocol.detector_state().sigma @ B.T
    sig = solve_discrete_lyapunov(A, Q)
    sig = 0.5 * (sig + sig.T)
    joint = direct_sum(protocol.detector_state(), CovarianceState(PhaseSpaceLayout(0, N), sig, check=False), layout)
    out = CovarianceState(layout, S @ joint.sigma @ S.T, check=False)
    return sig, log_negativity_two_mode(partial_state(out, [0, 1]))


DEFAULT_POSITIONS = (1 / math.pi, 1 - 1 / math.pi)  # no cavity mode has a node at either


def pair_protocol(gap: float, lam0: float, cycle_duration: float, positions=DEFAULT_POSITIONS,
                  ramp: float = 0.125, **kw) -> FarmingProtocol:
    """Two identical stationary detectors with smooth compact windows filling each cycle.

    ``ramp`` is the switch-on/off time as a fraction of the cycle.
    """
    window = CompactWindow(cycle_duration, ramp * cycle_duration)
    pair = tuple(DetectorSpec(gap, position=x, lam0=lam0, window=window) for x in positions)
    return FarmingProtocol(pair, cycle_duration, **kw)


@dataclass(frozen=True)
class ScanPoint:
    gap: float
    cycle_duration: float
    lam0: float
    negativity: float
    converged: bool
    cycles: int


def _scan_one(cavity, gap, T, lam, kw):
    prot = pair_protocol(gap, lam, T, **kw)
    rep = farm(cavity, prot, keep_snapshots=False)
    return ScanPoint(gap, T, lam, rep.fixed_point_negativity, rep.converged, rep.cycles)


def scan_working_point(cavity: CavitySpec, gaps, cycle_durations, couplings, workers: int = 1, **kw):
    """Grid scan over ``(gap, cycle duration, coupling)``.

    Returns all scan points and the converged one with the largest
    fixed-point negativity (ties broken by grid order).
    """
    from joblib import Parallel, delayed

    grid = [(g, T, lam) for g in gaps for T in cycle_durations for lam in couplings]
    pts = Parallel(n_jobs=max(1, int(workers)))(delayed(_scan_one)(cavity, g, T, lam, kw) for g, T, lam in grid)
    ok = [p for p in pts if p.converged]
    best = max(ok, key=lambda p: p.negativity) if ok else None
    return pts, best


def seismograph_point(cavity: CavitySpec, protocol: FarmingProtocol, amplitude: float, frequency: float,
                      phase: float = 0.0, baseline: float | None = None) -> dict:
    """Change of the fixed-point negativity under a length vibration."""
    if abs(amplitude) > 0.05 * cavity.length:
        raise DetectorError("perturbation amplitude above 5% of the cavity length")
    if baseline is None:
        baseline = farm(replace(cavity, modulation=None), protocol, keep_snapshots=False).fixed_point_negativity
    row = {"amplitude": amplitude, "frequency": frequency, "phase": phase}
    try:
        mod = LengthModulation(amplitude, frequency, phase)
        rep = farm(replace(cavity, modulation=mod), protocol, keep_snapshots=False)
        row.update(negativity=rep.fixed_point_negativity, delta=rep.fixed_point_negativity - baseline,
                   converged=rep.converged, cycles=rep.cycles, error="")
    except Exception as exc:  # reported per grid point
        row.update(negativity=math.nan, delta=math.nan, converged=False, cycles=0, error=str(exc))
    return row


def seismograph_scan(cavity: CavitySpec, protocol: FarmingProtocol, amplitudes, frequencies,
                     phase: float = 0.0, workers: int = 1) -> list[dict]:
    """Response table ``(amplitude, frequency) -> change of fixed-point negativity``."""
    from joblib import Parallel, delayed

    base = farm(replace(cavity, modulation=None), protocol, keep_snapshots=False).fixed_point_negativity
    grid = [(a, f) for a in amplitudes for f in frequencies]
    return Parallel(n_jobs=max(1, int(workers)))(
        delayed(seismograph_point)(cavity, protocol, a, f, phase, base) for a, f in grid
    )


def mode_convergence(cavity: CavitySpec, protocol: FarmingProtocol) -> float:
    """Relative change of the fixed-point negativity when the mode count doubles."""
    e1 = farm(cavity, protocol, keep_snapshots=False).fixed_point_negativity
    e2 = farm(replace(cavity, n_modes=2 * int(cavity.n_modes)), protocol, keep_snapshots=False).fixed_point_negativity
    return abs(e2 - e1) / max(abs(e1), 1e-300)
