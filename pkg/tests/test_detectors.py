import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curvedqi.detectors import (
    CavitySpec,
    CompactWindow,
    DetectorError,
    DetectorSpec,
    FarmingProtocol,
    LengthModulation,
    build_generator,
    cycle_propagator,
    farm,
    fixed_point,
    pair_protocol,
    scan_working_point,
    seismograph_point,
    simulate,
)
from curvedqi.gaussian import (
    CovarianceState,
    PhaseSpaceLayout,
    mean_excitation,
    partial_state,
    purity,
    symmetric_generator,
    thermal_state,
    uncertainty_margin,
    vacuum_state,
)

# --- cavity and detectors -------------------------------------------------------------


def test_cavity_spectrum_and_profiles():
    cav = CavitySpec(2.0, 5)
    assert np.allclose(cav.frequencies(), np.arange(1, 6) * math.pi / 2)
    assert np.allclose(cav.mode_functions(0.0), 0) and np.allclose(cav.mode_functions(2.0), 0, atol=1e-14)
    assert cav.mode_functions(1.0)[1] == pytest.approx(0, abs=1e-15)  # node of mode 2 at the centre


def test_cavity_validation():
    with pytest.raises(DetectorError, match="length"):
        CavitySpec(0.0)
    with pytest.raises(DetectorError, match="modulation"):
        CavitySpec(1.0, 4, LengthModulation(0.06, 1.0))


def test_modulated_frequencies():
    cav = CavitySpec(1.0, 3, LengthModulation(0.01, 0.25))
    assert np.allclose(cav.frequencies(1.0), np.arange(1, 4) * math.pi / 1.01)


@settings(max_examples=40)
@given(st.floats(0.5, 20), st.floats(0.01, 0.5), st.floats(-1, 25))
def test_compact_window_bounds(duration, frac, t):
    w = CompactWindow(duration, frac * duration)
    v = w(t)
    assert 0 <= v <= 1
    if t <= 0 or t >= duration:
        assert v == 0


def test_compact_window_validation():
    with pytest.raises(DetectorError):
        CompactWindow(1.0, 0.6)


def test_detector_validation():
    with pytest.raises(DetectorError, match="dtau_dt"):
        DetectorSpec(1.0, dtau_dt=1.5)
    with pytest.raises(DetectorError, match="outside cavity"):
        build_generator(CavitySpec(1.0, 2), [DetectorSpec(1.0, position=1.5, lam0=0.1)])
    with pytest.raises(DetectorError, match="mode 3"):
        build_generator(CavitySpec(1.0, 2), [DetectorSpec(1.0, lam0=0.1, modes=(3,))])


# --- generator ---------------------------------------------------------------------------

def test_zero_coupling_decouples():
    cav = CavitySpec(1.0, 4)
    gen = build_generator(cav, [DetectorSpec(2.0, 0.3, lam0=0.0)])
    Fs = gen.F_sym(0.0)
    n = 5
    assert np.allclose(Fs, np.diag(np.tile(np.concatenate([[2.0], cav.frequencies()]), 2)))
    assert np.count_nonzero(Fs - np.diag(np.diag(Fs))) == 0 and Fs.shape == (2 * n, 2 * n)


def test_node_position_decouples_mode():
    cav = CavitySpec(1.0, 4)
    gen = build_generator(cav, [DetectorSpec(2.0, 0.5, lam0=0.4)])
    Fs = gen.F_sym(0.0)
    assert Fs[0, 2] == pytest.approx(0, abs=1e-15)  # mode 2 has a node at the centre
    assert Fs[0, 1] == pytest.approx(2 * 0.4, rel=1e-14)


@pytest.mark.parametrize("t", [0.0, 0.7, 3.1])
def test_direct_generator_matches_assembly(t):
    cav = CavitySpec(1.0, 3, LengthModulation(0.02, 0.3))
    win = CompactWindow(4.0, 1.0)
    dets = [DetectorSpec(1.5, 0.3, lam0=0.2, window=win), DetectorSpec(2.5, 0.8, lam0=0.1, dtau_dt=0.9)]
    gen = build_generator(cav, dets, check_times=[t])
    ref = symmetric_generator(gen.w_of_t(t), gen.g_of_t(t))
    assert np.allclose(gen.F_sym(t), ref, atol=1e-14)
    assert gen.check_hermitian([t]) == 0


def test_mode_mask():
    cav = CavitySpec(1.0, 4)
    gen = build_generator(cav, [DetectorSpec(1.0, 0.3, lam0=0.5, modes=(1, 3))])
    C = gen.F_sym(0.0)[0, 1:5] / 2
    assert C[1] == 0 and C[3] == 0 and C[0] != 0 and C[2] != 0


# --- evolution ---------------------------------------------------------------------------

def _single(lam, N=6):
    cav = CavitySpec(1.0, N)
    det = DetectorSpec(math.pi, 1 / math.pi, lam0=lam, window=CompactWindow(4.0, 1.0))
    layout = PhaseSpaceLayout(1, N)
    out = simulate(cav, [det], vacuum_state(layout), (0.0, 4.0))
    return mean_excitation(out, 0)


def test_excitation_second_order_in_coupling():
    p1, p2 = _single(1e-3), _single(2e-3)
    assert p2 / p1 == pytest.approx(4, rel=0.05)


@pytest.mark.parametrize("nbar", [0.0, 0.7])
def test_zero_coupling_preserves_state(nbar):
    cav = CavitySpec(1.0, 3)
    layout = PhaseSpaceLayout(1, 3)
    init = thermal_state(layout, nbar)
    out = simulate(cav, [DetectorSpec(1.3, 0.4, lam0=0.0)], init, (0.0, 2.5))
    assert np.allclose(out.sigma, init.sigma, atol=1e-9)


def test_simulate_layout_mismatch():
    with pytest.raises(DetectorError):
        simulate(CavitySpec(1.0, 3), [DetectorSpec(1.0)], vacuum_state(PhaseSpaceLayout(1, 2)), (0, 1))


def test_disjoint_windows_leave_detectors_uncorrelated():
    # second detector switched on after the first is off, faster than light can travel between them
    cav = CavitySpec(1.0, 8)
    dets = [DetectorSpec(math.pi, 0.3, lam0=0.3, window=CompactWindow(0.2, 0.05)),
            DetectorSpec(math.pi, 0.7, lam0=0.3, window=CompactWindow(0.2, 0.05, start=0.3))]
    out = simulate(cav, dets, vacuum_state(PhaseSpaceLayout(2, 8)), (0.0, 0.3))
    pair = partial_state(out, [0, 1])
    idx = np.ix_([0, 2], [1, 3])
    assert np.max(np.abs(pair.sigma[idx])) <= 1e-12


# --- farming -----------------------------------------------------------------------------

def test_zero_coupling_farm_stops_immediately():
    rep = farm(CavitySpec(1.0, 4), pair_protocol(math.pi, 0.0, 8.0))
    assert rep.converged and rep.cycles <= 6 and abs(rep.fixed_point_negativity) <= 1e-10


def test_farm_matches_lyapunov_fixed_point():
    cav = CavitySpec(1.0, 2)
    prot = pair_protocol(math.pi, 0.3, 8.0, convergence_tol=1e-12, state_tol=1e-10, max_cycles=4000)
    S = cycle_propagator(cav, prot)
    sig, neg = fixed_point(cav, prot, S)
    rep = farm(cav, prot)
    assert rep.converged
    assert rep.fixed_point_negativity == pytest.approx(neg, abs=1e-8)
    assert np.allclose(rep.snapshots[-1], sig, atol=1e-7)


def test_fixed_point_rejects_undamped_mode():
    cav = CavitySpec(1.0, 4)
    prot = pair_protocol(math.pi, 0.3, 8.0, positions=(0.5, 0.5))  # mode 2 has a node at both detectors
    with pytest.raises(DetectorError, match="contracting"):
        fixed_point(cav, prot)


def test_negativity_symmetric_under_detector_exchange():
    cav = CavitySpec(1.0, 6)
    a = farm(cav, pair_protocol(math.pi, 0.3, 8.0, positions=(0.3, 0.6), max_cycles=5))
    b = farm(cav, pair_protocol(math.pi, 0.3, 8.0, positions=(0.6, 0.3), max_cycles=5))
    assert np.allclose(a.negativities, b.negativities, atol=1e-9)


def test_cavity_state_stays_physical():
    cav = CavitySpec(1.0, 6)
    rep = farm(cav, pair_protocol(math.pi, 0.3, 8.0, max_cycles=6))
    for sig in rep.snapshots:
        st_ = CovarianceState(PhaseSpaceLayout(0, 6), sig, check=False)
        assert purity(st_) <= 1 + 1e-9
        assert uncertainty_margin(sig) >= -1e-6


def test_protocol_validation():
    with pytest.raises(DetectorError, match="pair"):
        FarmingProtocol((DetectorSpec(1.0),), 1.0)
    with pytest.raises(DetectorError, match="cycle_duration"):
        FarmingProtocol((DetectorSpec(1.0), DetectorSpec(1.0)), 0.0)


def test_scan_reports_best_converged():
    pts, best = scan_working_point(CavitySpec(1.0, 4), [math.pi], [8.0], [0.0, 0.3], max_cycles=60)
    assert len(pts) == 2
    assert best is None or best.negativity == max(p.negativity for p in pts if p.converged)


# --- seismograph --------------------------------------------------------------------------

def test_seismograph_zero_amplitude():
    cav = CavitySpec(1.0, 4)
    prot = pair_protocol(math.pi, 0.3, 8.0, max_cycles=40)
    row = seismograph_point(cav, prot, 0.0, 0.125)
    assert row["delta"] == 0 and row["error"] == ""


def test_seismograph_amplitude_guard():
    with pytest.raises(DetectorError):
        seismograph_point(CavitySpec(1.0, 4), pair_protocol(math.pi, 0.3, 8.0), 0.06, 0.1)


def test_seismograph_sign_of_amplitude_is_a_phase_shift():
    # -a sin(x) = a sin(x + pi)
    cav = CavitySpec(1.0, 4)
    prot = pair_protocol(math.pi, 0.3, 8.0, max_cycles=30)
    a = seismograph_point(cav, prot, -0.01, 0.125, 0.0, baseline=0.0)
    b = seismograph_point(cav, prot, 0.01, 0.125, math.pi, baseline=0.0)
    assert a["negativity"] == pytest.approx(b["negativity"], abs=1e-9)


def test_seismograph_response_grows_with_amplitude():
    cav = CavitySpec(1.0, 4)
    prot = pair_protocol(math.pi, 0.3, 8.0, max_cycles=30)
    base = farm(cav, prot, keep_snapshots=False).fixed_point_negativity
    d = [abs(seismograph_point(cav, prot, a, 0.125, baseline=base)["delta"]) for a in (0.002, 0.01)]
    assert d[1] > d[0]
