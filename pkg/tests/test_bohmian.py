import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weylab import bohmian
from weylab.abdensity import FluxConfig
from weylab.constants import NATURAL, Particle
from weylab.errors import DomainError, NodeError, NoBracketError, UndecidedError
from weylab.wavepacket import GaussianPacket, SlitState, double_slit_state


def _single(k=(0.8, -0.4)):
    p = GaussianPacket((0.2, -0.1), 1.0, k, 1.0)
    return SlitState((p,), (p.__class__(p.center, p.a, p.momentum, 1e-300),))


def test_velocity_at_packet_center_is_group_velocity():
    s = _single()
    for t in (0.0, 0.5):
        cx = 0.2 + 0.8 * t
        cy = -0.1 - 0.4 * t
        vx, vy = bohmian.velocity(s, cx, cy, t)
        assert vx == pytest.approx(0.8, rel=1e-12) and vy == pytest.approx(-0.4, rel=1e-12)


def test_symmetric_state_has_no_transverse_velocity_on_axis():
    vx, _ = bohmian.velocity(double_slit_state(), np.zeros(9), np.linspace(-0.5, 4, 9), 0.7)
    np.testing.assert_allclose(vx, 0.0, atol=1e-13)


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(0.0, 5.0), st.floats(0.05, 1.0))
def test_velocity_matches_phase_gradient(x, y, t):
    s = double_slit_state()
    psi = s.value(x, y, t)
    if abs(psi) < 1e-4 * s.peak_bound(t):
        return
    h = 1e-6

    def phase(dx, dy):
        return np.angle(s.value(x + dx, y + dy, t) / psi)

    vx, vy = bohmian.velocity(s, x, y, t)
    fx = (phase(h, 0) - phase(-h, 0)) / (2 * h)
    fy = (phase(0, h) - phase(0, -h)) / (2 * h)
    scale = max(1.0, abs(vx), abs(vy))
    assert abs(vx - fx) < 1e-6 * scale and abs(vy - fy) < 1e-6 * scale


def test_velocity_at_node_raises():
    s = double_slit_state().scaled(1.0, -1.0)  # antisymmetric: psi vanishes on x = 0
    with pytest.raises(NodeError):
        bohmian.velocity(s, 0.0, 1.0, 0.3)


def test_free_gaussian_moves_in_straight_line():
    s = _single()
    tr = bohmian.integrate(0.2, -0.1, 0.0, 1.5, 0.1, s, tol=1e-10)
    np.testing.assert_allclose(tr.x, 0.2 + 0.8 * tr.t, atol=1e-9)
    np.testing.assert_allclose(tr.y, -0.1 - 0.4 * tr.t, atol=1e-9)
    assert tr.which_way == "A"


def test_round_trip_returns_to_start():
    s = double_slit_state()
    fwd = bohmian.integrate(1.3, 0.1, 0.0, 0.7, 0.05, s, tol=1e-8)
    x1, y1 = fwd.x[-1], fwd.y[-1]
    back = bohmian.integrate(x1, y1, 0.7, 0.0, 0.05, s, tol=1e-8)
    assert back.t[0] == 0.0 and back.t[-1] == 0.7
    assert abs(back.x[0] - 1.3) < 1e-5 and abs(back.y[0] - 0.1) < 1e-5


def test_trajectories_do_not_cross():
    s = double_slit_state()
    rng = np.random.default_rng(3)
    x0, y0 = bohmian.sample_positions(s, 200, rng)
    ens = bohmian.flow(s, x0, y0, 0.0, np.linspace(0.1, 0.7, 7), tol=1e-8)
    assert not ens.failed.any()
    for j in range(ens.t.size):
        pts = np.stack([ens.x[:, j], ens.y[:, j]], axis=1)
        d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
        d[np.diag_indices_from(d)] = np.inf
        assert d.min() > 1e-6


def test_which_way_downstream_and_mirror():
    s = double_slit_state()
    assert bohmian.which_way(1.5, 3.5, 0.7, s) == "A"
    assert bohmian.which_way(-1.5, 3.5, 0.7, s) == "B"


@settings(max_examples=10, deadline=None)
@given(st.floats(0.05, 4.0), st.floats(1.0, 5.0))
def test_which_way_mirror_swaps_labels(x, y):
    s = double_slit_state()
    a = bohmian.which_way_many([x, -x], [y, y], 0.7, s)
    assert set(a) == {"A", "B"}


def test_which_way_on_symmetry_axis_is_undecided():
    with pytest.raises(UndecidedError):
        bohmian.which_way(0.0, 3.5, 0.7, double_slit_state())


def test_separatrix_zero_flux_is_centered():
    x = bohmian.separatrix(0.7, 3.5, -3.0, 3.0, 1e-6, double_slit_state())
    assert abs(x) < 1e-5


def test_separatrix_shifts_toward_weaker_branch():
    particle = Particle(1.0, 0.0, NATURAL)
    x = bohmian.separatrix(0.7, 3.5, -3.0, 3.0, 1e-6, double_slit_state(), FluxConfig(math.pi / 4), particle)
    # slit B's branch is scaled by e^{-pi/4}: the boundary moves into the B half
    assert x < -0.1


def test_separatrix_needs_bracket():
    with pytest.raises(NoBracketError):
        bohmian.separatrix(0.7, 3.5, 0.5, 3.0, 1e-6, double_slit_state())


def test_separatrix_needs_particle_with_flux():
    with pytest.raises(DomainError):
        bohmian.separatrix(0.7, 3.5, -3.0, 3.0, 1e-6, double_slit_state(), FluxConfig(1.0))


def test_integrate_records_line_integral():
    particle = Particle(1.0, 0.0, NATURAL)
    flux = FluxConfig(0.5, gauge=lambda x, y, t: 0.1 * x)
    tr = bohmian.integrate(-1.4, 3.4, 0.7, 0.0, 0.1, double_slit_state(), flux=flux, particle=particle)
    assert tr.which_way == "B"
    assert tr.line_integral == pytest.approx(0.1 * tr.x[-1] + 0.5)


def test_trajectory_requires_increasing_time():
    with pytest.raises(DomainError):
        bohmian.Trajectory(np.array([0.0, 0.0]), np.zeros(2), np.zeros(2))


def test_sampler_matches_density_moments():
    s = double_slit_state()
    rng = np.random.default_rng(7)
    x, y = bohmian.sample_positions(s, 20000, rng)
    # |psi(., 0)|^2 is two well-separated Gaussians with sd 1/sqrt(32) in each direction
    sd = 1 / math.sqrt(32)
    assert abs(np.mean(x > 0) - 0.5) < 0.015
    assert np.std(y) == pytest.approx(sd, rel=0.03)
    assert np.std(np.abs(x) - 1.5) == pytest.approx(sd, rel=0.03)


def test_forward_ensemble_labels_are_balanced():
    ens = bohmian.forward_ensemble(double_slit_state(), 400, 0.7, seed=2)
    labs = ens.labels()
    assert set(labs) <= {"A", "B"}
    assert 150 < np.sum(labs == "A") < 250


def test_flow_rejects_non_monotone_times():
    with pytest.raises(DomainError):
        bohmian.flow(double_slit_state(), [1.0], [0.0], 0.0, [0.5, 0.2])
