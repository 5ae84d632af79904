"""Acceptance criteria 1-9, each at its stated tolerance.

Every criterion prints one ``PASS``/``FAIL`` line (also when run as a script:
``python3 tests/test_acceptance.py``).
"""

import math
import sys
import time
from fractions import Fraction

import numpy as np
import pytest
import sympy
from scipy import stats

from weylab import abdensity as ab
from weylab import bohmian
from weylab import oscillator as osc
from weylab import spectroscopy as sp
from weylab.constants import CGS, NATURAL, Particle, alpha, alpha_s, flux_for_scale, flux_quantum, imaginary_coupling
from weylab.wavepacket import double_slit_state

DOUBLE_SLIT_T, DOUBLE_SLIT_Y = 0.7, 3.5
NEUTRAL = Particle(1.0, 0.0, NATURAL)
S2 = 1 / math.sqrt(2)


def _osc(ratio):
    return osc.frequencies((1.0, 1.3, 1.7), 1 + 1j * math.tan(2 * math.atan(ratio)), 1.0)


def _rel(a, b):
    return abs(a - b) / abs(b)


# --------------------------------------------------------------------------- criteria


def criterion_1():
    checks = {
        "alpha_S/alpha": (alpha_s(CGS) / alpha(CGS), 4.9e-22, 1e-2),
        "e_I(m_e)": (imaginary_coupling(CGS.m_e), 2.35e-31, 1e-2),
        "Phi_q": (flux_quantum(CGS), 4.14e-7, 5e-3),
        "m*Phi(10%)": (CGS.m_e * flux_for_scale(CGS.m_e, 1.1), 1.16e-14, 1e-2),
    }
    ok = all(_rel(v, ref) <= tol for v, ref, tol in checks.values())
    detail = ", ".join(f"{k}={v:.4g} (rel {_rel(v, r):.1e} <= {t:g})" for k, (v, r, t) in checks.items())
    return ok, detail


def criterion_2():
    xs = np.linspace(-6, 6, 241)
    state = double_slit_state()
    prof = ab.screen_profile(DOUBLE_SLIT_T, DOUBLE_SLIT_Y, xs, state, NEUTRAL, ab.FluxConfig(math.pi / 4))
    A = prof.which_way == "A"
    B = prof.which_way == "B"
    e = math.exp(math.pi / 4)
    factor_ok = np.allclose(prof.empty_factor[B], e, rtol=1e-15, atol=0) and np.allclose(
        prof.empty_factor[A], 1 / e, rtol=1e-15, atol=0
    )
    # pilot density against the branch formula written out by hand
    a, b = state.branches(xs, np.full_like(xs, DOUBLE_SLIT_Y), DOUBLE_SLIT_T)
    by_hand = np.where(A, np.abs(a + b / e) ** 2, np.abs(a * e + b) ** 2) / 2
    ok_ = ~prof.ambiguous
    formula_ok = np.allclose(prof.density_pilot[ok_], by_hand[ok_], rtol=1e-13, atol=0)
    side = lambda rho, m: float(np.trapezoid(np.where(m, rho, 0.0), xs))  # noqa: E731
    amp = side(prof.density_pilot, B) > side(prof.density_orthodox, B)
    sup = side(prof.density_pilot, A) < side(prof.density_orthodox, A)
    sep = prof.separatrix
    sides_ok = sep is not None and np.all(xs[A] > sep) and np.all(xs[B] < sep)
    zero = ab.screen_profile(DOUBLE_SLIT_T, DOUBLE_SLIT_Y, xs, state, NEUTRAL, ab.FluxConfig(0.0))
    zk = ~zero.ambiguous
    zdiff = float(np.max(np.abs(zero.density_pilot[zk] - zero.density_orthodox[zk])))
    ok = bool(factor_ok and formula_ok and amp and sup and sides_ok and zdiff < 1e-10)
    detail = (
        f"separatrix x={sep:.7f}, B-side factor e^(pi/4)={e:.4f}, "
        f"B pilot/orthodox integral {side(prof.density_pilot, B):.4f}/{side(prof.density_orthodox, B):.4f}, "
        f"A {side(prof.density_pilot, A):.4f}/{side(prof.density_orthodox, A):.4f}, zero-flux max diff {zdiff:.1e}"
    )
    return ok, detail


def criterion_3():
    guide = ab.FluxConfig(math.pi / 4).guiding_state(double_slit_state(), NEUTRAL)
    ens = bohmian.forward_ensemble(guide, 10_000, DOUBLE_SLIT_T, seed=2024)
    xs = np.linspace(-4, 4, 500)
    ys = np.full(xs.shape, DOUBLE_SLIT_Y)
    back = bohmian.which_way_many(xs, ys, DOUBLE_SLIT_T, guide)
    fwd = bohmian.which_way_ensemble(xs, ys, DOUBLE_SLIT_T, ens)
    agree = float(np.mean(back == fwd))
    return agree >= 0.999, f"agreement {agree:.4f} on 500 points (>= 0.999), ensemble failures {int(ens.failed.sum())}"


def criterion_4():
    state = double_slit_state()
    n, bins = 10_000, 50
    ens = bohmian.flow(state, *bohmian.sample_positions(state, n, np.random.default_rng(4), 0.0), 0.0, [DOUBLE_SLIT_T])
    x_end = ens.x[:, -1]
    # x-marginal of |psi(., 0.7)|^2 by 2D trapezoid quadrature
    gx = np.linspace(-9, 9, 3601)
    gy = np.linspace(DOUBLE_SLIT_Y - 4, DOUBLE_SLIT_Y + 4, 801)
    X, Y = np.meshgrid(gx, gy, indexing="ij")
    marg = np.trapezoid(np.abs(state.value(X, Y, DOUBLE_SLIT_T)) ** 2, gy, axis=1)
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (marg[1:] + marg[:-1]) * np.diff(gx))])
    cdf /= cdf[-1]
    edges = np.interp(np.linspace(0, 1, bins + 1)[1:-1], cdf, gx)
    counts = np.bincount(np.searchsorted(edges, x_end), minlength=bins)
    chi2, p = stats.chisquare(counts, np.full(bins, n / bins))
    ok = p > 0.01 and not ens.failed.any()
    return ok, f"chi2={chi2:.2f} on {bins - 1} dof, p={p:.3f} (> 0.01)"


def criterion_5():
    w = _osc(1e-21)
    n, p = (1, 0, 0), (0, 0, 0)
    En, Ep = osc.eigenvalue(n, w), osc.eigenvalue(p, w)
    pair = sp.TransitionPair(p, n, En.real - Ep.real, En.imag - Ep.imag, 0j, 1 + 0j, En.imag, sp.level_norm(n, w))
    drive = sp.DriveField(1e-3, pair.omega_R)
    omegas = pair.omega_R + 0.01 * np.arange(-150, 151)
    c1sq = np.abs(sp.c1(10.0, pair, drive, omega=omegas)) ** 2
    peak = omegas[np.argmax(c1sq)]
    argmaxes = {
        s: int(np.argmax(sp.transition_probability(10.0, pair, drive, s, omega=omegas))) for s in (0.5, 1.0, 2.0)
    }
    ok = peak == pair.omega_R and len(set(argmaxes.values())) == 1 and argmaxes[1.0] == 150
    return ok, f"peak at omega={peak!r} vs omega_R={pair.omega_R!r}; argmax per history scale {argmaxes}"


def criterion_6():
    w = _osc(1e-3)
    pair = sp.TransitionPair.from_levels((1, 0, 0), (0, 0, 0), w, sp.DriveField(1e-3, 1.0))
    drive = sp.DriveField(1e-3, pair.omega_R)
    t = 5000.0
    assert sp.regime_ok(t, pair, long_time=True)
    curve = lambda om: sp.c1_squared_long_t(t, pair, drive, omega=om)  # noqa: E731
    lo, hi = sp.half_maximum_points(curve, pair.omega_R, pair.omega_I)
    e_lo = _rel(lo, pair.omega_R - pair.omega_I)
    e_hi = _rel(hi, pair.omega_R + pair.omega_I)
    e_w = _rel(hi - lo, sp.lorentzian_width(pair))
    ok = max(e_lo, e_hi) <= 1e-6
    return ok, f"half-max rel errors {e_lo:.1e}, {e_hi:.1e} (<= 1e-6); FWHM {hi - lo:.9g} vs 2 omega_I (rel {e_w:.1e})"


def criterion_7():
    w = _osc(1e-3)
    basis = sp.box_basis((4, 2, 3))
    amps = np.geomspace(1e-4, 1e-3, 4)
    errs = []
    for A0 in amps:
        drive = sp.DriveField(A0, 0.9, k_hat=(S2, 0, S2), eps_hat=(S2, 0, -S2))
        pair = sp.TransitionPair.from_levels((1, 0, 0), (0, 0, 0), w, drive)
        run = sp.integrate_exact(3.0, basis, drive, w, (0, 0, 0))
        errs.append(abs(run[(1, 0, 0)] - sp.c1(3.0, pair, drive)))
    slope = float(np.polyfit(np.log(amps), np.log(errs), 1)[0])
    # Hermitian limit against the real-frequency sine formula
    wr = _osc(0.0)
    drive = sp.DriveField(1e-4, 0.93, k_hat=(S2, 0, S2), eps_hat=(S2, 0, -S2))
    pair = sp.TransitionPair.from_levels((1, 0, 0), (0, 0, 0), wr, drive)
    t, wR = 4.0, pair.omega_R
    textbook = 1e-4 / 2 * (
        pair.V * 2 * math.sin((wR + 0.93) * t) / (wR + 0.93) + pair.V_bar * 2 * math.sin((wR - 0.93) * t) / (wR - 0.93)
    )
    run = sp.integrate_exact(t, basis, drive, wr, (0, 0, 0))
    herm_c1 = _rel(sp.c1(t, pair, drive), textbook)
    herm_ode = _rel(run[(1, 0, 0)], textbook)
    ok = abs(slope - 2.0) <= 0.1 and herm_c1 <= 1e-4 and herm_ode <= 1e-4
    return ok, f"error exponent {slope:.4f} (2.0 +- 0.1); Hermitian limit rel diff c1 {herm_c1:.1e}, ODE {herm_ode:.1e} (<= 1e-4)"


def criterion_8():
    term = all(
        osc.series_coefficients(n, terms=n + 6)[n + 2] == 0
        and all(isinstance(c, Fraction) for c in osc.series_coefficients(n, terms=n + 6))
        for n in range(11)
    )
    g = np.linspace(-4, 4, 21)
    pts = np.meshgrid(g, g, g, indexing="ij")
    res = max(osc.hamiltonian_residual(n, _osc(1e-3), pts) for n in [(0, 0, 0), (1, 0, 0), (2, 1, 0), (3, 2, 1)])
    zs = sympy.Symbol("z")
    rng = np.random.default_rng(8)
    z = rng.uniform(-3, 3, 1000) + 1j * rng.uniform(-3, 3, 1000)
    ode = 0.0
    for n in range(11):
        h = sympy.hermite(n, zs)
        d1 = np.broadcast_to(sympy.lambdify(zs, sympy.diff(h, zs), "numpy")(z), z.shape)
        d2 = np.broadcast_to(sympy.lambdify(zs, sympy.diff(h, zs, 2), "numpy")(z), z.shape)
        H = osc.hermite(n, z)
        r = np.abs(d2 - 2 * z * d1 + 2 * n * H) / (np.abs(d2) + np.abs(2 * z * d1) + np.abs(2 * n * H) + 1e-300)
        ode = max(ode, float(r.max()))
    ok = term and res < 1e-6 and ode < 1e-8
    return ok, f"series terminates (n<=10): {term}; Hamiltonian residual {res:.1e} (< 1e-6); Hermite ODE residual {ode:.1e} (< 1e-8)"


def criterion_9():
    state = double_slit_state()
    base = ab.FluxConfig(math.pi / 4)
    xs = np.linspace(-5, 5, 60)
    ys = np.full(xs.shape, DOUBLE_SLIT_Y)
    ref = ab.density_pilot(xs, ys, DOUBLE_SLIT_T, state, NEUTRAL, base)
    rng = np.random.default_rng(9)
    same = 0
    for _ in range(20):
        c = rng.normal(size=4)
        gauge = lambda x, y, t, c=c: c[0] + c[1] * x + c[2] * np.sin(c[3] * y) + c[3] * x * y * t  # noqa: E731
        rho = ab.density_pilot(xs, ys, DOUBLE_SLIT_T, state, NEUTRAL, base.with_gauge(gauge))
        same += bool(np.array_equal(rho, ref))
    return same == 20, f"{same}/20 random gauges bit-identical"


CRITERIA = [
    (1, "constants", criterion_1),
    (2, "double-slit profile sign/shape and zero-flux control", criterion_2),
    (3, "which-way backward trace vs forward ensemble", criterion_3),
    (4, "equivariance chi-square", criterion_4),
    (5, "resonance peak and history-scale invariance", criterion_5),
    (6, "Lorentzian half-maximum points", criterion_6),
    (7, "perturbation-theory oracle", criterion_7),
    (8, "oscillator series, Hamiltonian and Hermite residuals", criterion_8),
    (9, "gauge invariance", criterion_9),
]


def _line(num, name, ok, detail, secs):
    return f"CRITERION {num} {'PASS' if ok else 'FAIL'} [{name}] {detail} ({secs:.1f}s)"


@pytest.mark.parametrize("num,name,fn", CRITERIA, ids=[f"criterion_{c[0]}" for c in CRITERIA])
def test_criterion(num, name, fn, capsys):
    t0 = time.perf_counter()
    ok, detail = fn()
    line = _line(num, name, ok, detail, time.perf_counter() - t0)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    failed = 0
    for num, name, fn in CRITERIA:
        t0 = time.perf_counter()
        ok, detail = fn()
        failed += not ok
        print(_line(num, name, ok, detail, time.perf_counter() - t0), flush=True)
    sys.exit(1 if failed else 0)
