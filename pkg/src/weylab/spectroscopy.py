"""First-order absorption spectroscopy of the complex-frequency oscillator.

Drive: ``A(x, t) = eps A0 cos((omega / c) k.x - omega t)`` coupled through
``H'(t) = (i hbar e_C / m c) A0 cos(...) eps.grad`` (A0^2 dropped). The
perturbation acts on (-t, t), starting from level p. With

    Omega_R = (E^R_n - E^R_p) / hbar,   Omega_I = (E^I_n - E^I_p) / hbar,

the first-order amplitude of level n is

    c1 = (e_C A0 / 2mc) [ S(i(Omega_R + omega) - Omega_I) V
                        + S(i(Omega_R - omega) - Omega_I) Vbar ],
    S(z) = (e^{zt} - e^{-zt}) / z.

``V`` is the matrix element of ``e^{-i (omega/c) k.x} eps.grad`` and ``Vbar`` of
``e^{+i (omega/c) k.x} eps.grad``; that pairing is the one for which the
expression above is the exact first-order solution of the coefficient
equations. The first term resonates at omega = -Omega_R (emission side),
the second at omega = +Omega_R (absorption side).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import AccuracyError, DomainError
from .oscillator import eigenfunction_1d, eigenfunction_1d_derivative, eigenvalue

SMALL_T_MAX = 0.1  # |Omega_I t| below this for the small-t lineshape
LONG_T_MIN = 3.0  # |Omega_I t| above this for the long-t lineshape


class RegimeWarning(UserWarning):
    pass


@dataclass(frozen=True)
class DriveField:
    amplitude: float
    omega: float
    k_hat: tuple[float, float, float] = (0.0, 0.0, 1.0)
    eps_hat: tuple[float, float, float] = (1.0, 0.0, 0.0)

    def __post_init__(self):
        k = np.asarray(self.k_hat, float)
        e = np.asarray(self.eps_hat, float)
        if k.shape != (3,) or e.shape != (3,):
            raise DomainError("k_hat and eps_hat are 3-vectors")
        if abs(np.linalg.norm(k) - 1) > 1e-12 or abs(np.linalg.norm(e) - 1) > 1e-12:
            raise DomainError("k_hat and eps_hat must be unit vectors")
        if abs(k @ e) > 1e-12:
            raise DomainError("polarisation must be transverse (eps . k = 0)")
        if self.amplitude < 0:
            raise DomainError("drive amplitude must be non-negative")

    def wave_vector(self, c: float = 1.0, omega=None) -> np.ndarray:
        w = self.omega if omega is None else omega
        return w / c * np.asarray(self.k_hat, float)


# ----------------------------------------------------------------------- matrix elements


def _axis_tables(nmax, omega, kappa, mass, hbar, bilinear, tol=1e-12, max_doublings=8):
    """1D integrals <n| e^{+-i kappa x} |p> and <n| e^{+-i kappa x} d/dx |p> for n, p <= nmax.

    Trapezoid rule on a box where the Gaussian envelope has decayed below
    1e-30, doubling the point count until the tables stop changing.
    """
    alpha_re = mass * complex(omega).real / hbar
    L = (math.sqrt(2 * nmax + 1) + 9) / math.sqrt(alpha_re)
    ref = math.sqrt(abs(mass * complex(omega) / hbar))
    m = 64 + 4 * nmax + int(4 * abs(kappa) * L)
    prev = None
    for _ in range(max_doublings):
        x = np.linspace(-L, L, m + 1)
        w = np.full(x.size, x[1] - x[0])
        w[[0, -1]] *= 0.5
        phi = np.array([eigenfunction_1d(k, omega, x, mass, hbar) for k in range(nmax + 1)])
        dphi = np.array([eigenfunction_1d_derivative(k, omega, x, mass, hbar) for k in range(nmax + 1)])
        left = phi if bilinear else np.conj(phi)
        tabs = []
        for sign in (+1, -1):
            wk = w * np.exp(1j * sign * kappa * x)
            tabs.append((left * wk) @ phi.T)
            tabs.append((left * wk) @ dphi.T)
        tabs = np.array(tabs)
        if prev is not None and np.max(np.abs(tabs - prev)) <= tol * max(1.0, ref):
            return tabs
        prev = tabs
        m *= 2
    raise AccuracyError("matrix-element quadrature did not converge")


def _element(n, p, tables, eps, sign):
    """Combine per-axis tables into <n| e^{sign i K.x} eps.grad |p>."""
    o = 0 if sign > 0 else 2
    total = 0j
    for j in range(3):
        if eps[j] == 0:
            continue
        term = eps[j] * tables[j][o + 1][n[j], p[j]]
        for i in range(3):
            if i != j:
                term = term * tables[i][o][n[i], p[i]]
        total += term
    return total


def matrix_element(
    n: Sequence[int],
    p: Sequence[int],
    omega_osc: Sequence[complex],
    drive: DriveField,
    mass: float = 1.0,
    hbar: float = 1.0,
    c: float = 1.0,
    bilinear: bool = False,
    tol: float = 1e-12,
) -> tuple[complex, complex]:
    """(V_np, Vbar_np) by tensor-product quadrature.

    The bra is complex conjugated (``bilinear=False``) as in <n|H'|p>;
    ``bilinear=True`` uses the unconjugated c-product instead.
    """
    K = drive.wave_vector(c)
    nmax = max(max(n), max(p))
    tables = [_axis_tables(nmax, omega_osc[j], K[j], mass, hbar, bilinear, tol) for j in range(3)]
    eps = np.asarray(drive.eps_hat, float)
    return _element(n, p, tables, eps, -1), _element(n, p, tables, eps, +1)


def matrix_elements(basis, omega_osc, drive, mass=1.0, hbar=1.0, c=1.0, bilinear=False, tol=1e-12):
    """(V, Vbar) as N x N arrays over a list of levels."""
    K = drive.wave_vector(c)
    nmax = max(max(b) for b in basis)
    tables = [_axis_tables(nmax, omega_osc[j], K[j], mass, hbar, bilinear, tol) for j in range(3)]
    eps = np.asarray(drive.eps_hat, float)
    N = len(basis)
    V = np.empty((N, N), complex)
    Vb = np.empty((N, N), complex)
    for a, n in enumerate(basis):
        for b, p in enumerate(basis):
            V[a, b] = _element(n, p, tables, eps, -1)
            Vb[a, b] = _element(n, p, tables, eps, +1)
    return V, Vb


def level_norm(n, omega_osc, mass=1.0, hbar=1.0) -> float:
    """Integral of |phi_n|^2 over space (1 for real frequencies)."""
    out = 1.0
    for nj, wj in zip(n, omega_osc):
        tab = _axis_tables(nj, wj, 0.0, mass, hbar, False)
        out *= tab[0][nj, nj].real
    return out


@dataclass(frozen=True)
class TransitionPair:
    """Transition p -> n: frequency differences, matrix elements and final-level data."""

    p: tuple[int, ...]
    n: tuple[int, ...]
    omega_R: float
    omega_I: float
    V: complex = 0j
    V_bar: complex = 1 + 0j
    energy_imag_n: float = 0.0
    norm_n: float = 1.0

    @classmethod
    def from_levels(cls, n, p, omega_osc, drive, mass=1.0, hbar=1.0, c=1.0, bilinear=False):
        En = eigenvalue(n, omega_osc, hbar)
        Ep = eigenvalue(p, omega_osc, hbar)
        V, Vb = matrix_element(n, p, omega_osc, drive, mass, hbar, c, bilinear)
        return cls(
            tuple(p),
            tuple(n),
            (En.real - Ep.real) / hbar,
            (En.imag - Ep.imag) / hbar,
            V,
            Vb,
            En.imag,
            level_norm(n, omega_osc, mass, hbar),
        )

    def reversed(self) -> "TransitionPair":
        """The n -> p pair with frequency differences negated (elements not recomputed)."""
        return TransitionPair(self.n, self.p, -self.omega_R, -self.omega_I, self.V, self.V_bar)


# ------------------------------------------------------------------------ coefficients


def _sinhc(w):
    w = np.asarray(w, complex)
    small = np.abs(w) < 1e-3
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(small, 1 + w * w / 6 + w**4 / 120, np.sinh(w) / np.where(small, 1, w))
    return out


def _window(z, t):
    """(e^{zt} - e^{-zt}) / z, stable as z -> 0."""
    return 2 * t * _sinhc(z * t)


def _prefactor(drive, e_complex, mass, c):
    return complex(e_complex) * drive.amplitude / (2 * mass * c)


def _omega(drive, omega):
    return drive.omega if omega is None else np.asarray(omega, float)


def c1(t, pair: TransitionPair, drive: DriveField, e_complex: complex = 1.0, mass=1.0, c=1.0, omega=None):
    """Exact first-order amplitude, both resonant and antiresonant terms."""
    w = _omega(drive, omega)
    zp = 1j * (pair.omega_R + w) - pair.omega_I
    zm = 1j * (pair.omega_R - w) - pair.omega_I
    return _prefactor(drive, e_complex, mass, c) * (_window(zp, t) * pair.V + _window(zm, t) * pair.V_bar)


def _resonant_side(pair, w):
    """Detuning and element of the dominant term at drive frequency w."""
    absorb = np.abs(pair.omega_R - w) <= np.abs(pair.omega_R + w)
    delta = np.where(absorb, pair.omega_R - w, pair.omega_R + w)
    elem2 = np.where(absorb, abs(pair.V_bar) ** 2, abs(pair.V) ** 2)
    return delta, elem2


def regime_ok(t, pair: TransitionPair, long_time: bool = False) -> bool:
    g = abs(pair.omega_I * t)
    return g >= LONG_T_MIN if long_time else g < SMALL_T_MAX


def _check_regime(t, pair, long_time):
    if not regime_ok(t, pair, long_time):
        kind = "long-time" if long_time else "small-t"
        warnings.warn(f"{kind} lineshape used outside its regime (|Omega_I t| = {abs(pair.omega_I * t):.3g})", RegimeWarning, stacklevel=3)


def c1_squared_resonant(t, pair, drive, e_complex=1.0, mass=1.0, c=1.0, omega=None):
    """|c1|^2 keeping only the dominant term, no further approximation."""
    w = _omega(drive, omega)
    delta, elem2 = _resonant_side(pair, w)
    g = pair.omega_I
    pref = abs(complex(e_complex)) ** 2 * drive.amplitude**2 / (2 * mass**2 * c**2)
    num = 2 * (np.sinh(g * t) ** 2 + np.sin(delta * t) ** 2)  # cosh 2gt - cos 2dt
    den = delta**2 + g**2
    with np.errstate(invalid="ignore", divide="ignore"):
        shape = np.where(den > 0, num / np.where(den > 0, den, 1), 2 * t**2)
    return pref * shape * elem2


def c1_squared_small_t(t, pair, drive, e_complex=1.0, mass=1.0, c=1.0, omega=None):
    """|c1|^2 for small |Omega_I t|: [sin^2(D t) + (Omega_I t)^2] / [D^2 + Omega_I^2]."""
    _check_regime(t, pair, False)
    w = _omega(drive, omega)
    delta, elem2 = _resonant_side(pair, w)
    g = pair.omega_I
    pref = abs(complex(e_complex)) ** 2 * drive.amplitude**2 / (mass**2 * c**2)
    num = np.sin(delta * t) ** 2 + (g * t) ** 2
    den = delta**2 + g**2
    with np.errstate(invalid="ignore", divide="ignore"):
        shape = np.where(den > 0, num / np.where(den > 0, den, 1), t**2)
    return pref * shape * elem2


def c1_squared_long_t(t, pair, drive, e_complex=1.0, mass=1.0, c=1.0, omega=None):
    """|c1|^2 in the long-time limit: cosh(2 Omega_I t) / [D^2 + Omega_I^2], a Lorentzian in omega."""
    _check_regime(t, pair, True)
    w = _omega(drive, omega)
    delta, elem2 = _resonant_side(pair, w)
    g = pair.omega_I
    pref = abs(complex(e_complex)) ** 2 * drive.amplitude**2 / (2 * mass**2 * c**2)
    return pref * np.cosh(2 * g * t) / (delta**2 + g**2) * elem2


def lorentzian_width(pair: TransitionPair) -> float:
    """FWHM 2|Omega_I| of the long-time lineshape."""
    return 2 * abs(pair.omega_I)


def half_maximum_points(curve, center: float, width_guess: float, span: float = 50.0):
    """Numerically locate both half-maximum crossings of a single-peaked curve around ``center``."""
    peak = float(curve(center))
    f = lambda w: float(curve(w)) - 0.5 * peak  # noqa: E731
    step = max(width_guess, 1e-300)
    hi = center + step
    while f(hi) > 0:
        step *= 2
        hi = center + step
        if step > span * width_guess:
            raise AccuracyError("no half-maximum crossing found above the peak")
    right = brentq(f, center, hi, xtol=1e-15 * abs(hi), rtol=1e-15, maxiter=500)
    step = max(width_guess, 1e-300)
    lo = center - step
    while f(lo) > 0:
        step *= 2
        lo = center - step
        if step > span * width_guess:
            raise AccuracyError("no half-maximum crossing found below the peak")
    left = brentq(f, lo, center, xtol=1e-15 * abs(lo), rtol=1e-15, maxiter=500)
    return left, right


def transition_probability(
    t,
    pair: TransitionPair,
    drive: DriveField,
    history_scale: float = 1.0,
    e_complex: complex = 1.0,
    mass: float = 1.0,
    c: float = 1.0,
    hbar: float = 1.0,
    omega=None,
    formula: str = "exact",
):
    """P(p -> n) = |c1|^2 e^{2 E^I_n t / hbar} int |phi_n|^2 / history_scale^2.

    ``history_scale`` is the pre-interaction value of the path scale factor;
    it multiplies every drive frequency alike.
    """
    if not history_scale > 0:
        raise DomainError("history_scale must be positive")
    fn = {
        "exact": lambda: np.abs(c1(t, pair, drive, e_complex, mass, c, omega)) ** 2,
        "small_t": lambda: c1_squared_small_t(t, pair, drive, e_complex, mass, c, omega),
        "long_t": lambda: c1_squared_long_t(t, pair, drive, e_complex, mass, c, omega),
    }
    try:
        c1sq = fn[formula]()
    except KeyError:
        raise DomainError(f"unknown formula {formula!r}") from None
    return c1sq * math.exp(2 * pair.energy_imag_n * t / hbar) * pair.norm_n / history_scale**2


# ----------------------------------------------------------------------------- oracle


@dataclass(frozen=True, eq=False)
class ExactRun:
    basis: list
    coefficients: np.ndarray
    tail_population: float

    def __getitem__(self, level):
        return self.coefficients[self.basis.index(tuple(level))]


def integrate_exact(
    t: float,
    basis: Sequence[Sequence[int]],
    drive: DriveField,
    omega_osc: Sequence[complex],
    initial: Sequence[int],
    e_complex: complex = 1.0,
    mass: float = 1.0,
    hbar: float = 1.0,
    c: float = 1.0,
    bilinear: bool = False,
    tail_tol: float = 1e-8,
    rtol: float = 1e-12,
    atol: float = 1e-15,
) -> ExactRun:
    """Integrate the interaction-picture coefficient equations over (-t, t) in a truncated basis.

    ``i hbar dc_n/dt = sum_m H'_nm(t) exp(i Omega^R_nm t - Omega^I_nm t) c_m`` with
    c(-t) = e_initial. The tail (levels of highest total excitation) must
    stay below ``tail_tol`` in population, else AccuracyError.
    """
    basis = [tuple(int(k) for k in b) for b in basis]
    initial = tuple(initial)
    if initial not in basis:
        raise DomainError("initial level is not in the basis")
    E = np.array([eigenvalue(b, omega_osc, hbar) for b in basis])
    wR = (E.real[:, None] - E.real[None, :]) / hbar
    wI = (E.imag[:, None] - E.imag[None, :]) / hbar
    V, Vb = matrix_elements(basis, omega_osc, drive, mass, hbar, c, bilinear)
    pref = _prefactor(drive, e_complex, mass, c)
    w = drive.omega

    def rhs(s, y):
        M = (Vb * np.exp(-1j * w * s) + V * np.exp(1j * w * s)) * np.exp((1j * wR - wI) * s)
        return pref * (M @ y)

    y0 = np.zeros(len(basis), complex)
    y0[basis.index(initial)] = 1.0
    if drive.amplitude == 0 or t == 0:
        return ExactRun(basis, y0, 0.0)
    sol = solve_ivp(rhs, (-t, t), y0, method="DOP853", rtol=rtol, atol=atol)
    if not sol.success:
        raise AccuracyError(f"coefficient integration failed: {sol.message}")
    cT = sol.y[:, -1]
    top = max(sum(b) for b in basis)
    tail = float(sum(abs(cT[i]) ** 2 for i, b in enumerate(basis) if sum(b) == top and b != initial))
    if tail > tail_tol:
        raise AccuracyError(f"tail population {tail:.3g} exceeds {tail_tol:g}; enlarge the basis")
    return ExactRun(basis, cT, tail)


def box_basis(nmax: Sequence[int]) -> list:
    """All levels with n_j <= nmax[j]."""
    import itertools

    return [tuple(b) for b in itertools.product(*(range(k + 1) for k in nmax))]
