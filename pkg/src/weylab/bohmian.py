"""Pilot-wave trajectories, which-way labels and the screen separatrix.

The guidance law is ``v = (hbar / m) Im(grad psi / psi)``. Trajectories are
integrated with classical RK4 under step-doubling error control; all members
of an ensemble advance together in numpy arrays but keep individual step
sizes, so a trajectory grazing a near-node does not slow the rest.

A point's which-way label is the sign of x where its trajectory crosses the
slit plane t = 0: ``"A"`` for x > 0, ``"B"`` for x < 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import AccuracyError, DomainError, NoBracketError, NodeError, UndecidedError

NODE_TOL = 1e-12
SLIT_PLANE_T = 0.0
UNDECIDED = "undecided"


@dataclass(frozen=True, eq=False)
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    which_way: str = UNDECIDED
    line_integral: float = 0.0

    def __post_init__(self):
        if np.any(np.diff(self.t) <= 0):
            raise DomainError("trajectory samples must be strictly increasing in t")

    def __len__(self):
        return len(self.t)

    def at(self, t: float) -> tuple[float, float]:
        return float(np.interp(t, self.t, self.x)), float(np.interp(t, self.t, self.y))


@dataclass(frozen=True, eq=False)
class Ensemble:
    """Positions of many trajectories sampled on a common time grid.

    ``x`` and ``y`` have shape (n_trajectories, n_times); rows of failed
    members (node hit) are NaN from the failure onward.
    """

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    failed: np.ndarray

    def labels(self, ambiguity: float = 0.0) -> np.ndarray:
        """Which-way label of each member from its position at t = 0."""
        j = np.flatnonzero(np.isclose(self.t, SLIT_PLANE_T, atol=1e-12))
        if j.size == 0:
            raise DomainError("ensemble does not include the slit plane t = 0")
        return _labels(self.x[:, j[0]], ambiguity)


def _labels(x0, ambiguity):
    x0 = np.asarray(x0)
    out = np.full(x0.shape, UNDECIDED, dtype=object)
    out[x0 > ambiguity] = "A"
    out[x0 < -ambiguity] = "B"
    return out


def _raw_velocity(state, x, y, t, node_tol=NODE_TOL):
    psi, gx, gy = state.value_and_gradient(x, y, t)
    at_node = np.abs(psi) < node_tol * state.peak_bound(t)
    with np.errstate(divide="ignore", invalid="ignore"):
        hm = state.hbar / state.mass
        vx = hm * np.imag(gx / psi)
        vy = hm * np.imag(gy / psi)
    return vx, vy, at_node


def velocity(state, x, y, t, node_tol: float = NODE_TOL):
    """Guidance velocity (v_x, v_y) at the query points.

    Raises NodeError where |psi| falls below ``node_tol`` times the peak
    amplitude; the field is singular there and no regularisation is applied.
    """
    vx, vy, at_node = _raw_velocity(state, x, y, t, node_tol)
    if np.any(at_node):
        raise NodeError("velocity requested at a node of psi")
    return vx, vy


def _rk4(state, x, y, t, h, node_tol):
    k1x, k1y, n1 = _raw_velocity(state, x, y, t, node_tol)
    k2x, k2y, n2 = _raw_velocity(state, x + 0.5 * h * k1x, y + 0.5 * h * k1y, t + 0.5 * h, node_tol)
    k3x, k3y, n3 = _raw_velocity(state, x + 0.5 * h * k2x, y + 0.5 * h * k2y, t + 0.5 * h, node_tol)
    k4x, k4y, n4 = _raw_velocity(state, x + h * k3x, y + h * k3y, t + h, node_tol)
    nx = x + h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
    ny = y + h / 6 * (k1y + 2 * k2y + 2 * k3y + k4y)
    return nx, ny, n1 | n2 | n3 | n4


def flow(
    state,
    x0,
    y0,
    t0: float,
    times,
    tol: float = 1e-6,
    h0: float | None = None,
    node_tol: float = NODE_TOL,
    max_iter: int = 200_000,
) -> Ensemble:
    """Carry the points (x0, y0) at t0 along the guidance field.

    ``times`` must run monotonically away from ``t0`` (either direction).
    Each step is accepted when the step-doubling estimate of the local
    error is below ``tol * |h|``, i.e. ``tol`` is an error budget per unit time.
    """
    x = np.array(x0, float).ravel()
    y = np.array(y0, float).ravel()
    if x.shape != y.shape:
        raise DomainError("x0 and y0 must have the same shape")
    times = np.atleast_1d(np.asarray(times, float))
    span = times[-1] - t0
    direction = 1.0 if span >= 0 else -1.0
    if np.any(np.diff(times) * direction < 0) or (times[0] - t0) * direction < 0:
        raise DomainError("sample times must run monotonically away from t0")
    n, m = x.size, times.size
    X = np.full((n, m), np.nan)
    Y = np.full((n, m), np.nan)
    t = np.full(n, float(t0))
    idx = np.zeros(n, int)
    failed = np.zeros(n, bool)
    scale = max(abs(span), 1e-300)
    hmin = 1e-13 * scale
    h = np.full(n, direction * (abs(h0) if h0 else scale / 64 if span else 1.0))

    def record(sel):
        # store every sample time already reached by the selected members
        while True:
            due = sel & (idx < m)
            due[due] = np.abs(times[idx[due]] - t[due]) <= 1e-12 * scale
            if not due.any():
                return
            X[due, idx[due]] = x[due]
            Y[due, idx[due]] = y[due]
            idx[due] += 1

    record(np.ones(n, bool))
    for _ in range(max_iter):
        active = (idx < m) & ~failed
        if not active.any():
            break
        a = np.flatnonzero(active)
        ta, xa, ya = t[a], x[a], y[a]
        remaining = times[idx[a]] - ta
        step = direction * np.minimum(np.abs(h[a]), np.abs(remaining))
        x1, y1, n1 = _rk4(state, xa, ya, ta, step, node_tol)
        xm, ym, n2 = _rk4(state, xa, ya, ta, 0.5 * step, node_tol)
        x2, y2, n3 = _rk4(state, xm, ym, ta + 0.5 * step, 0.5 * step, node_tol)
        err = np.maximum(np.abs(x2 - x1), np.abs(y2 - y1)) / 15
        bad = n1 | n2 | n3 | ~np.isfinite(err)
        ok = (err <= tol * np.abs(step)) & ~bad
        with np.errstate(divide="ignore"):
            factor = np.clip(0.9 * (tol * np.abs(step) / err) ** 0.25, 0.2, 4.0)
        factor[bad] = 0.25
        acc = a[ok]
        x[acc] = x2[ok] + (x2[ok] - x1[ok]) / 15
        y[acc] = y2[ok] + (y2[ok] - y1[ok]) / 15
        t[acc] = np.where(np.abs(remaining[ok]) <= np.abs(step[ok]), times[idx[acc]], ta[ok] + step[ok])
        h[a] = step * factor
        stuck = np.abs(h[a]) < hmin
        failed[a[stuck]] = True
        sel = np.zeros(n, bool)
        sel[acc] = True
        record(sel)
    else:
        raise AccuracyError("trajectory integration did not finish within max_iter steps")
    return Ensemble(times, X, Y, failed)


def _sample_times(t0, t1, dt):
    if dt <= 0:
        raise DomainError("dt must be positive")
    k = int(np.floor(abs(t1 - t0) / dt + 1e-9))
    ts = t0 + np.sign(t1 - t0) * dt * np.arange(1, k + 1)
    if ts.size == 0 or not np.isclose(ts[-1], t1, rtol=0, atol=1e-12 * max(1.0, abs(t1))):
        ts = np.append(ts, t1)
    else:
        ts[-1] = t1
    return ts


def integrate(
    x0: float,
    y0: float,
    t0: float,
    t1: float,
    dt: float,
    state,
    tol: float = 1e-6,
    flux=None,
    particle=None,
) -> Trajectory:
    """Single trajectory from (x0, y0, t0) to t1, sampled every ``dt``.

    Backward integration (t1 < t0) is allowed. Samples are returned in
    increasing time order. When ``flux`` is given, the path's gauge line
    integral is set from its which-way label: in a curl-free region it only
    depends on the end point and the slit the path went through.
    """
    times = _sample_times(t0, t1, dt)
    ens = flow(state, [x0], [y0], t0, times, tol=tol, h0=dt)
    tt = np.concatenate([[t0], times])
    xx = np.concatenate([[x0], ens.x[0]])
    yy = np.concatenate([[y0], ens.y[0]])
    if t1 < t0:
        tt, xx, yy = tt[::-1], xx[::-1], yy[::-1]
    if ens.failed[0]:
        good = np.isfinite(xx)
        partial = Trajectory(tt[good], xx[good], yy[good])
        raise NodeError("trajectory ran into a node of psi", trajectory=partial)
    label = UNDECIDED
    j = np.flatnonzero(np.isclose(tt, SLIT_PLANE_T, atol=1e-12))
    if j.size:
        label = str(_labels(xx[j[0]], _ambiguity(tol, tt))[()])
    line = 0.0
    if flux is not None and label != UNDECIDED:
        line = float(flux.line_integral(label, xx[-1], yy[-1], tt[-1]))
    return Trajectory(tt, xx, yy, label, line)


def _ambiguity(tol, t):
    # |x(0)| below the integration error budget cannot be trusted for a label
    return max(1e-12, 10 * tol * float(np.max(np.abs(t))))


def slit_crossings(xs, ys, t: float, state, tol: float = 1e-6) -> np.ndarray:
    """x where the trajectory through each (x, y, t) crosses the slit plane t = 0."""
    ens = flow(state, xs, ys, t, [SLIT_PLANE_T], tol=tol)
    if ens.failed.any():
        raise NodeError(f"{int(ens.failed.sum())} backward path(s) hit a node")
    return ens.x[:, 0].reshape(np.shape(xs))


def which_way_many(xs, ys, t: float, state, tol: float = 1e-6) -> np.ndarray:
    """Vectorised which-way labels; ``"undecided"`` within the error budget of x = 0."""
    x0 = slit_crossings(np.atleast_1d(xs), np.atleast_1d(ys), t, state, tol)
    return _labels(x0, _ambiguity(tol, t))


def which_way(x: float, y: float, t: float, state, tol: float = 1e-6) -> str:
    """Label of the slit the trajectory through (x, y, t) came from, by backward tracing."""
    label = which_way_many([x], [y], t, state, tol)[0]
    if label == UNDECIDED:
        raise UndecidedError(f"trajectory through ({x}, {y}, {t}) meets the slit plane on the axis")
    return label


def guiding(state, flux=None, particle=None):
    """The wave that guides trajectories, given an optional flux configuration."""
    if flux is None:
        return state
    if particle is None:
        raise DomainError("a particle is needed to couple the flux")
    return flux.guiding_state(state, particle)


def separatrix(
    t: float,
    y: float,
    x_lo: float,
    x_hi: float,
    tol: float,
    state,
    flux_config=None,
    particle=None,
    int_tol: float = 1e-7,
    probes: int = 15,
) -> float:
    """Locate the boundary between A and B arrivals on the screen line (fixed t, y).

    Bracketing search: each round labels ``probes`` interior points at once
    (one vectorised backward integration) and keeps the sub-interval where
    the label flips, until the bracket is narrower than ``tol``. With
    ``probes=1`` this is plain bisection.
    """
    g = guiding(state, flux_config, particle)
    lo, hi = which_way_many([x_lo, x_hi], [y, y], t, g, int_tol)
    if lo == hi or UNDECIDED in (lo, hi):
        raise NoBracketError(f"which-way labels at x_lo and x_hi are {lo!r} and {hi!r}; no separatrix bracketed")
    a, b = float(x_lo), float(x_hi)
    while b - a > tol:
        xs = np.linspace(a, b, probes + 2)[1:-1]
        labs = which_way_many(xs, np.full(xs.size, y), t, g, int_tol)
        if (labs == UNDECIDED).any():
            return float(xs[np.flatnonzero(labs == UNDECIDED)[0]])
        flip = np.flatnonzero(labs != lo)
        k = flip[0] if flip.size else probes
        a, b = (a if k == 0 else xs[k - 1]), (b if k == probes else xs[k])
    return 0.5 * (a + b)


# ----------------------------------------------------------------------------- ensembles


def sample_positions(state, n: int, rng: np.random.Generator, t: float = 0.0):
    """Draw n points from |psi(., t)|^2 for a packet state, exactly.

    Proposals come from the incoherent mixture sum_i |psi_i|^2 (a Gaussian
    mixture); since |sum_i psi_i|^2 <= N sum_i |psi_i|^2, accepting with
    probability |psi|^2 / (N sum_i |psi_i|^2) is an exact rejection sampler.
    """
    from .wavepacket import _propagate

    pk = state.packets
    params = [_propagate(p, t, state.mass, state.hbar) for p in pk]
    ws = np.array([abs(amp) ** 2 / complex(a).real for a, amp, _, _ in params])
    ws /= ws.sum()
    out_x = np.empty(0)
    out_y = np.empty(0)
    while out_x.size < n:
        m = 2 * (n - out_x.size) * len(pk) + 16
        comp = rng.choice(len(pk), size=m, p=ws)
        sd = np.array([1 / np.sqrt(4 * complex(a).real) for a, _, _, _ in params])[comp]
        cx = np.array([c for _, _, c, _ in params])[comp]
        cy = np.array([c for _, _, _, c in params])[comp]
        x = cx + sd * rng.standard_normal(m)
        y = cy + sd * rng.standard_normal(m)
        coherent = np.abs(sum(_one(p, x, y, t, state) for p in pk)) ** 2
        incoherent = sum(np.abs(_one(p, x, y, t, state)) ** 2 for p in pk)
        keep = rng.random(m) * len(pk) * incoherent < coherent
        out_x = np.concatenate([out_x, x[keep]])
        out_y = np.concatenate([out_y, y[keep]])
    return out_x[:n], out_y[:n]


def _one(p, x, y, t, state):
    from .wavepacket import _packet_terms

    return _packet_terms(p, x, y, t, state.mass, state.hbar, gradient=False)


def forward_ensemble(state, n: int, t: float, seed: int = 0, tol: float = 1e-6) -> Ensemble:
    """n trajectories drawn from |psi(., 0)|^2 and carried to time t (samples at 0 and t)."""
    rng = np.random.default_rng(seed)
    x0, y0 = sample_positions(state, n, rng, 0.0)
    return flow(state, x0, y0, 0.0, [0.0, t], tol=tol)


def which_way_ensemble(xs, ys, t: float, ensemble: Ensemble, band: float = 0.25) -> np.ndarray:
    """Oracle labels for screen points from a forward ensemble ending at time t.

    Each point takes the label of the ensemble member passing nearest to it
    at time t. Only members within ``band`` of the point's y are considered,
    nearest in x among those; with none in the band the plain nearest
    neighbour is used.
    """
    labels = ensemble.labels()
    j = np.flatnonzero(np.isclose(ensemble.t, t))
    if j.size == 0:
        raise DomainError("ensemble has no samples at the requested time")
    ex = ensemble.x[:, j[0]]
    ey = ensemble.y[:, j[0]]
    ok = np.isfinite(ex) & (labels != UNDECIDED)
    ex, ey, labels = ex[ok], ey[ok], labels[ok]
    tree = cKDTree(np.column_stack([ex, ey]))
    xs = np.atleast_1d(np.asarray(xs, float))
    ys = np.broadcast_to(np.asarray(ys, float), xs.shape)
    out = np.empty(xs.shape, dtype=object)
    for i, (px, py) in enumerate(zip(xs, ys)):
        near = np.abs(ey - py) < band
        if near.any():
            k = np.argmin(np.where(near, np.abs(ex - px), np.inf))
        else:
            k = tree.query([px, py])[1]
        out[i] = labels[k]
    return out
