"""Double-slit wavefunctions: analytic Gaussian packets and sampled grid fields.

Two interchangeable representations of psi(x, y, t):

* ``SlitState`` - branches psi_A, psi_B built from free Gaussian packets,
  propagated in closed form. Fast; used everywhere in the pipeline.
* ``WaveField`` - complex samples on a periodic uniform grid, advanced by the
  split-step Fourier method. Slow; used as the independent check on the
  closed form.

Packets are parametrised as ``A exp(-a |r - c|^2 + i k.(r - c))`` with ``k``
the wave vector (momentum / hbar).
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import AccuracyError, DomainError

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class GaussianPacket:
    center: tuple[float, float]
    a: complex
    momentum: tuple[float, float] = (0.0, 0.0)
    amplitude: complex = 1.0

    def __post_init__(self):
        if not complex(self.a).real > 0:
            raise DomainError(f"packet width parameter needs Re(a) > 0, got {self.a!r}")

    def evolved(self, t: float, mass: float = 1.0, hbar: float = 1.0) -> "GaussianPacket":
        """Free evolution by ``t`` in closed form.

        ``a -> a / (1 + 2 i a hbar t / m)``; the center drifts with
        ``hbar k / m`` and the amplitude picks up ``tau^-1 exp(i hbar k^2 t / 2m)``.
        Composes exactly: evolving by t1 then t2 equals evolving by t1 + t2.
        """
        if t < 0:
            raise DomainError("evolve_gaussian only runs forward in time")
        if mass <= 0:
            raise DomainError("mass must be positive")
        if t == 0:
            return self
        a, amp, cx, cy = _propagate(self, t, mass, hbar)
        return GaussianPacket((float(cx), float(cy)), complex(a), self.momentum, complex(amp))

    def value(self, x, y):
        return self.amplitude * np.exp(self._exponent(x, y))

    def value_and_gradient(self, x, y):
        psi = self.value(x, y)
        kx, ky = self.momentum
        return (
            psi,
            psi * (-2 * self.a * (x - self.center[0]) + 1j * kx),
            psi * (-2 * self.a * (y - self.center[1]) + 1j * ky),
        )

    def _exponent(self, x, y):
        dx = x - self.center[0]
        dy = y - self.center[1]
        kx, ky = self.momentum
        return -self.a * (dx * dx + dy * dy) + 1j * (kx * dx + ky * dy)

    @property
    def norm_squared(self) -> float:
        """Integral of |psi|^2 over the plane."""
        return abs(self.amplitude) ** 2 * math.pi / (2 * complex(self.a).real)


def evolve_gaussian(p: GaussianPacket, t: float, mass: float = 1.0, hbar: float = 1.0) -> GaussianPacket:
    return p.evolved(t, mass, hbar)


def _propagate(p: GaussianPacket, t, mass, hbar):
    # works for scalar or array t
    kx, ky = p.momentum
    tau = 1 + 2j * p.a * hbar * t / mass
    a_t = p.a / tau
    cx = p.center[0] + hbar * kx * t / mass
    cy = p.center[1] + hbar * ky * t / mass
    amp = p.amplitude / tau * np.exp(0.5j * hbar * (kx * kx + ky * ky) * t / mass)
    return a_t, amp, cx, cy


def _packet_terms(p: GaussianPacket, x, y, t, mass, hbar, gradient=True):
    a_t, amp, cx, cy = _propagate(p, t, mass, hbar)
    kx, ky = p.momentum
    dx = x - cx
    dy = y - cy
    psi = amp * np.exp(-a_t * (dx * dx + dy * dy) + 1j * (kx * dx + ky * dy))
    if not gradient:
        return psi
    return psi, psi * (-2 * a_t * dx + 1j * kx), psi * (-2 * a_t * dy + 1j * ky)


@dataclass(frozen=True)
class SlitState:
    """Two branches emerging from slits A and B, recombined as (psi_A + psi_B)/sqrt 2.

    ``psi_A`` / ``psi_B`` hold the t = 0 packets of each branch; evaluation at
    time t propagates them freely with ``mass`` and ``hbar``.
    """

    psi_A: tuple[GaussianPacket, ...]
    psi_B: tuple[GaussianPacket, ...]
    mass: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "psi_A", tuple(self.psi_A))
        object.__setattr__(self, "psi_B", tuple(self.psi_B))
        if not self.psi_A or not self.psi_B:
            raise DomainError("both slit branches need at least one packet")
        if self.mass <= 0 or self.hbar <= 0:
            raise DomainError("mass and hbar must be positive")

    def _branch(self, packets, x, y, t, gradient):
        x, y, t = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float), np.asarray(t, float))
        if np.any(t < 0):
            raise DomainError("SlitState is defined for t >= 0 (slit plane at t = 0)")
        if not gradient:
            return sum(_packet_terms(p, x, y, t, self.mass, self.hbar, False) for p in packets)
        psi = dx = dy = 0
        for p in packets:
            v, gx, gy = _packet_terms(p, x, y, t, self.mass, self.hbar)
            psi = psi + v
            dx = dx + gx
            dy = dy + gy
        return psi, dx, dy

    def branches(self, x, y, t):
        """(psi_A, psi_B) at the query points, without the 1/sqrt 2."""
        return self._branch(self.psi_A, x, y, t, False), self._branch(self.psi_B, x, y, t, False)

    def branch_gradients(self, x, y, t):
        return self._branch(self.psi_A, x, y, t, True), self._branch(self.psi_B, x, y, t, True)

    def value(self, x, y, t):
        a, b = self.branches(x, y, t)
        return (a + b) / SQRT2

    def value_and_gradient(self, x, y, t):
        (a, ax, ay), (b, bx, by) = self.branch_gradients(x, y, t)
        return (a + b) / SQRT2, (ax + bx) / SQRT2, (ay + by) / SQRT2

    def peak_bound(self, t=0.0):
        """Upper bound on max |psi(., t)| (per entry of ``t``); scales the node threshold."""
        t = np.asarray(t, float)
        total = sum(np.abs(_propagate(p, t, self.mass, self.hbar)[1]) for p in self.packets)
        return total / SQRT2

    def scaled(self, factor_A: complex = 1.0, factor_B: complex = 1.0) -> "SlitState":
        """Multiply every packet of each branch by a constant."""
        return replace(
            self,
            psi_A=tuple(replace(p, amplitude=p.amplitude * factor_A) for p in self.psi_A),
            psi_B=tuple(replace(p, amplitude=p.amplitude * factor_B) for p in self.psi_B),
        )

    def mirrored(self) -> "SlitState":
        """Reflect x -> -x, swapping the roles of the branches."""

        def flip(p):
            return replace(p, center=(-p.center[0], p.center[1]), momentum=(-p.momentum[0], p.momentum[1]))

        return replace(self, psi_A=tuple(map(flip, self.psi_B)), psi_B=tuple(map(flip, self.psi_A)))

    @property
    def packets(self):
        return self.psi_A + self.psi_B


def double_slit_state(
    slit_x: float = 1.5, a: float = 8.0, k_y: float = 5.0, prefactor: float = 8 / math.pi
) -> SlitState:
    """The two-slit state ``prefactor (e^{-a(x-1.5)^2} + e^{-a(x+1.5)^2}) e^{-a y^2} e^{i k_y y}``.

    Slit A is the packet at +slit_x. Each branch carries ``sqrt 2 * prefactor``
    so that ``(psi_A + psi_B)/sqrt 2`` is the formula above, unrenormalised.
    """
    amp = SQRT2 * prefactor
    A = GaussianPacket((slit_x, 0.0), a, (0.0, k_y), amp)
    B = GaussianPacket((-slit_x, 0.0), a, (0.0, k_y), amp)
    return SlitState((A,), (B,))


# --------------------------------------------------------------------------- grids


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid; points ``lo + j * (hi - lo) / n`` for j < n."""

    x_range: tuple[float, float]
    y_range: tuple[float, float]
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 16 or self.ny < 16:
            raise DomainError("grids need at least 16 points per axis")
        if not (self.x_range[1] > self.x_range[0] and self.y_range[1] > self.y_range[0]):
            raise DomainError("grid ranges must be increasing")

    @property
    def dx(self) -> float:
        return (self.x_range[1] - self.x_range[0]) / self.nx

    @property
    def dy(self) -> float:
        return (self.y_range[1] - self.y_range[0]) / self.ny

    @property
    def x(self) -> np.ndarray:
        return self.x_range[0] + self.dx * np.arange(self.nx)

    @property
    def y(self) -> np.ndarray:
        return self.y_range[0] + self.dy * np.arange(self.ny)

    def mesh(self):
        return np.meshgrid(self.x, self.y, indexing="ij")

    @property
    def kx(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.nx, self.dx)

    @property
    def ky(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.ny, self.dy)

    def contains(self, x, y) -> np.ndarray:
        x = np.asarray(x)
        y = np.asarray(y)
        return (
            (x >= self.x_range[0]) & (x <= self.x_range[1]) & (y >= self.y_range[0]) & (y <= self.y_range[1])
        )


# Wide enough that the reference packets do not wrap around the periodic box by t = 0.7.
DEFAULT_GRID = Grid((-20.0, 20.0), (-18.0, 22.0), 512, 512)

_HEADER = struct.Struct("<4sIIddddd")
_MAGIC = b"WFLD"


@dataclass(frozen=True, eq=False)
class WaveField:
    grid: Grid
    values: np.ndarray
    time: float = 0.0
    mass: float = 1.0
    hbar: float = 1.0
    _coeffs: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=complex)
        if values.shape != (self.grid.nx, self.grid.ny):
            raise DomainError(f"values shape {values.shape} does not match grid ({self.grid.nx}, {self.grid.ny})")
        n = norm(values, self.grid)
        if not (np.isfinite(n) and n > 0):
            raise DomainError("wave field must have a finite, positive norm")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def norm(self) -> float:
        return norm(self)

    def free_evolved(self, t: float) -> "WaveField":
        if t == self.time:
            return self
        phase = _kinetic_phase(self.grid, t - self.time, self.mass, self.hbar)
        values = np.fft.ifft2(phase * np.fft.fft2(self.values))
        return replace(self, values=values, time=t, _coeffs={})

    def _fourier(self):
        c = self._coeffs.get("c")
        if c is None:
            c = np.fft.fft2(self.values) / (self.grid.nx * self.grid.ny)
            self._coeffs["c"] = c
        return c

    def _interp(self, x, y, gradient=False, chunk=256):
        g = self.grid
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        shape = x.shape
        x = x.ravel()
        y = y.ravel()
        if not np.all(g.contains(x, y)):
            raise DomainError("query point lies outside the wave-field grid")
        c = self._fourier()
        kx, ky = g.kx, g.ky
        out = [np.empty(x.size, complex) for _ in range(3 if gradient else 1)]
        for s in range(0, x.size, chunk):
            ex = np.exp(1j * np.outer(x[s : s + chunk] - g.x_range[0], kx))
            ey = np.exp(1j * np.outer(y[s : s + chunk] - g.y_range[0], ky))
            ec = ex @ c
            out[0][s : s + chunk] = np.sum(ec * ey, axis=1)
            if gradient:
                out[1][s : s + chunk] = np.sum(((ex * (1j * kx)) @ c) * ey, axis=1)
                out[2][s : s + chunk] = np.sum(ec * ey * (1j * ky), axis=1)
        res = [o.reshape(shape) for o in out]
        return tuple(res) if gradient else res[0]

    def value(self, x, y, t=None):
        """Spectral (trigonometric) interpolation of the samples; exact for band-limited psi."""
        f = self if t is None else self.free_evolved(t)
        return f._interp(x, y)

    def value_and_gradient(self, x, y, t=None):
        """Value and spectral gradient; ``t`` may be an array of per-point times."""
        if t is None or np.ndim(t) == 0:
            f = self if t is None else self.free_evolved(float(t))
            return f._interp(x, y, gradient=True)
        x, y, t = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float), np.asarray(t, float))
        out = [np.empty(x.shape, complex) for _ in range(3)]
        for tv in np.unique(t):
            sel = t == tv
            for o, v in zip(out, self.free_evolved(float(tv))._interp(x[sel], y[sel], gradient=True)):
                o[sel] = v
        return tuple(out)

    def peak_bound(self, t=None) -> float:
        return float(np.max(np.abs(self.values)))

    def to_csv(self, path) -> None:
        X, Y = self.grid.mesh()
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("x,y,re,im\n")
            for xv, yv, v in zip(X.ravel(), Y.ravel(), self.values.ravel()):
                fh.write(f"{xv:.17g},{yv:.17g},{v.real:.17g},{v.imag:.17g}\n")

    def to_bytes(self) -> bytes:
        g = self.grid
        header = _HEADER.pack(_MAGIC, g.nx, g.ny, *g.x_range, *g.y_range, self.time)
        return header + np.ascontiguousarray(self.values, dtype="<c16").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes, mass: float = 1.0, hbar: float = 1.0) -> "WaveField":
        magic, nx, ny, x0, x1, y0, y1, t = _HEADER.unpack_from(data)
        if magic != _MAGIC:
            raise DomainError("not a wave-field dump")
        body = np.frombuffer(data, dtype="<c16", offset=_HEADER.size)
        if body.size != nx * ny:
            raise DomainError("truncated wave-field dump")
        return cls(Grid((x0, x1), (y0, y1), nx, ny), body.reshape(nx, ny), t, mass, hbar)

    def to_binary(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def from_binary(cls, path, **kw) -> "WaveField":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read(), **kw)


def evaluate(state, x, y, t):
    """psi(x, y, t) for either representation."""
    return state.value(x, y, t)


def sample(state, grid: Grid = DEFAULT_GRID, t: float = 0.0) -> WaveField:
    X, Y = grid.mesh()
    return WaveField(grid, state.value(X, Y, t), t, state.mass, state.hbar)


def norm(field, grid: Grid | None = None) -> float:
    """Discrete L2 norm sqrt(sum |psi|^2 dx dy).

    On a periodic grid the trapezoid rule reduces to the plain sum.
    """
    if grid is None:
        values, grid = field.values, field.grid
    else:
        values = field
    return math.sqrt(float(np.sum(np.abs(values) ** 2)) * grid.dx * grid.dy)


def _kinetic_phase(grid: Grid, dt, mass, hbar):
    kx, ky = grid.kx, grid.ky
    k2 = kx[:, None] ** 2 + ky[None, :] ** 2
    return np.exp(-0.5j * hbar * k2 * dt / mass)


def resolution_check(field: WaveField, tail: float = 1e-6) -> None:
    """Raise AccuracyError if psi is not resolved by the grid.

    Two failure modes: spectral weight in the outer quarter of each k-axis
    (aliasing), and probability in the outer 1/32 of the box (wrap-around).
    """
    g = field.grid
    total = float(np.sum(np.abs(field.values) ** 2))
    spec = np.abs(np.fft.fft2(field.values)) ** 2
    spec_total = float(np.sum(spec))
    fx = np.abs(np.fft.fftfreq(g.nx)) > 0.375
    fy = np.abs(np.fft.fftfreq(g.ny)) > 0.375
    high = float(np.sum(spec[fx, :]) + np.sum(spec[~fx][:, fy]))
    if high > tail * spec_total:
        raise AccuracyError(f"spectral tail {high / spec_total:.3g} exceeds {tail:g}: grid too coarse (aliasing)")
    bx = max(1, g.nx // 32)
    by = max(1, g.ny // 32)
    edge = np.ones((g.nx, g.ny), bool)
    edge[bx:-bx, by:-by] = False
    edge_mass = float(np.sum(np.abs(field.values[edge]) ** 2))
    if edge_mass > tail * total:
        raise AccuracyError(f"edge probability {edge_mass / total:.3g} exceeds {tail:g}: domain too small")


def evolve_grid(
    field: WaveField,
    dt: float,
    steps: int,
    potential: np.ndarray | Callable | None = None,
    check: bool = True,
) -> WaveField:
    """Advance ``steps * dt`` with Strang-split Fourier steps.

    With no potential the kinetic propagator is applied once and is exact.
    ``potential`` is an (nx, ny) array or a callable V(X, Y); it must be real
    for norm-conserving evolution.
    """
    if steps < 0 or dt < 0:
        raise DomainError("steps and dt must be non-negative")
    if check:
        resolution_check(field)
    if steps == 0:
        return field
    g = field.grid
    if potential is None:
        phase = _kinetic_phase(g, dt * steps, field.mass, field.hbar)
        psi = np.fft.ifft2(phase * np.fft.fft2(field.values))
    else:
        V = potential(*g.mesh()) if callable(potential) else np.asarray(potential)
        half = np.exp(-0.5j * V * dt / field.hbar)
        kin = _kinetic_phase(g, dt, field.mass, field.hbar)
        psi = field.values * half
        for i in range(steps):
            psi = np.fft.ifft2(kin * np.fft.fft2(psi))
            psi = psi * (half if i == steps - 1 else half * half)
    out = replace(field, values=psi, time=field.time + dt * steps, _coeffs={})
    if check:
        resolution_check(out)
    return out


def converged_dt(
    field: WaveField,
    duration: float,
    potential,
    tol: float = 1e-8,
    dt: float | None = None,
    max_halvings: int = 12,
) -> float:
    """Halve dt until two successive runs over ``duration`` agree to ``tol`` (max abs).

    The split-step error is O(dt^2), so agreement between dt and dt/2
    bounds the error of the dt/2 run by about tol/3.
    """
    if dt is None:
        dt = duration / 8
    scale = float(np.max(np.abs(field.values)))
    prev = evolve_grid(field, dt, max(1, round(duration / dt)), potential, check=False)
    for _ in range(max_halvings):
        dt /= 2
        cur = evolve_grid(field, dt, max(1, round(duration / dt)), potential, check=False)
        if np.max(np.abs(cur.values - prev.values)) < tol * scale:
            return dt
        prev = cur
    raise AccuracyError("split-step time step did not converge")


def two_slit_from_centers(
    centers_A: Sequence[tuple[float, float]],
    centers_B: Sequence[tuple[float, float]],
    a: complex,
    momentum=(0.0, 0.0),
    amplitude: complex = 1.0,
    mass: float = 1.0,
    hbar: float = 1.0,
) -> SlitState:
    mk = lambda c: GaussianPacket(tuple(c), a, tuple(momentum), amplitude)  # noqa: E731
    return SlitState(tuple(map(mk, centers_A)), tuple(map(mk, centers_B)), mass, hbar)
