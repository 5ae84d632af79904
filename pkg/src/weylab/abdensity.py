"""Aharonov-Bohm double-slit densities with path-dependent amplitude scale.

Switching the solenoid on multiplies each branch by its path factor
``exp(i (e/hbar c) I) exp(-(e_I/hbar c) I)``, with I the line integral of A
along a path through that slit. With loop flux ``Phi_L = I_B - I_A`` write

    theta = (e   / hbar c) Phi_L     (AB phase)
    sigma = (e_I / hbar c) Phi_L     (scale exponent)

The equilibrium density at a point depends on which slit the trajectory
through it crossed:

    A:  |psi_A + psi_B e^{i theta} e^{-sigma}|^2 / 2
    B:  |psi_A e^{-i theta} e^{+sigma} + psi_B|^2 / 2

The orthodox density drops the scale factor; the averaged density mixes the
two branch expressions with fixed weights p_A, 1 - p_A.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import bohmian
from .constants import Particle
from .errors import DomainError, UndecidedError
from .wavepacket import SQRT2, SlitState


def _zero_gauge(x, y, t):
    return np.zeros(np.broadcast(x, y, t).shape)


@dataclass(frozen=True)
class FluxConfig:
    """Loop flux and the gauge used for per-path line integrals.

    ``I_A = gauge(x, y, t)`` and ``I_B = I_A + loop_flux``; the default gauge is 0.
    """

    loop_flux: float
    gauge: Callable = field(default=_zero_gauge, compare=False)

    def __post_init__(self):
        if not math.isfinite(self.loop_flux):
            raise DomainError("loop flux must be finite")

    def I_A(self, x, y, t):
        return self.gauge(x, y, t)

    def I_B(self, x, y, t):
        return self.gauge(x, y, t) + self.loop_flux

    def line_integral(self, label: str, x, y, t):
        if label == "A":
            return self.I_A(x, y, t)
        if label == "B":
            return self.I_B(x, y, t)
        raise DomainError(f"unknown slit label {label!r}")

    def exponents(self, particle: Particle) -> tuple[float, float]:
        """(theta, sigma) for this loop flux."""
        return particle.phase_exponent(self.loop_flux), particle.scale_exponent(self.loop_flux)

    def guiding_state(self, state: SlitState, particle: Particle) -> SlitState:
        """The wave that steers trajectories once the solenoid is on.

        Both factorisations of the recombined wave are the branch sum
        ``psi_A + psi_B e^{i theta - sigma}`` times a common factor. The
        common phase cancels against the vector potential in the guidance
        law and the common real factor drops out of Im(grad psi / psi).
        """
        theta, sigma = self.exponents(particle)
        return state.scaled(1.0, np.exp(1j * theta - sigma))

    def with_gauge(self, gauge: Callable) -> "FluxConfig":
        return FluxConfig(self.loop_flux, gauge)


@dataclass(frozen=True)
class DressedState:
    """Branches with their path factors attached, for a given gauge."""

    state: SlitState
    particle: Particle
    flux: FluxConfig

    def _factor(self, I):
        p = self.particle
        return np.exp(1j * p.phase_exponent(I)) * np.exp(-p.scale_exponent(I))

    def branches(self, x, y, t):
        a, b = self.state.branches(x, y, t)
        return a * self._factor(self.flux.I_A(x, y, t)), b * self._factor(self.flux.I_B(x, y, t))

    def value(self, x, y, t):
        a, b = self.branches(x, y, t)
        return (a + b) / SQRT2

    def factorized(self, x, y, t):
        """The recombined wave written both ways: pulled out along path A, and along path B."""
        theta, sigma = self.flux.exponents(self.particle)
        a, b = self.state.branches(x, y, t)
        via_a = (a + b * np.exp(1j * theta) * np.exp(-sigma)) / SQRT2 * self._factor(self.flux.I_A(x, y, t))
        via_b = (a * np.exp(-1j * theta) * np.exp(sigma) + b) / SQRT2 * self._factor(self.flux.I_B(x, y, t))
        return via_a, via_b


def dress(state: SlitState, particle: Particle, flux: FluxConfig) -> DressedState:
    return DressedState(state, particle, flux)


def branch_densities(x, y, t, state: SlitState, particle: Particle, flux: FluxConfig):
    """(density if the trajectory came via A, density if via B)."""
    theta, sigma = flux.exponents(particle)
    a, b = state.branches(x, y, t)
    via_a = np.abs(a + b * np.exp(1j * theta) * np.exp(-sigma)) ** 2 / 2
    via_b = np.abs(a * np.exp(-1j * theta) * np.exp(sigma) + b) ** 2 / 2
    return via_a, via_b


def density_orthodox(x, y, t, state: SlitState, particle: Particle, flux: FluxConfig | None = None):
    """|psi_A + psi_B e^{i theta}|^2 / 2: the charge-only AB density."""
    theta = 0.0 if flux is None else particle.phase_exponent(flux.loop_flux)
    a, b = state.branches(x, y, t)
    return np.abs(a + b * np.exp(1j * theta)) ** 2 / 2


def density_averaged(x, y, t, state, particle, flux, p_A: float):
    if not 0 <= p_A <= 1:
        raise DomainError(f"p_A must lie in [0, 1], got {p_A!r}")
    via_a, via_b = branch_densities(x, y, t, state, particle, flux)
    return p_A * via_a + (1 - p_A) * via_b


def labels(x, y, t, state, particle, flux, tol: float = 1e-6) -> np.ndarray:
    """Which-way labels under the guiding wave for this flux (vectorised)."""
    g = flux.guiding_state(state, particle)
    x, y = np.broadcast_arrays(np.atleast_1d(np.asarray(x, float)), np.atleast_1d(np.asarray(y, float)))
    return bohmian.which_way_many(x, y, t, g, tol)


def density_pilot(x, y, t, state, particle, flux, which=None, tol: float = 1e-6):
    """Trajectory-dependent equilibrium density.

    ``which`` may carry precomputed labels; otherwise each point is traced
    back to the slit plane. Raises UndecidedError for points whose label
    cannot be decided (on the separatrix within the integration budget).
    """
    scalar = np.ndim(x) == 0 and np.ndim(y) == 0
    if which is None:
        which = labels(x, y, t, state, particle, flux, tol)
    which = np.asarray(which, dtype=object)
    if np.any(which == bohmian.UNDECIDED):
        raise UndecidedError("density requested on the separatrix")
    via_a, via_b = branch_densities(x, y, t, state, particle, flux)
    rho = np.where(which == "A", via_a, via_b).astype(float)
    return float(rho.ravel()[0]) if scalar else rho


def empty_packet_factor(which, particle, flux) -> np.ndarray:
    """Magnitude multiplying the branch the particle did not take: e^{-sigma} (A) or e^{+sigma} (B)."""
    sigma = particle.scale_exponent(flux.loop_flux)
    which = np.asarray(which, dtype=object)
    out = np.full(which.shape, np.nan)
    out[which == "A"] = math.exp(-sigma)
    out[which == "B"] = math.exp(sigma)
    return out


@dataclass(frozen=True, eq=False)
class ScreenProfile:
    t: float
    y: float
    x: np.ndarray
    density_orthodox: np.ndarray
    density_pilot: np.ndarray
    density_averaged: np.ndarray
    which_way: np.ndarray
    empty_factor: np.ndarray
    separatrix: float | None
    ambiguous: np.ndarray

    def integrals(self) -> dict:
        """Trapezoid integrals of each curve over the sampled screen segment."""
        ok = ~self.ambiguous
        xs = self.x[ok]
        return {
            "orthodox": float(np.trapezoid(self.density_orthodox[ok], xs)),
            "pilot": float(np.trapezoid(self.density_pilot[ok], xs)),
            "averaged": float(np.trapezoid(self.density_averaged[ok], xs)),
        }


def screen_profile(
    t: float,
    y: float,
    x_samples,
    state: SlitState,
    particle: Particle,
    flux: FluxConfig,
    p_A: float = 0.5,
    sep_tol: float = 1e-6,
    tol: float = 1e-6,
) -> ScreenProfile:
    """Orthodox, pilot-wave and averaged densities along the screen line.

    Points within ``sep_tol`` of the located separatrix are flagged
    ambiguous and get NaN for the pilot density.
    """
    xs = np.asarray(x_samples, float)
    ys = np.full(xs.shape, float(y))
    which = labels(xs, ys, t, state, particle, flux, tol)
    sep = None
    flips = np.flatnonzero((which[:-1] != which[1:]) & (which[:-1] != bohmian.UNDECIDED) & (which[1:] != bohmian.UNDECIDED))
    if flips.size:
        k = flips[0]
        sep = bohmian.separatrix(t, y, xs[k], xs[k + 1], sep_tol, state, flux, particle)
    ambiguous = which == bohmian.UNDECIDED
    if sep is not None:
        ambiguous |= np.abs(xs - sep) < sep_tol
    via_a, via_b = branch_densities(xs, ys, t, state, particle, flux)
    pilot = np.where(which == "A", via_a, via_b).astype(float)
    pilot[ambiguous] = np.nan
    return ScreenProfile(
        t=t,
        y=y,
        x=xs,
        density_orthodox=density_orthodox(xs, ys, t, state, particle, flux),
        density_pilot=pilot,
        density_averaged=p_A * via_a + (1 - p_A) * via_b,
        which_way=which,
        empty_factor=empty_packet_factor(which, particle, flux),
        separatrix=sep,
        ambiguous=ambiguous,
    )
