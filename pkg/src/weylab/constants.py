"""Coupling constants and flux thresholds in CGS-Gaussian units.

The scale coupling of a particle is its imaginary gauge charge
``e_I = m * sqrt(G)``. Along a path C the wavefunction amplitude picks up the
real factor ``exp(-(e_I / hbar c) * integral_C A.dx)``, the scale analogue of
the Aharonov-Bohm phase ``exp(i (e / hbar c) * integral_C A.dx)``.

Two constant sets are provided: ``CGS`` (CODATA 2018) and ``NATURAL``, the
simulation units with ``hbar = c = G = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

# SI-exact definitions (2019 redefinition) carried into CGS.
_H_CGS = 6.62607015e-27  # erg s
_C_CGS = 2.99792458e10  # cm / s
_E_CGS = 1.602176634e-19 * 2.99792458e9  # esu
_G_CGS = 6.67430e-8  # cm^3 g^-1 s^-2
_ME_CGS = 9.1093837015e-28  # g


@dataclass(frozen=True)
class PhysicalConstants:
    c: float
    hbar: float
    h: float
    G: float
    e: float
    m_e: float
    name: str = "custom"

    def __post_init__(self):
        for field in ("c", "hbar", "h", "G", "e", "m_e"):
            value = getattr(self, field)
            if not (value > 0 and math.isfinite(value)):
                raise DomainError(f"constant {field} must be positive and finite, got {value!r}")
        if abs(self.h - 2 * math.pi * self.hbar) > 1e-12 * self.h:
            raise DomainError("h and hbar are inconsistent (h != 2 pi hbar)")

    @classmethod
    def cgs(cls) -> "PhysicalConstants":
        return cls(
            c=_C_CGS,
            hbar=_H_CGS / (2 * math.pi),
            h=_H_CGS,
            G=_G_CGS,
            e=_E_CGS,
            m_e=_ME_CGS,
            name="cgs",
        )

    @classmethod
    def natural(cls) -> "PhysicalConstants":
        """Simulation units: hbar = c = G = 1; e and m_e set to 1 as placeholders."""
        return cls(c=1.0, hbar=1.0, h=2 * math.pi, G=1.0, e=1.0, m_e=1.0, name="natural")

    @property
    def hbar_c(self) -> float:
        return self.hbar * self.c


CGS = PhysicalConstants.cgs()
NATURAL = PhysicalConstants.natural()


def units(name: str) -> PhysicalConstants:
    """Look up a constant set by its CLI name (``cgs`` or ``natural``)."""
    try:
        return {"cgs": CGS, "natural": NATURAL}[name]
    except KeyError:
        raise DomainError(f"unknown unit system {name!r}") from None


@dataclass(frozen=True)
class Particle:
    """A quantum particle: mass (g), real charge (esu) and the unit system.

    ``e_imag`` is always recomputed from the mass.
    """

    mass: float
    charge: float = 0.0
    consts: PhysicalConstants = CGS

    def __post_init__(self):
        if not (self.mass >= 0 and math.isfinite(self.mass)):
            raise DomainError(f"mass must be non-negative, got {self.mass!r}")
        if not math.isfinite(self.charge):
            raise DomainError("charge must be finite")

    @property
    def e_imag(self) -> float:
        return imaginary_coupling(self.mass, self.consts)

    @property
    def e_complex(self) -> complex:
        return complex(self.charge, self.e_imag)

    def phase_exponent(self, line_integral):
        """``(e / hbar c) * line_integral``: the AB phase for this path."""
        return self.charge * line_integral / self.consts.hbar_c

    def scale_exponent(self, line_integral):
        """``(e_I / hbar c) * line_integral``; the scale factor is ``exp(-this)``."""
        return self.e_imag * line_integral / self.consts.hbar_c


def alpha(consts: PhysicalConstants = CGS) -> float:
    """Electromagnetic fine-structure constant e^2 / (hbar c)."""
    return consts.e**2 / consts.hbar_c


def alpha_g(consts: PhysicalConstants = CGS) -> float:
    """Gravitational fine-structure constant G m_e^2 / (hbar c)."""
    return consts.G * consts.m_e**2 / consts.hbar_c


def gravitational_radius(consts: PhysicalConstants = CGS) -> float:
    """Length scale e sqrt(G) / c^2 of the electron charge."""
    return consts.e * math.sqrt(consts.G) / consts.c**2


def alpha_s(consts: PhysicalConstants = CGS) -> float:
    """Scale fine-structure constant: gravitational radius over reduced Compton length.

    Equal to ``e m_e sqrt(G) / (c hbar)``; ``sqrt(alpha * alpha_g)`` is the same number.
    """
    return consts.e * consts.m_e * math.sqrt(consts.G) / (consts.c * consts.hbar)


def imaginary_coupling(mass: float, consts: PhysicalConstants = CGS) -> float:
    if not (mass >= 0):
        raise DomainError(f"mass must be non-negative, got {mass!r}")
    return mass * math.sqrt(consts.G)


def flux_for_scale(mass: float, scale: float, consts: PhysicalConstants = CGS) -> float:
    """Loop flux whose scale factor along a path is ``1 / scale``.

    Returns ``hbar c ln(scale) / (m sqrt G)``. The magnitude is the threshold
    flux for the requested amplitude change; the sign is negative for
    ``scale < 1`` so that ``scale_factor`` round-trips for either side of 1.
    """
    if not (mass > 0):
        raise DomainError("flux_for_scale needs a positive mass (zero mass means infinite flux)")
    if not (scale > 0 and math.isfinite(scale)):
        raise DomainError(f"scale must be positive and finite, got {scale!r}")
    return consts.hbar_c * math.log(scale) / imaginary_coupling(mass, consts)


def scale_factor(particle: Particle, line_integral):
    """``exp(-(e_I / hbar c) * line_integral)``; positive line integrals suppress."""
    return np.exp(-particle.scale_exponent(line_integral))


def flux_quantum(consts: PhysicalConstants = CGS) -> float:
    """Flux h c / e giving a 2 pi AB phase for charge e."""
    return consts.h * consts.c / consts.e


def constants_table(consts: PhysicalConstants = CGS, mass: float | None = None):
    """Rows ``(name, value, unit)`` for the CLI ``constants`` subcommand."""
    natural = consts.name == "natural"
    u = (lambda cgs_unit: "1" if natural else cgs_unit)
    m = consts.m_e if mass is None else mass
    rows = [
        ("c", consts.c, u("cm/s")),
        ("hbar", consts.hbar, u("erg*s")),
        ("h", consts.h, u("erg*s")),
        ("G", consts.G, u("cm^3/(g*s^2)")),
        ("e", consts.e, u("esu")),
        ("m_e", consts.m_e, u("g")),
        ("alpha", alpha(consts), "1"),
        ("alpha_G", alpha_g(consts), "1"),
        ("alpha_S", alpha_s(consts), "1"),
        ("alpha_S/alpha", alpha_s(consts) / alpha(consts), "1"),
        ("r_g", gravitational_radius(consts), u("cm")),
        ("mass", m, u("g")),
        ("e_I", imaginary_coupling(m, consts), u("esu")),
        ("e_I/e", imaginary_coupling(m, consts) / consts.e, "1"),
        ("flux_quantum", flux_quantum(consts), u("G*cm^2")),
        ("flux_10pct_scale", flux_for_scale(m, 1.1, consts), u("G*cm^2")),
        ("mass_times_flux_10pct", m * flux_for_scale(m, 1.1, consts), u("g*esu")),
    ]
    return rows
