"""Pilot-wave simulations of a non-integrable amplitude scale.

Two effects of an imaginary coupling ``e_I = m sqrt(G)`` are modelled: the
trajectory-dependent Aharonov-Bohm double-slit density, and the Lorentzian
absorption lines of an oscillator whose frequencies become complex.
"""

from .constants import CGS, NATURAL, Particle, PhysicalConstants
from .errors import AccuracyError, DomainError, NodeError, NoBracketError, UndecidedError, WeylabError

__all__ = [
    "CGS",
    "NATURAL",
    "Particle",
    "PhysicalConstants",
    "AccuracyError",
    "DomainError",
    "NodeError",
    "NoBracketError",
    "UndecidedError",
    "WeylabError",
]
__version__ = "0.1.0"
