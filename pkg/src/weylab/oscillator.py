"""Harmonic oscillator with complex frequency.

A charge with complex coupling ``e_C = e + i e_I`` in the potential
``phi = (lx^2 x^2 + ly^2 y^2 + lz^2 z^2) / 2`` oscillates with
``omega_j = sqrt(e_C lambda_j^2 / m)``. The usual ladder solution carries
over verbatim with complex omega: ``E_n = hbar sum_j omega_j (n_j + 1/2)``
and eigenfunctions are Gaussians times Hermite polynomials of the complex
argument ``sqrt(m omega / hbar) x``. All square roots are principal branch.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import DomainError


def complex_frequency(lambda_j: float, e_complex: complex, mass: float) -> complex:
    if not lambda_j > 0:
        raise DomainError(f"coupling lambda must be positive, got {lambda_j!r}")
    if not complex(e_complex).real > 0:
        raise DomainError("Re(e_C) must be positive for a confining potential")
    if not mass > 0:
        raise DomainError("mass must be positive")
    return cmath.sqrt(complex(e_complex) * lambda_j**2 / mass)


def frequencies(lambdas: Sequence[float], e_complex: complex, mass: float) -> tuple[complex, ...]:
    return tuple(complex_frequency(lam, e_complex, mass) for lam in lambdas)


def eigenvalue(n: Sequence[int], omega: Sequence[complex], hbar: float = 1.0) -> complex:
    if len(n) != len(omega):
        raise DomainError("quantum numbers and frequencies differ in length")
    if any(int(k) != k or k < 0 for k in n):
        raise DomainError(f"quantum numbers must be non-negative integers, got {tuple(n)}")
    return hbar * sum(complex(w) * (k + 0.5) for k, w in zip(n, omega))


@dataclass(frozen=True)
class ComplexLevel:
    omega: tuple[complex, complex, complex]
    n: tuple[int, int, int]
    hbar: float = 1.0

    def __post_init__(self):
        if any(complex(w).real <= 0 for w in self.omega):
            raise DomainError("every frequency needs a positive real part")
        eigenvalue(self.n, self.omega, self.hbar)  # validates n

    @property
    def energy(self) -> complex:
        return eigenvalue(self.n, self.omega, self.hbar)

    @property
    def energy_real(self) -> float:
        return self.energy.real

    @property
    def energy_imag(self) -> float:
        return self.energy.imag


def hermite(n: int, z):
    """Physicists' Hermite polynomial H_n(z) for complex z by upward recurrence.

    ``H_{k+1} = 2 z H_k - 2 k H_{k-1}``. Values grow like (2|z|)^n, so
    double precision overflows once n log10(2|z|) passes roughly 300.
    """
    if n < 0 or int(n) != n:
        raise DomainError("Hermite degree must be a non-negative integer")
    z = np.asarray(z, dtype=complex)
    h_prev = np.ones_like(z)
    if n == 0:
        return h_prev
    h = 2 * z
    for k in range(1, n):
        h_prev, h = h, 2 * z * h - 2 * k * h_prev
    return h


def series_coefficients(n: int, K=None, terms: int | None = None) -> list:
    """Power-series solution of h'' - 2 y h' + (K - 1) h = 0.

    Coefficients a_0 .. a_{terms-1} from ``a_{k+2} = (2k + 1 - K) a_k / ((k+1)(k+2))``,
    starting from the parity of n (a_0 = 1 for even n, a_1 = 1 for odd n).
    K defaults to 2n + 1, where the series stops after degree n. Integer or
    Fraction K keeps the arithmetic exact.
    """
    K = 2 * n + 1 if K is None else K
    terms = n + 4 if terms is None else terms
    one = Fraction(1) if isinstance(K, (int, Fraction)) else 1.0
    a = [one * 0] * terms
    a[n % 2] = one
    for k in range(n % 2, terms - 2, 2):
        a[k + 2] = (2 * k + 1 - K) * a[k] / ((k + 1) * (k + 2))
    return a


def normalization(n: int, omega: complex, mass: float = 1.0, hbar: float = 1.0) -> complex:
    """Analytic continuation of (m omega / pi hbar)^(1/4) / sqrt(2^n n!)."""
    return (mass * complex(omega) / (math.pi * hbar)) ** 0.25 / math.sqrt(2.0**n * math.factorial(n))


def _check_branch(omega):
    if not complex(omega).real > 0:
        raise DomainError(f"eigenfunctions need Re(omega) > 0 (away from the branch cut), got {omega!r}")


def eigenfunction_1d(n: int, omega: complex, x, mass: float = 1.0, hbar: float = 1.0):
    _check_branch(omega)
    alpha = mass * complex(omega) / hbar
    x = np.asarray(x, float)
    return normalization(n, omega, mass, hbar) * np.exp(-0.5 * alpha * x * x) * hermite(n, np.sqrt(alpha) * x)


def eigenfunction_1d_derivative(n: int, omega: complex, x, mass: float = 1.0, hbar: float = 1.0):
    """d/dx of ``eigenfunction_1d`` using H_n' = 2 n H_{n-1}."""
    _check_branch(omega)
    alpha = mass * complex(omega) / hbar
    x = np.asarray(x, float)
    s = np.sqrt(alpha)
    poly = -alpha * x * hermite(n, s * x)
    if n > 0:
        poly = poly + s * 2 * n * hermite(n - 1, s * x)
    return normalization(n, omega, mass, hbar) * np.exp(-0.5 * alpha * x * x) * poly


def eigenfunction(n: Sequence[int], omega: Sequence[complex], x: Sequence, mass: float = 1.0, hbar: float = 1.0):
    """Product state phi_n(x) = prod_j phi_{n_j}(x_j); ``x`` is a sequence of coordinate arrays."""
    if not (len(n) == len(omega) == len(x)):
        raise DomainError("n, omega and x must have one entry per axis")
    out = 1.0
    for nj, wj, xj in zip(n, omega, x):
        out = out * eigenfunction_1d(nj, wj, xj, mass, hbar)
    return out


def hamiltonian_residual(
    n: Sequence[int],
    omega: Sequence[complex],
    points: Sequence,
    mass: float = 1.0,
    hbar: float = 1.0,
    h: float = 1e-2,
) -> float:
    """Relative residual ||(H - E) phi|| / ||phi|| over the given points.

    The Laplacian is a sixth-order central finite-difference stencil applied
    to the closed-form eigenfunction, so the check does not reuse the
    Hermite recurrence's own derivative identities.
    """
    w6 = np.array([1 / 90, -3 / 20, 3 / 2, -49 / 18, 3 / 2, -3 / 20, 1 / 90])
    offs = np.arange(-3, 4)
    pts = [np.asarray(p, float) for p in points]
    phi = eigenfunction(n, omega, pts, mass, hbar)
    lap = 0
    for j in range(len(pts)):
        acc = 0
        for w, o in zip(w6, offs):
            shifted = [p + o * h if i == j else p for i, p in enumerate(pts)]
            acc = acc + w * eigenfunction(n, omega, shifted, mass, hbar)
        lap = lap + acc / h**2
    pot = 0.5 * mass * sum(complex(w) ** 2 * p**2 for w, p in zip(omega, pts))
    E = eigenvalue(n, omega, hbar)
    res = -(hbar**2) / (2 * mass) * lap + pot * phi - E * phi
    return float(np.sqrt(np.sum(np.abs(res) ** 2) / np.sum(np.abs(phi) ** 2)))
