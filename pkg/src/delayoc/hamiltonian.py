"""Legendre transform of the consumption utility and its maximizer.

H(zeta0) = sup_{c >= 0} (U1(c) - zeta0 * c).  Under the standing utility
assumptions the supremum is attained at the unique root of U1'(c) = zeta0,
which a bracketed root solve locates to machine precision.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import NoConvergence, NonPositiveSlope
from .model import UtilitySpec


@dataclass(frozen=True)
class HamiltonianValue:
    h: float
    c_star: float
    converged: bool
    residual: float


def _scalar(fn, x: float) -> float:
    return float(fn(np.asarray(x, dtype=float)))


def legendre(u1: UtilitySpec, zeta0: float) -> HamiltonianValue:
    """Value and maximizer of c -> U1(c) - zeta0*c over c >= 0."""
    if not zeta0 > 0:
        raise NonPositiveSlope(f"Legendre transform needs zeta0 > 0, got {zeta0}")

    u0 = _scalar(u1.u, 0.0)

    # U1' decreases strictly from +inf to 0, so a bracket always exists.
    lo, hi = 1e-12, 1.0
    expansions = 0
    while _scalar(u1.u_prime, lo) < zeta0:
        lo /= 16.0
        expansions += 1
        if expansions > 80 or lo < 1e-280:
            # slope above U1' everywhere we can resolve: boundary optimum
            return HamiltonianValue(h=u0, c_star=0.0, converged=True, residual=0.0)
    while _scalar(u1.u_prime, hi) > zeta0:
        hi *= 16.0
        expansions += 1
        if expansions > 160:
            raise NoConvergence("could not bracket the first-order condition")

    c_star = brentq(lambda c: _scalar(u1.u_prime, c) - zeta0, lo, hi,
                    xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=200)
    h = _scalar(u1.u, c_star) - zeta0 * c_star
    if h < u0:  # roundoff pushed past the boundary optimum
        return HamiltonianValue(h=u0, c_star=0.0, converged=True, residual=0.0)
    residual = abs(_scalar(u1.u_prime, c_star) - zeta0)
    converged = residual <= 1e-12 * (1.0 + zeta0)
    return HamiltonianValue(h=h, c_star=float(c_star), converged=converged,
                            residual=float(residual))


def hamiltonian_grid(u1: UtilitySpec, zetas) -> tuple[np.ndarray, np.ndarray]:
    """H and its maximizer over an array of slopes (for property scans)."""
    zetas = np.asarray(zetas, dtype=float)
    hs = np.empty_like(zetas)
    cs = np.empty_like(zetas)
    for i, z in enumerate(zetas):
        res = legendre(u1, float(z))
        hs[i], cs[i] = res.h, res.c_star
    return hs, cs
