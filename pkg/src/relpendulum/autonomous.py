"""Unforced pendulum (f = 0): energy levels, libration periods, running orbits.

The energy ``E = 1/sqrt(1 - v^2) - a cos x + a`` is conserved.  Levels split
into the stable equilibrium (E = 1), librations (1 < E < 1 + 2a), the
separatrix (E = 1 + 2a) and running solutions (E > 1 + 2a).  These closed
forms and quadratures serve as ground truth for the general solver.
"""

from __future__ import annotations

import enum
import math

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import ConvergenceError, DomainError, NoSolutionError
from .integrate import DEFAULT_CONFIG, IntegratorConfig, flow_to_event
from .model import CylinderState, PendulumParams, TWO_PI


class EnergyClass(str, enum.Enum):
    CENTER = "equilibrium-center"
    LIBRATION = "libration"
    SEPARATRIX = "separatrix"
    RUNNING = "running"


def classify_energy(a: float, E: float) -> EnergyClass:
    if not E >= 1.0:
        raise DomainError(f"energy must be >= 1, got {E}")
    if E == 1.0:
        return EnergyClass.CENTER
    sep = 1.0 + 2.0 * a
    if E < sep:
        return EnergyClass.LIBRATION
    if E == sep:
        return EnergyClass.SEPARATRIX
    return EnergyClass.RUNNING


def _gamma(a, E, x):
    # Lorentz factor on the level set: E - a (1 - cos x)
    return E - 2.0 * a * np.sin(0.5 * x) ** 2


def running_time(a: float, E: float, N: int = 1, rtol: float = 1e-10) -> float:
    """Time for a running solution of energy ``E`` to advance by ``2 N pi``.

    ``T_N(E) = int_0^{2 N pi} dx / sqrt(1 - 1/(E + a cos x - a)^2)``.
    The integrand has period 2 pi and is even about pi, so the half period
    [0, pi] is integrated and scaled by ``2 |N|``.  Near the separatrix the
    integrand peaks at ``x = pi``; keeping the peak at an endpoint suits the
    adaptive quadrature.
    """
    if not E > 1.0 + 2.0 * a:
        raise DomainError(f"E = {E} is not a running level (need E > {1 + 2 * a})")
    if N == 0:
        raise DomainError("N must be nonzero")

    excess = E - 1.0 - 2.0 * a

    def speed_inv(x):
        g = _gamma(a, E, x)
        # g - 1 written without cancellation near x = pi on low running levels
        gm1 = excess + 2.0 * a * math.cos(0.5 * x) ** 2
        return g / math.sqrt(gm1 * (g + 1.0))

    val, err = quad(speed_inv, 0.0, math.pi, epsabs=0.0, epsrel=min(rtol, 1e-12), limit=200)
    if err > rtol * abs(val):
        raise ConvergenceError(f"quadrature error {err:.2e} above tolerance")
    return 2.0 * abs(N) * val


def free_running_time(E: float, N: int = 1) -> float:
    """Closed form of :func:`running_time` for ``a = 0``."""
    return TWO_PI * abs(N) / math.sqrt(1.0 - 1.0 / E**2)


def solve_running_energy(a: float, T: float, N: int = 1) -> float:
    """The unique running energy whose orbit advances ``2 N pi`` in time ``T``."""
    if N == 0:
        raise DomainError("N must be nonzero")
    if not T > TWO_PI * abs(N):
        raise NoSolutionError(f"T = {T} <= 2 |N| pi: no solution with winding {N}")
    sep = 1.0 + 2.0 * a

    def excess(E):
        return running_time(a, E, N) - T

    lo, hi = sep + 1e-6, sep + 1.0
    while excess(lo) <= 0:
        lo = sep + (lo - sep) / 16.0
        if lo - sep < 1e-300:
            raise ConvergenceError("could not bracket the running energy from below")
    while excess(hi) >= 0:
        hi = lo + 2.0 * (hi - lo)
    E = brentq(excess, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    if abs(excess(E)) > 1e-9 * T:
        raise ConvergenceError(f"running energy residual {excess(E):.3e}")
    return E


def running_initial_state(a: float, E: float, N: int = 1) -> CylinderState:
    """State at ``x = 0`` on the running level ``E``, moving in the sign of ``N``."""
    if not E > 1.0 + 2.0 * a:
        raise DomainError(f"E = {E} is not a running level")
    # at x = 0 the Lorentz factor equals E, so |p| = sqrt(E^2 - 1)
    return CylinderState(0.0, math.copysign(math.sqrt((E - 1.0) * (E + 1.0)), N))


def turning_angle(a: float, E: float) -> float:
    """Positive angle where a libration of energy ``E`` momentarily stops."""
    return 2.0 * math.asin(math.sqrt((E - 1.0) / (2.0 * a)))


def libration_period(a: float, E: float, cfg: IntegratorConfig = DEFAULT_CONFIG,
                     side: int = 1, t_tol: float = 1e-10) -> float:
    """Minimal period of the libration with energy ``E``.

    The orbit starts at rest at the turning angle on the given ``side``
    (+1 or -1); the half period is the next time the momentum vanishes.
    """
    if not 1.0 < E < 1.0 + 2.0 * a:
        raise DomainError(f"E = {E} is not a libration level for a = {a}")
    params = PendulumParams(a, TWO_PI)
    x0 = math.copysign(turning_angle(a, E), side)
    # far longer than any reachable half period at double precision
    t_max = 1e3 * TWO_PI / math.sqrt(a)
    hit = flow_to_event(params, (x0, 0.0), 0.0, t_max, "p", 0.0, cfg, t_tol)
    if hit is None:
        raise ConvergenceError(f"no turning point found within t = {t_max}")
    return 2.0 * hit[0]


def libration_energies(a: float, n_levels: int) -> np.ndarray:
    """``n_levels`` energies in (1, 1 + 2a) with geometrically spaced ``E - 1``."""
    return 1.0 + 2.0 * a * np.geomspace(1e-4, 1.0 - 1e-4, n_levels)


def min_libration_period_scan(a: float, n_levels: int = 50,
                              cfg: IntegratorConfig = DEFAULT_CONFIG) -> float:
    return min(libration_period(a, E, cfg) for E in libration_energies(a, n_levels))
