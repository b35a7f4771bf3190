"""Fixed points of the Poincare map: periodic solutions with winding number N.

In co-moving coordinates a T-periodic solution with winding number N of the
lab equation is a plain fixed point of the time-T map ``S``.  When ``S`` is a
twist map, each angle ``theta`` has exactly one momentum ``phi(theta)`` with
``Q(theta, phi) = theta``.  Fixed points are the zeros of the scalar
function ``Phi(theta) = P(theta, phi(theta)) - phi(theta)``, which is found by
scanning a grid and refining each sign change.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .errors import (
    BoundaryTwistError,
    CircleTooSmallError,
    ConvergenceError,
    InconsistencyError,
    TwistViolation,
)
from .integrate import DEFAULT_CONFIG, IntegratorConfig, sample_trajectory
from .model import PendulumParams, TWO_PI, require_admissible
from .poincare import StripBound, angle_grid, poincare_map, poincare_tangent, strip_bound

log = logging.getLogger(__name__)

ELLIPTIC = "elliptic"
HYPERBOLIC = "hyperbolic"
PARABOLIC = "parabolic"


@dataclass(frozen=True)
class SolverConfig:
    grid: int = 720
    tol: float = 1e-10
    degeneracy_tol: float = 1e-8
    delta: float = 1e-3
    index_samples: int = 256
    margin: float = 1.0
    dedup_tol: float = 1e-6
    fallback_grid: int = 32
    # tolerance factor for the final Newton polish, so that found points are
    # fixed points of the exact map and not only of the default discretization
    polish_refinement: float = 0.01

    @classmethod
    def from_dict(cls, data: dict) -> SolverConfig:
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown solver keys: {sorted(unknown)}")
        return cls(**data)


DEFAULT_SOLVER = SolverConfig()


@dataclass(frozen=True)
class PeriodicOrbit:
    q0: float
    p0: float
    residual: float
    index: Optional[int]
    trace: float
    linear_class: str
    winding: int
    unstable: bool

    def to_json_dict(self) -> dict:
        return {
            "q0": self.q0,
            "p0": self.p0,
            "residual": self.residual,
            "index": self.index,
            "trace": self.trace,
            "class": self.linear_class,
            "winding": self.winding,
            "unstable": self.unstable,
        }


@dataclass(frozen=True)
class ReducedCurve:
    theta: np.ndarray
    phi: np.ndarray
    Phi: np.ndarray

    @property
    def max_abs_Phi(self) -> float:
        return float(np.abs(self.Phi).max())


@dataclass(frozen=True)
class DegenerateContinuum:
    """Fixed points filling the graph ``p = phi(q)`` over a whole period."""

    curve: ReducedCurve

    def to_json_dict(self) -> dict:
        return {
            "degenerate": True,
            "curve": [[float(t), float(r)] for t, r in zip(self.curve.theta, self.curve.phi)],
        }


@dataclass(frozen=True)
class FixedPointSearch:
    """Outcome of :func:`find_fixed_points`.

    Exactly one of ``orbits`` (non-empty) and ``continuum`` describes the
    fixed-point set.  ``no_twist_fallback`` marks results obtained by
    multi-start Newton after the twist reduction failed; those carry no
    completeness guarantee.
    """

    orbits: tuple = ()
    continuum: Optional[DegenerateContinuum] = None
    max_abs_Phi: float = math.nan
    no_twist_fallback: bool = False
    curve: Optional[ReducedCurve] = field(default=None, repr=False)

    @property
    def degenerate(self) -> bool:
        return self.continuum is not None

    def jsonl(self) -> str:
        if self.continuum is not None:
            return json.dumps(self.continuum.to_json_dict()) + "\n"
        return "".join(json.dumps(o.to_json_dict()) + "\n" for o in self.orbits)


def _solve_phi(params, theta, bound, cfg, r_guess=None, tol=1e-12, max_iter=200):
    """Return ``(r, P)`` with ``Q(theta, r) = theta`` and ``P = P(theta, r)``."""
    lo, hi = -bound.p_tilde, bound.p_tilde
    g_lo = poincare_map(params, (theta, lo), cfg).q - theta
    g_hi = poincare_map(params, (theta, hi), cfg).q - theta
    if not (g_lo < 0 < g_hi):
        raise BoundaryTwistError("Q(theta, r) - theta has the same sign at both strip edges",
                                 theta)
    r = 0.5 * (lo + hi) if r_guess is None or not lo < r_guess < hi else float(r_guess)
    for _ in range(max_iter):
        res = poincare_tangent(params, (theta, r), cfg)
        g = res.state.q - theta
        d = res.monodromy[0, 1]
        if d <= 0:
            raise TwistViolation(f"dQ/dp0 = {d:.3e} <= 0 at (theta, r) = ({theta}, {r})")
        if g == 0:
            return r, res.state.p
        if g > 0:
            hi = r
        else:
            lo = r
        r_new = r - g / d
        if not lo < r_new < hi:
            r_new = 0.5 * (lo + hi)
        if abs(r_new - r) < tol or hi - lo < tol:
            # a tiny step in r can still be a sizable error in Q where dQ/dp0
            # is large, so land on the final Newton iterate
            return r_new, poincare_map(params, (theta, r_new), cfg).p
        r = r_new
    raise ConvergenceError(f"reduced point at theta={theta} did not converge")


def reduced_point(params: PendulumParams, theta: float, bound: Optional[StripBound] = None,
                  cfg: IntegratorConfig = DEFAULT_CONFIG, r_guess: Optional[float] = None) -> float:
    """The unique momentum ``phi(theta)`` in the strip with ``Q(theta, phi) = theta``.

    Raises :class:`BoundaryTwistError` if the strip edges are not displaced
    in opposite directions and :class:`TwistViolation` if ``dQ/dp0 <= 0`` at
    any iterate.
    """
    require_admissible(params)
    bound = strip_bound(params) if bound is None else bound
    return _solve_phi(params, theta, bound, cfg, r_guess)[0]


def reduced_Phi(params, theta, bound=None, cfg=DEFAULT_CONFIG, r_guess=None) -> float:
    bound = strip_bound(params) if bound is None else bound
    r, P = _solve_phi(params, theta, bound, cfg, r_guess)
    return P - r


def reduced_slope(params: PendulumParams, theta: float, bound=None,
                  cfg: IntegratorConfig = DEFAULT_CONFIG, h: float = 1e-4) -> float:
    """Central finite difference of ``Phi`` at ``theta``."""
    bound = strip_bound(params) if bound is None else bound
    return (reduced_Phi(params, theta + h, bound, cfg) - reduced_Phi(params, theta - h, bound, cfg)) / (2 * h)


def build_reduced_curve(params: PendulumParams, M: int = 720, bound: Optional[StripBound] = None,
                        cfg: IntegratorConfig = DEFAULT_CONFIG) -> ReducedCurve:
    require_admissible(params)
    bound = strip_bound(params) if bound is None else bound
    theta = angle_grid(M)
    phi = np.empty(M)
    Phi = np.empty(M)
    guess = None
    for i, th in enumerate(theta):
        r, P = _solve_phi(params, th, bound, cfg, guess)
        phi[i] = r
        Phi[i] = P - r
        guess = r
    return ReducedCurve(theta, phi, Phi)


def residual(params: PendulumParams, z, cfg: IntegratorConfig = DEFAULT_CONFIG) -> float:
    img = poincare_map(params, z, cfg)
    return math.hypot(img.q - z[0], img.p - z[1])


def newton_polish(params: PendulumParams, z0, cfg: IntegratorConfig = DEFAULT_CONFIG,
                  tol: float = 1e-10, max_iter: int = 30):
    """2D Newton on ``S(z) - z = 0`` using the monodromy.

    Returns ``(q, p, residual)`` of the best iterate; raises
    :class:`ConvergenceError` if the residual never drops below ``tol``.
    """
    z = np.array(z0, dtype=float)
    best = None
    for _ in range(max_iter):
        res = poincare_tangent(params, z, cfg)
        F = np.array([res.state.q - z[0], res.state.p - z[1]])
        nrm = float(np.hypot(*F))
        if not math.isfinite(nrm):
            break
        if best is None or nrm < best[2]:
            best = (float(z[0]), float(z[1]), nrm)
        J = res.monodromy - np.eye(2)
        try:
            step = np.linalg.solve(J, F)
        except np.linalg.LinAlgError:
            break
        if nrm < tol and np.max(np.abs(step)) < 1e-13:
            break
        if np.max(np.abs(step)) > 2.0:
            step *= 2.0 / np.max(np.abs(step))
        z = z - step
        if np.max(np.abs(step)) < 1e-15:
            break
    if best is None or best[2] >= tol:
        raise ConvergenceError(
            f"Newton from {tuple(z0)} stalled at residual {best[2] if best else math.nan:.3e}"
        )
    return best


def classify_stability(trace: float, index: Optional[int] = None, isolated: bool = True,
                       parabolic_tol: float = 1e-9) -> tuple[str, bool]:
    """Linear class from the monodromy trace and the instability flag.

    Unstable is reported for hyperbolic points and for isolated points whose
    index is not +1.  Elliptic points are only linearly stable.
    """
    if abs(trace - 2.0) <= parabolic_tol or abs(trace + 2.0) <= parabolic_tol:
        cls = PARABOLIC
    elif abs(trace) < 2.0:
        cls = ELLIPTIC
    else:
        cls = HYPERBOLIC
    unstable = cls == HYPERBOLIC or (isolated and index is not None and index <= 0)
    return cls, unstable


def _wrap(angle):
    return (angle + math.pi) % TWO_PI - math.pi


def fixed_point_index(params: PendulumParams, center, delta: float = 1e-3,
                      n_samples: int = 256, cfg: IntegratorConfig = DEFAULT_CONFIG,
                      twist_certified: bool = True, max_depth: int = 12) -> int:
    """Winding number of ``z -> S(z) - z`` around a circle of radius ``delta``.

    The circle is traversed counterclockwise in the ``(q, p)`` plane.  Arcs
    on which the displacement direction turns by more than pi/2 between
    consecutive samples are subdivided.
    """
    q0, p0 = (center.q0, center.p0) if isinstance(center, PeriodicOrbit) else center

    def direction(angle):
        z = (q0 + delta * math.cos(angle), p0 + delta * math.sin(angle))
        img = poincare_map(params, z, cfg)
        dq, dp = img.q - z[0], img.p - z[1]
        if math.hypot(dq, dp) < 1e-12:
            raise CircleTooSmallError(
                f"displacement vanishes on the circle of radius {delta} around ({q0}, {p0})"
            )
        return math.atan2(dp, dq)

    def turn(a0, d0, a1, d1, depth):
        dd = _wrap(d1 - d0)
        if abs(dd) <= 0.5 * math.pi or depth >= max_depth:
            return dd
        am = 0.5 * (a0 + a1)
        dm = direction(am)
        return turn(a0, d0, am, dm, depth + 1) + turn(am, dm, a1, d1, depth + 1)

    angles = TWO_PI * np.arange(n_samples + 1) / n_samples
    dirs = [direction(a) for a in angles[:-1]]
    dirs.append(dirs[0])
    total = sum(turn(angles[k], dirs[k], angles[k + 1], dirs[k + 1], 0) for k in range(n_samples))
    index = int(round(total / TWO_PI))
    if twist_certified and index not in (-1, 0, 1):
        raise InconsistencyError(f"index {index} outside {{-1, 0, 1}} for a twist map")
    return index


def make_orbit(params: PendulumParams, q0: float, p0: float,
               cfg: IntegratorConfig = DEFAULT_CONFIG, solver: SolverConfig = DEFAULT_SOLVER,
               twist_certified: bool = True, delta: Optional[float] = None) -> PeriodicOrbit:
    """Evaluate residual, monodromy trace, index and stability at a fixed point."""
    res = poincare_tangent(params, (q0, p0), cfg)
    resid = math.hypot(res.state.q - q0, res.state.p - p0)
    try:
        index = fixed_point_index(params, (q0, p0), solver.delta if delta is None else delta,
                                  solver.index_samples, cfg, twist_certified)
    except CircleTooSmallError:
        index = None
    cls, unstable = classify_stability(res.trace, index)
    return PeriodicOrbit(float(q0), float(p0), resid, index, res.trace, cls, params.N, unstable)


def _canonical_angle(q: float) -> float:
    r = q % TWO_PI
    if TWO_PI - r < 1e-9:
        r -= TWO_PI
    return r


def _dedup(points, tol):
    pts = sorted(((_canonical_angle(float(q)), float(p), float(res)) for q, p, res in points), key=lambda z: (z[0], z[1]))
    kept = []
    for q, p, res in pts:
        for k, (qk, pk, rk) in enumerate(kept):
            if abs(_wrap(q - qk)) < tol and abs(p - pk) < tol:
                if res < rk:
                    kept[k] = (q, p, res)
                break
        else:
            kept.append((q, p, res))
    return sorted(kept, key=lambda z: (z[0] % TWO_PI, z[1]))


def _finish(params, points, cfg, solver, twist_certified):
    orbits = []
    for k, (q, p, _) in enumerate(points):
        others = [math.hypot(_wrap(q - q2), p - p2) for j, (q2, p2, _) in enumerate(points) if j != k]
        delta = solver.delta
        if others and min(others) < 2 * delta:
            delta = min(others) / 4
        orbits.append(make_orbit(params, q, p, cfg, solver, twist_certified, delta))
    return tuple(orbits)


def _multistart(params, bound, cfg, solver):
    n = solver.fallback_grid
    found = []
    for q in angle_grid(n):
        for p in np.linspace(-bound.p_tilde, bound.p_tilde, n):
            try:
                z = newton_polish(params, (q, p), cfg, solver.tol)
            except ConvergenceError:
                continue
            if abs(z[1]) < bound.p_tilde:
                found.append(z)
    return _dedup(found, solver.dedup_tol)


def find_fixed_points(params: PendulumParams, cfg: IntegratorConfig = DEFAULT_CONFIG,
                      solver: SolverConfig = DEFAULT_SOLVER) -> FixedPointSearch:
    """All fixed points of the Poincare map in the strip, up to 2 pi shifts.

    Either a tuple of isolated :class:`PeriodicOrbit` or a
    :class:`DegenerateContinuum` when ``max |Phi|`` on the grid is below
    ``solver.degeneracy_tol``.
    """
    require_admissible(params)
    bound = strip_bound(params, solver.margin)
    try:
        curve = build_reduced_curve(params, solver.grid, bound, cfg)
    except (TwistViolation, BoundaryTwistError) as exc:
        log.warning("twist reduction failed (%s); using multi-start Newton", exc)
        polish_cfg = cfg.refined(solver.polish_refinement)
        points = _multistart(params, bound, polish_cfg, solver)
        orbits = _finish(params, points, polish_cfg, solver, twist_certified=False)
        return FixedPointSearch(orbits=orbits, no_twist_fallback=True)

    max_Phi = curve.max_abs_Phi
    if max_Phi < solver.degeneracy_tol:
        return FixedPointSearch(continuum=DegenerateContinuum(curve), max_abs_Phi=max_Phi,
                                curve=curve)

    M = len(curve.theta)
    Phi = curve.Phi
    zero_tol = 10 * solver.tol
    candidates = []
    for i in range(M):
        j = (i + 1) % M
        if abs(Phi[i]) < zero_tol:
            candidates.append((curve.theta[i], curve.phi[i]))
        elif Phi[i] * Phi[j] < 0 and abs(Phi[j]) >= zero_tol:
            a, b = curve.theta[i], curve.theta[i] + TWO_PI / M
            guess = {"r": curve.phi[i]}

            def Phi_at(th):
                r, P = _solve_phi(params, th, bound, cfg, guess["r"])
                guess["r"] = r
                return P - r

            th = brentq(Phi_at, a, b, xtol=1e-12, rtol=4 * np.finfo(float).eps)
            candidates.append((th, reduced_point(params, th, bound, cfg, guess["r"])))
        else:
            # near-tangential zeros of Phi: small local minimum of |Phi|
            h = (i - 1) % M
            if abs(Phi[i]) < abs(Phi[h]) and abs(Phi[i]) <= abs(Phi[j]) \
                    and abs(Phi[i]) < 1e-3 * max_Phi and Phi[h] * Phi[j] > 0:
                try:
                    candidates.append(newton_polish(params, (curve.theta[i], curve.phi[i]),
                                                    cfg, solver.tol)[:2])
                except ConvergenceError:
                    pass

    points = []
    polish_cfg = cfg.refined(solver.polish_refinement)
    for q, p in candidates:
        base = (q, p, residual(params, (q, p), cfg))
        try:
            polished = newton_polish(params, (q, p), polish_cfg, solver.tol)
        except ConvergenceError:
            polished = base
        best = min(base, polished, key=lambda z: z[2])
        if best[2] >= solver.tol:
            raise ConvergenceError(f"fixed point near ({q}, {p}) has residual {best[2]:.3e}")
        points.append(best)
    points = _dedup(points, solver.dedup_tol)
    orbits = _finish(params, points, polish_cfg, solver, twist_certified=True)
    return FixedPointSearch(orbits=orbits, max_abs_Phi=max_Phi, curve=curve)


def reconstruct_lab_solution(params: PendulumParams, orbit, n_samples: int = 201,
                             cfg: IntegratorConfig = DEFAULT_CONFIG,
                             winding_tol: float = 1e-8) -> np.ndarray:
    """Lab-frame samples ``(t, x, x')`` over one period of a periodic orbit.

    Checks ``x(T) - x(0) = 2 N pi`` and ``max |x'| < 1``.
    """
    q0, p0 = (orbit.q0, orbit.p0) if isinstance(orbit, PeriodicOrbit) else orbit
    rows = sample_trajectory(params, (q0, p0), 0.0, params.T, n_samples, cfg)
    t, x, v = rows[:, 0], rows[:, 3], rows[:, 4]
    gain = x[-1] - x[0] - TWO_PI * params.N
    if abs(gain) > winding_tol:
        raise InconsistencyError(f"winding check failed: x(T) - x(0) - 2 N pi = {gain:.3e}")
    if not np.max(np.abs(v)) < 1.0:
        raise InconsistencyError("lab velocity reached the speed of light")
    return np.column_stack([t, x, v])
