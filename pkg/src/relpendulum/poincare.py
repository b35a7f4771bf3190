"""Time-T Poincare map of the co-moving system and its diagnostics."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BoundaryTwistError, ParameterError
from .integrate import (
    DEFAULT_CONFIG,
    IntegratorConfig,
    TangentFlowResult,
    flow,
    flow_with_tangent,
)
from .model import CylinderState, PendulumParams, TWO_PI, require_admissible, to_velocity


def poincare_map(params: PendulumParams, s0, cfg: IntegratorConfig = DEFAULT_CONFIG) -> CylinderState:
    """``S(q0, p0) = (q(T), p(T))`` for the solution starting at time 0."""
    require_admissible(params)
    return flow(params, s0, 0.0, params.T, cfg)


def poincare_tangent(params: PendulumParams, s0,
                     cfg: IntegratorConfig = DEFAULT_CONFIG) -> TangentFlowResult:
    """Poincare map together with its Jacobian and the generating-function value."""
    require_admissible(params)
    return flow_with_tangent(params, s0, 0.0, params.T, cfg)


def generating_function(params: PendulumParams, theta: float, r: float,
                        cfg: IntegratorConfig = DEFAULT_CONFIG) -> float:
    """Action ``V(theta, r)`` with ``dV = P dQ - p dq``.

    ``V`` is the time integral over one period of
    ``-1/sqrt(1+p^2) + a cos(q + K t) + f(t) q`` along the orbit through
    ``(theta, r)``.
    """
    return poincare_tangent(params, (theta, r), cfg).action


def generating_function_partials(params: PendulumParams, theta: float, r: float,
                                 cfg: IntegratorConfig = DEFAULT_CONFIG) -> tuple[float, float]:
    """``(V_theta, V_r)`` predicted from the monodromy: ``P dQ - r dq``."""
    res = poincare_tangent(params, (theta, r), cfg)
    P = res.state.p
    m = res.monodromy
    return P * m[0, 0] - r, P * m[0, 1]


@dataclass(frozen=True)
class StripBound:
    """Half-height of a strip whose edges are pushed in opposite directions.

    ``p_hat`` is the momentum above which the co-moving angle always
    increases (``p / sqrt(1+p^2) > |K|``); ``p_tilde`` adds the largest
    momentum change possible over one period plus a safety margin.
    """

    p_hat: float
    p_tilde: float
    margin: float = 1.0

    def __post_init__(self):
        if not (self.p_tilde > self.p_hat >= 0):
            raise ValueError("need p_tilde > p_hat >= 0")


def strip_bound(params: PendulumParams, margin: float = 1.0) -> StripBound:
    require_admissible(params)
    if margin <= 0:
        raise ParameterError("margin must be positive")
    K = abs(params.K)
    p_hat = K / math.sqrt((1.0 - K) * (1.0 + K))
    p_tilde = p_hat + params.T * (params.a + params.forcing.sup_norm_bound()) + margin
    return StripBound(p_hat, p_tilde, margin)


@dataclass(frozen=True)
class BoundaryTwist:
    """Extreme angular displacements over one period on the strip edges."""

    upper_min: float  # min over q of Q(q, p_tilde) - q, must be > 0
    lower_max: float  # max over q of Q(q, -p_tilde) - q, must be < 0

    @property
    def gap(self) -> float:
        """Largest r with Q(q, p~) - q > r and Q(q, -p~) - q < -r on the grid."""
        return min(self.upper_min, -self.lower_max)


def angle_grid(n: int) -> np.ndarray:
    return TWO_PI * np.arange(n) / n


def boundary_twist_check(params: PendulumParams, bound: StripBound, n_grid: int = 64,
                         cfg: IntegratorConfig = DEFAULT_CONFIG) -> BoundaryTwist:
    require_admissible(params)
    upper = np.empty(n_grid)
    lower = np.empty(n_grid)
    qs = angle_grid(n_grid)
    for i, q in enumerate(qs):
        upper[i] = flow(params, (q, bound.p_tilde), 0.0, params.T, cfg).q - q
        lower[i] = flow(params, (q, -bound.p_tilde), 0.0, params.T, cfg).q - q
    if upper.min() <= 0:
        raise BoundaryTwistError("upper strip edge does not move forward",
                                 float(qs[np.argmin(upper)]))
    if lower.max() >= 0:
        raise BoundaryTwistError("lower strip edge does not move backward",
                                 float(qs[np.argmax(lower)]))
    return BoundaryTwist(float(upper.min()), float(lower.max()))


def twist_at(params: PendulumParams, s0, cfg: IntegratorConfig = DEFAULT_CONFIG) -> float:
    """``dQ/dp0`` at one point: the upper-right monodromy entry."""
    return float(poincare_tangent(params, s0, cfg).monodromy[0, 1])


def default_region(params: PendulumParams) -> tuple[float, float]:
    b = strip_bound(params)
    return (-b.p_tilde, b.p_tilde)


def twist_grid(params: PendulumParams, region=None, n_grid: int = 32,
               cfg: IntegratorConfig = DEFAULT_CONFIG):
    """``dQ/dp0`` on ``n_grid`` angles in [0, 2 pi) times ``n_grid`` momenta.

    Returns ``(qs, ps, values)`` with ``values[i, j]`` at ``(qs[i], ps[j])``.
    """
    require_admissible(params)
    lo, hi = default_region(params) if region is None else region
    qs = angle_grid(n_grid)
    ps = np.linspace(lo, hi, n_grid)
    values = np.empty((n_grid, n_grid))
    for i, q in enumerate(qs):
        for j, p in enumerate(ps):
            values[i, j] = twist_at(params, (q, p), cfg)
    return qs, ps, values


def twist_margin(params: PendulumParams, region=None, n_grid: int = 32,
                 cfg: IntegratorConfig = DEFAULT_CONFIG) -> float:
    """Smallest ``dQ/dp0`` on the grid; positive means twist on the samples."""
    return float(twist_grid(params, region, n_grid, cfg)[2].min())


def twist_report(params: PendulumParams, region=None, n_grid: int = 32,
                 cfg: IntegratorConfig = DEFAULT_CONFIG) -> dict:
    lo, hi = default_region(params) if region is None else region
    value = twist_margin(params, (lo, hi), n_grid, cfg)
    return {
        "min_twist": value,
        "grid": [n_grid, n_grid],
        "region": [lo, hi],
        "params_hash": params.params_hash(),
    }


def boundary_twist_report(params: PendulumParams, bound: StripBound, n_grid: int = 64,
                          cfg: IntegratorConfig = DEFAULT_CONFIG) -> dict:
    bt = boundary_twist_check(params, bound, n_grid, cfg)
    return {
        "upper_min": bt.upper_min,
        "lower_max": bt.lower_max,
        "r": bt.gap,
        "grid": [n_grid],
        "region": [-bound.p_tilde, bound.p_tilde],
        "params_hash": params.params_hash(),
    }


@dataclass(frozen=True)
class CurveIntersection:
    """Crossings of a graph curve with its image under the Poincare map.

    ``invariant`` is set when every image sample lies on the curve.
    ``inconclusive`` is set when an image sample touches the curve without
    crossing it, so the count may miss a tangential contact.
    """

    count: int
    invariant: bool
    inconclusive: bool
    max_gap: float

    @property
    def satisfies_intersection_property(self) -> bool:
        return self.invariant or self.count >= 2


def _periodic_interp(q, curve_q, curve_p):
    return np.interp(np.mod(q, TWO_PI), curve_q, curve_p, period=TWO_PI)


def curve_intersection_count(params: PendulumParams, curve_q, curve_p,
                             cfg: IntegratorConfig = DEFAULT_CONFIG,
                             tangency_tol: float = 1e-10,
                             invariance_tol: float = 1e-9) -> CurveIntersection:
    """Count how often ``S(Gamma)`` crosses the graph ``Gamma: p = gamma(q)``.

    ``curve_q`` are angles covering one period (they are reduced mod 2 pi and
    sorted); ``curve_p`` the graph values.  Each sample is mapped, and the
    signed height of its image above the (periodic, piecewise linear) curve
    is tracked around the closed image loop.  Each sign change is one
    transversal crossing.
    """
    require_admissible(params)
    q = np.mod(np.asarray(curve_q, dtype=float), TWO_PI)
    p = np.asarray(curve_p, dtype=float)
    order = np.argsort(q)
    q, p = q[order], p[order]
    if len(q) < 3:
        raise ValueError("need at least 3 curve samples")

    gaps = np.empty(len(q))
    for i in range(len(q)):
        img = flow(params, (q[i], p[i]), 0.0, params.T, cfg)
        gaps[i] = img.p - _periodic_interp(img.q, q, p)
    max_gap = float(np.abs(gaps).max())
    if max_gap < invariance_tol:
        return CurveIntersection(0, True, False, max_gap)

    signs = np.sign(gaps)
    signs[np.abs(gaps) < tangency_tol] = 0
    nz = np.flatnonzero(signs)
    count = 0
    inconclusive = False
    n = len(signs)
    for k in range(len(nz)):
        i, j = nz[k], nz[(k + 1) % len(nz)]
        if signs[i] != signs[j]:
            count += 1
        elif (j - i) % n not in (1, 0) or (len(nz) == 1):
            # touched zero between two same-sign samples
            inconclusive = True
    return CurveIntersection(count, False, inconclusive, max_gap)


def read_curve_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read ``q,p`` rows (an optional header line is skipped)."""
    qs, ps = [], []
    with Path(path).open(newline="") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            try:
                q, p = float(row[0]), float(row[1])
            except ValueError:
                if qs:
                    raise
                continue
            qs.append(q)
            ps.append(p)
    return np.array(qs), np.array(ps)


def free_velocity_displacement(params: PendulumParams, p: float) -> float:
    """Exact ``Q(q, p) - q`` of the force-free rotator (``a = 0``, ``f = 0``)."""
    return params.T * (to_velocity(p) - params.K)
