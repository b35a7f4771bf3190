"""Time integration of the co-moving system, its tangent flow and action.

All integrations go through one compiled Dormand-Prince 5(4) kernel with
adaptive steps.  The monodromy matrix and the action integral of the
generating function are carried as extra ODE components so they share the
step-size control of the state.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .errors import DomainError, IntegrationError
from .model import CylinderState, PendulumParams, TWO_PI, energy, to_velocity


@dataclass(frozen=True)
class IntegratorConfig:
    rtol: float = 1e-10
    atol: float = 1e-12
    max_steps: int = 10_000_000
    initial_step: Optional[float] = None  # None means T / 1000

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("tolerances must be positive")
        if int(self.max_steps) < 1:
            raise ValueError("max_steps must be >= 1")
        if self.initial_step is not None and not self.initial_step > 0:
            raise ValueError("initial_step must be positive")

    def first_step(self, T: float) -> float:
        return self.initial_step if self.initial_step is not None else T / 1000.0

    def refined(self, factor: float = 0.5) -> IntegratorConfig:
        """Same config with both tolerances multiplied by ``factor``."""
        return IntegratorConfig(self.rtol * factor, self.atol * factor, self.max_steps,
                                self.initial_step)

    @classmethod
    def from_dict(cls, data: dict) -> IntegratorConfig:
        unknown = set(data) - {"rtol", "atol", "max_steps", "initial_step"}
        if unknown:
            raise ValueError(f"unknown integrator keys: {sorted(unknown)}")
        return cls(**data)


DEFAULT_CONFIG = IntegratorConfig()


@dataclass(frozen=True)
class TangentFlowResult:
    """Final state, monodromy ``d(q, p)(t1) / d(q0, p0)`` and accumulated action."""

    state: CylinderState
    monodromy: np.ndarray
    action: float

    @property
    def trace(self) -> float:
        return float(self.monodromy[0, 0] + self.monodromy[1, 1])

    @property
    def det(self) -> float:
        m = self.monodromy
        return float(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])


def kernel_args(params: PendulumParams):
    cc, sc = params.forcing.coefficient_arrays()
    return params.a, params.K, TWO_PI / params.T, cc, sc


def _run(params, y0, t0, t1, cfg):
    if t1 < t0:
        raise ValueError("t1 must be >= t0")
    y, t, status, _, _ = _kernels.integrate(
        y0, float(t0), float(t1), cfg.first_step(params.T), cfg.rtol, cfg.atol,
        int(cfg.max_steps), *kernel_args(params),
    )
    if status == 1:
        raise IntegrationError("step budget exhausted", t)
    if status == 2:
        raise IntegrationError("step size underflow", t)
    return y


def flow(params: PendulumParams, s0, t0: float, t1: float,
         cfg: IntegratorConfig = DEFAULT_CONFIG) -> CylinderState:
    """State at ``t1`` of the solution through ``s0`` at ``t0``."""
    y = _run(params, np.array([s0[0], s0[1]], dtype=float), t0, t1, cfg)
    return CylinderState(float(y[0]), float(y[1]))


def flow_with_tangent(params: PendulumParams, s0, t0: float, t1: float,
                      cfg: IntegratorConfig = DEFAULT_CONFIG) -> TangentFlowResult:
    y0 = np.array([s0[0], s0[1], 1.0, 0.0, 0.0, 1.0, 0.0])
    y = _run(params, y0, t0, t1, cfg)
    return TangentFlowResult(
        CylinderState(float(y[0]), float(y[1])), y[2:6].reshape(2, 2).copy(), float(y[6])
    )


def flow_to_event(params: PendulumParams, s0, t0: float, t_max: float, component: str,
                  level: float, cfg: IntegratorConfig = DEFAULT_CONFIG,
                  t_tol: float = 1e-12):
    """First time after ``t0`` at which ``q`` or ``p`` crosses ``level``.

    Returns ``(t_event, state)`` or ``None`` if no crossing occurs before
    ``t_max``.
    """
    comp = {"q": 0, "p": 1}[component]
    t, y, status = _kernels.integrate_to_event(
        np.array([s0[0], s0[1]], dtype=float), float(t0), float(t_max),
        cfg.first_step(params.T), cfg.rtol, cfg.atol, int(cfg.max_steps), comp,
        float(level), *kernel_args(params), t_tol,
    )
    if status == 1:
        raise IntegrationError("step budget exhausted", t)
    if status == 2:
        raise IntegrationError("step size underflow", t)
    if status == 3:
        return None
    return float(t), CylinderState(float(y[0]), float(y[1]))


def sample_trajectory(params: PendulumParams, s0, t0: float, t1: float, n_samples: int,
                      cfg: IntegratorConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Equally spaced samples of the solution through ``s0``.

    Returns an array of shape ``(n_samples, 6)`` with columns
    ``t, q, p, x, v, E`` where ``x = q + K t`` is the lab angle,
    ``v = p / sqrt(1 + p^2)`` the lab velocity and ``E`` the autonomous
    energy of ``(x, v)``.  Steps are clipped to land exactly on each sample
    time, and the step size is carried across samples.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    if t1 < t0:
        raise ValueError("t1 must be >= t0")
    times = np.linspace(t0, t1, n_samples)
    args = kernel_args(params)
    y = np.array([s0[0], s0[1]], dtype=float)
    out = np.empty((n_samples, 6))
    out[0, :3] = times[0], y[0], y[1]
    h = cfg.first_step(params.T)
    for i in range(1, n_samples):
        y, t, status, _, h = _kernels.integrate(
            y, times[i - 1], times[i], h, cfg.rtol, cfg.atol, int(cfg.max_steps), *args
        )
        if status:
            raise IntegrationError("integration failed", t)
        out[i, :3] = times[i], y[0], y[1]
    out[:, 3] = out[:, 1] + params.K * out[:, 0]
    out[:, 4] = to_velocity(out[:, 2])
    try:
        out[:, 5] = energy(params.a, (out[:, 3], out[:, 4]))
    except DomainError:
        # |v| rounds to 1 only for astronomically large momenta
        out[:, 5] = np.nan
    return out


TRAJECTORY_HEADER = ("t", "q", "p", "x", "v", "E")


def format_float(value: float) -> str:
    return format(float(value), ".17g")


def trajectory_csv(rows: np.ndarray) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRAJECTORY_HEADER)
    for row in rows:
        writer.writerow([format_float(v) for v in row])
    return buf.getvalue()
