"""Problem definition for the forced relativistic pendulum.

The lab-frame equation is

    d/dt ( x' / sqrt(1 - x'^2) ) + a sin x = f(t),

with f a T-periodic forcing of zero mean.  Solutions with winding number N
(x(t + T) = x(t) + 2 N pi) are studied in the co-moving angle
q = x - K t, K = 2 N pi / T, and the momentum p = x' / sqrt(1 - x'^2), where
the flow is the singularity-free Hamiltonian system

    q' = p / sqrt(1 + p^2) - K
    p' = -a sin(q + K t) + f(t).
"""

from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import DomainError, ParameterError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ForcingSeries:
    """Zero-mean trigonometric forcing.

    ``f(t) = sum_k cos[k-1] cos(k w t) + sin[k-1] sin(k w t)`` with
    ``w = 2 pi / T`` and ``k = 1..K_max``.  There is no constant term, so the
    mean over a period is zero by construction.
    """

    cos: tuple[float, ...] = ()
    sin: tuple[float, ...] = ()

    def __post_init__(self):
        c = tuple(float(v) for v in self.cos)
        s = tuple(float(v) for v in self.sin)
        if not all(math.isfinite(v) for v in c + s):
            raise ParameterError("forcing coefficients must be finite")
        object.__setattr__(self, "cos", c)
        object.__setattr__(self, "sin", s)

    @classmethod
    def zero(cls) -> ForcingSeries:
        return cls()

    @property
    def n_harmonics(self) -> int:
        return max(len(self.cos), len(self.sin))

    @property
    def is_zero(self) -> bool:
        return not any(self.cos) and not any(self.sin)

    def coefficient_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Cosine and sine coefficients padded to a common length."""
        n = self.n_harmonics
        c = np.zeros(n)
        s = np.zeros(n)
        c[: len(self.cos)] = self.cos
        s[: len(self.sin)] = self.sin
        return c, s

    def sup_norm_bound(self) -> float:
        return float(sum(abs(v) for v in self.cos) + sum(abs(v) for v in self.sin))

    def evaluate(self, t, T: float):
        """Value of the forcing at time(s) ``t`` for base period ``T``."""
        t = np.asarray(t, dtype=float)
        w = TWO_PI / T
        out = np.zeros_like(t)
        for k, c in enumerate(self.cos, start=1):
            out = out + c * np.cos(k * w * t)
        for k, s in enumerate(self.sin, start=1):
            out = out + s * np.sin(k * w * t)
        return out if out.ndim else float(out)

    def scaled(self, factor: float) -> ForcingSeries:
        return ForcingSeries(
            tuple(factor * v for v in self.cos), tuple(factor * v for v in self.sin)
        )

    def to_dict(self) -> dict:
        return {"cos": list(self.cos), "sin": list(self.sin)}

    @classmethod
    def from_dict(cls, data: dict) -> ForcingSeries:
        unknown = set(data) - {"cos", "sin"}
        if unknown:
            raise ParameterError(f"unknown forcing keys: {sorted(unknown)}")
        return cls(tuple(data.get("cos", ())), tuple(data.get("sin", ())))


@dataclass(frozen=True)
class PendulumParams:
    """Gravity coefficient ``a``, period ``T``, winding number ``N`` and forcing."""

    a: float
    T: float
    N: int = 0
    forcing: ForcingSeries = field(default_factory=ForcingSeries)

    def __post_init__(self):
        a, T = float(self.a), float(self.T)
        if not (math.isfinite(a) and math.isfinite(T)):
            raise ParameterError("a and T must be finite")
        if a < 0:
            raise ParameterError(f"a must be positive, got {a}")
        if T <= 0:
            raise ParameterError(f"T must be positive, got {T}")
        if isinstance(self.N, bool) or int(self.N) != self.N:
            raise ParameterError(f"N must be an integer, got {self.N!r}")
        if not isinstance(self.forcing, ForcingSeries):
            raise ParameterError("forcing must be a ForcingSeries")
        if a == 0:
            warnings.warn(
                "a = 0 is a degenerate free-rotator case, used only as a closed-form check",
                stacklevel=3,
            )
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "N", int(self.N))

    @property
    def K(self) -> float:
        """Drift speed 2 N pi / T of the co-moving frame."""
        return drift_speed(self)

    @property
    def twist_threshold(self) -> float:
        """pi^2 / T^2: below it the Poincare map is a twist map."""
        return math.pi**2 / self.T**2

    def with_forcing(self, forcing: ForcingSeries) -> PendulumParams:
        return PendulumParams(self.a, self.T, self.N, forcing)

    def to_dict(self) -> dict:
        return {"a": self.a, "T": self.T, "N": self.N, "forcing": self.forcing.to_dict()}

    def params_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, data: dict) -> PendulumParams:
        unknown = set(data) - {"a", "T", "N", "forcing"}
        if unknown:
            raise ParameterError(f"unknown parameter keys: {sorted(unknown)}")
        missing = {"a", "T"} - set(data)
        if missing:
            raise ParameterError(f"missing parameter keys: {sorted(missing)}")
        forcing = data.get("forcing")
        forcing = ForcingSeries() if forcing is None else ForcingSeries.from_dict(forcing)
        return cls(data["a"], data["T"], data.get("N", 0), forcing)

    @classmethod
    def from_json(cls, path) -> PendulumParams:
        return cls.from_dict(json.loads(Path(path).read_text()))


class CylinderState(NamedTuple):
    """Point on the lifted cylinder: co-moving angle ``q`` and momentum ``p``."""

    q: float
    p: float


class LabState(NamedTuple):
    """Lab-frame angle ``x`` and velocity ``v = x'`` with ``|v| < 1``."""

    x: float
    v: float


def drift_speed(params: PendulumParams) -> float:
    return TWO_PI * params.N / params.T


def admissible(params: PendulumParams) -> bool:
    """Whether winding number N over period T is compatible with |x'| < 1."""
    return abs(drift_speed(params)) < 1.0


def require_admissible(params: PendulumParams) -> None:
    if not admissible(params):
        raise ParameterError(
            f"inadmissible parameters: |2 N pi / T| = {abs(params.K):.6g} >= 1"
        )


def to_momentum(v):
    """Momentum ``v / sqrt(1 - v^2)``; raises for ``|v| >= 1``."""
    v_arr = np.asarray(v, dtype=float)
    if np.any(~(np.abs(v_arr) < 1.0)):
        raise DomainError("velocity must satisfy |v| < 1")
    out = v_arr / np.sqrt((1.0 - v_arr) * (1.0 + v_arr))
    return out if out.ndim else float(out)


def to_velocity(p):
    """Velocity ``p / sqrt(1 + p^2)``, the inverse of :func:`to_momentum`."""
    p_arr = np.asarray(p, dtype=float)
    out = p_arr / np.hypot(1.0, p_arr)
    return out if out.ndim else float(out)


def vector_field(params: PendulumParams, t: float, s: CylinderState) -> tuple[float, float]:
    q, p = s
    K = params.K
    dq = p / math.hypot(1.0, p) - K
    dp = -params.a * math.sin(q + K * t) + params.forcing.evaluate(t, params.T)
    return dq, float(dp)


def hamiltonian(params: PendulumParams, t: float, s: CylinderState) -> float:
    q, p = s
    K = params.K
    f = params.forcing.evaluate(t, params.T)
    return float(math.hypot(1.0, p) - K * p - params.a * math.cos(q + K * t) - f * q)


def energy(a: float, s: LabState):
    """Autonomous first integral ``1/sqrt(1 - v^2) - a cos x + a``.

    Works elementwise on arrays.  Always ``>= 1``, with equality only at the
    stable equilibria.
    """
    x, v = s
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any(~(np.abs(v) < 1.0)):
        raise DomainError("velocity must satisfy |v| < 1")
    # 1 - cos x written as 2 sin^2(x/2) to keep E - 1 accurate near the bottom
    out = 1.0 / np.sqrt((1.0 - v) * (1.0 + v)) + 2.0 * a * np.sin(0.5 * x) ** 2
    return out if out.ndim else float(out)
