"""Desk-scale invariant suites run by the ``verify`` subcommand.

Each suite returns a :class:`SuiteResult` carrying the worst observed value
of its monitored quantity next to the threshold it is held to.  Random
samples come from a seeded generator, so reports are reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import autonomous as aut
from .errors import PendulumError
from .integrate import IntegratorConfig, flow, flow_with_tangent
from .model import (
    ForcingSeries,
    PendulumParams,
    TWO_PI,
    admissible,
    energy,
    to_momentum,
    to_velocity,
    vector_field,
)
from .poincare import (
    generating_function,
    generating_function_partials,
    poincare_map,
    poincare_tangent,
    strip_bound,
    twist_margin,
)
from .solver import SolverConfig, find_fixed_points, reduced_slope, residual


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    worst: float
    threshold: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        text = f"{status} {self.name}: worst={self.worst:.3e} threshold={self.threshold:.1e}"
        return f"{text} ({self.detail})" if self.detail else text


@dataclass
class VerifyContext:
    params: PendulumParams
    cfg: IntegratorConfig
    solver: SolverConfig
    assert_twist: bool = False
    seed: int = 0

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


def _random_params(rng, n, max_a=None):
    out = []
    for _ in range(n):
        T = rng.uniform(2.0, 8.0)
        a_cap = math.pi**2 / T**2 if max_a is None else max_a
        a = rng.uniform(0.01, min(1.0, a_cap))
        n_h = int(rng.integers(0, 3))
        c = rng.uniform(-1, 1, n_h) / max(1, 2 * n_h)
        s = rng.uniform(-1, 1, n_h) / max(1, 2 * n_h)
        N_max = int(T / TWO_PI - 1e-9)
        N = int(rng.integers(-N_max, N_max + 1)) if N_max > 0 else 0
        out.append(PendulumParams(a, T, N, ForcingSeries(tuple(c), tuple(s))))
    return out


def suite_model(ctx: VerifyContext) -> SuiteResult:
    rng = ctx.rng()
    v = rng.uniform(-0.999, 0.999, 1000)
    roundtrip = float(np.max(np.abs(to_velocity(to_momentum(v)) - v)))
    bad = []
    for params in _random_params(rng, 20, max_a=1.0):
        for _ in range(10):
            t, q, p = rng.uniform(0, params.T), rng.uniform(-10, 10), rng.uniform(-5, 5)
            if abs(vector_field(params, t, (q, p))[1]) > params.a + params.forcing.sup_norm_bound() + 1e-15:
                bad.append("p-dot bound")
        nodes = np.arange(10_000) * params.T / 10_000
        if abs(np.mean(params.forcing.evaluate(nodes, params.T))) * params.T > 1e-12:
            bad.append("forcing mean")
    x = rng.uniform(-10, 10, 1000)
    if np.any(energy(0.3, (x, rng.uniform(-0.99, 0.99, 1000))) < 1.0):
        bad.append("energy below 1")
    ok = roundtrip < 1e-14 and not bad
    return SuiteResult("model", ok, roundtrip, 1e-14, ", ".join(sorted(set(bad))))


def suite_energy(ctx: VerifyContext, n: int = 20) -> SuiteResult:
    rng = ctx.rng()
    params = PendulumParams(max(ctx.params.a, 0.05), ctx.params.T)
    worst = 0.0
    for _ in range(n):
        q0, p0 = rng.uniform(-math.pi, math.pi), rng.uniform(-3, 3)
        s1 = flow(params, (q0, p0), 0.0, 10 * params.T, ctx.cfg)
        e0 = energy(params.a, (q0, to_velocity(p0)))
        e1 = energy(params.a, (s1.q, to_velocity(s1.p)))
        worst = max(worst, abs(e1 - e0))
    return SuiteResult("energy-conservation", worst < 1e-9, worst, 1e-9)


def suite_symplectic(ctx: VerifyContext, n_grid: int = 16) -> SuiteResult:
    params = ctx.params
    b = strip_bound(params)
    worst = 0.0
    for q in TWO_PI * np.arange(n_grid) / n_grid:
        for p in np.linspace(-b.p_tilde, b.p_tilde, n_grid):
            worst = max(worst, abs(poincare_tangent(params, (q, p), ctx.cfg).det - 1.0))
    return SuiteResult("symplecticity", worst < 1e-8, worst, 1e-8, "det drift of monodromy")


def suite_tangent(ctx: VerifyContext, n: int = 10, h: float = 1e-6) -> SuiteResult:
    rng = ctx.rng()
    worst = 0.0
    for params in _random_params(rng, n):
        s0 = (rng.uniform(0, TWO_PI), rng.uniform(-2, 2))
        M = flow_with_tangent(params, s0, 0.0, params.T, ctx.cfg).monodromy
        for col, e in enumerate(((h, 0.0), (0.0, h))):
            plus = flow(params, (s0[0] + e[0], s0[1] + e[1]), 0.0, params.T, ctx.cfg)
            minus = flow(params, (s0[0] - e[0], s0[1] - e[1]), 0.0, params.T, ctx.cfg)
            fd = np.array([plus.q - minus.q, plus.p - minus.p]) / (2 * h)
            worst = max(worst, float(np.max(np.abs(fd - M[:, col]))))
    return SuiteResult("tangent-flow", worst < 1e-5, worst, 1e-5)


def suite_reversibility(ctx: VerifyContext, n: int = 10) -> SuiteResult:
    rng = ctx.rng()
    params = PendulumParams(max(ctx.params.a, 0.05), ctx.params.T)
    worst = 0.0
    for _ in range(n):
        q0, p0 = rng.uniform(-math.pi, math.pi), rng.uniform(-2, 2)
        s1 = flow(params, (q0, p0), 0.0, params.T, ctx.cfg)
        s2 = flow(params, (s1.q, -s1.p), 0.0, params.T, ctx.cfg)
        worst = max(worst, abs(s2.q - q0), abs(-s2.p - p0))
    return SuiteResult("reversibility", worst < 1e-8, worst, 1e-8)


def suite_generating_function(ctx: VerifyContext, n_grid: int = 4, h: float = 1e-5) -> SuiteResult:
    params = ctx.params
    b = strip_bound(params)
    per = dv = 0.0
    for th in TWO_PI * np.arange(n_grid) / n_grid:
        for r in np.linspace(-0.8 * b.p_tilde, 0.8 * b.p_tilde, n_grid):
            v0 = generating_function(params, th, r, ctx.cfg)
            per = max(per, abs(generating_function(params, th + TWO_PI, r, ctx.cfg) - v0))
            vt, vr = generating_function_partials(params, th, r, ctx.cfg)
            fd_t = (generating_function(params, th + h, r, ctx.cfg)
                    - generating_function(params, th - h, r, ctx.cfg)) / (2 * h)
            fd_r = (generating_function(params, th, r + h, ctx.cfg)
                    - generating_function(params, th, r - h, ctx.cfg)) / (2 * h)
            dv = max(dv, abs(fd_t - vt), abs(fd_r - vr))
    ok = per < 1e-8 and dv < 1e-5
    return SuiteResult("generating-function", ok, max(per / 1e-8, dv / 1e-5), 1.0,
                       f"periodicity {per:.2e} (1e-8), dV {dv:.2e} (1e-5); worst is relative")


def suite_equivariance(ctx: VerifyContext, n: int = 10) -> SuiteResult:
    rng = ctx.rng()
    params = ctx.params
    worst = 0.0
    for _ in range(n):
        q, p = rng.uniform(0, TWO_PI), rng.uniform(-2, 2)
        a = poincare_map(params, (q, p), ctx.cfg)
        b = poincare_map(params, (q + TWO_PI, p), ctx.cfg)
        worst = max(worst, abs(b.q - a.q - TWO_PI), abs(b.p - a.p))
    return SuiteResult("equivariance", worst < 1e-9, worst, 1e-9)


def suite_twist(ctx: VerifyContext, n_grid: int = 16) -> SuiteResult:
    params = ctx.params
    below = params.a < params.twist_threshold
    if not (ctx.assert_twist or below):
        return SuiteResult("twist", True, math.nan, 0.0, "skipped: a >= pi^2/T^2 and not asserted")
    m = twist_margin(params, None, n_grid, ctx.cfg)
    return SuiteResult("twist", m > 0, m, 0.0, "minimum dQ/dp0 on the strip grid, must be > 0")


def suite_solver(ctx: VerifyContext) -> SuiteResult:
    params = ctx.params
    res = find_fixed_points(params, ctx.cfg, ctx.solver)
    if res.degenerate:
        return SuiteResult("solver", True, res.max_abs_Phi, ctx.solver.degeneracy_tol,
                           "degenerate continuum")
    orbits = res.orbits
    problems = []
    if len(orbits) < 2:
        problems.append(f"only {len(orbits)} orbit(s)")
    # twice the accuracy of the final polish stage
    fine = ctx.cfg.refined(0.5 * ctx.solver.polish_refinement)
    worst = max((residual(params, (o.q0, o.p0), fine) for o in orbits), default=math.inf)
    if worst >= ctx.solver.tol:
        problems.append("residual")
    if any(o.index not in (-1, 0, 1) for o in orbits):
        problems.append("index out of range")
    elif sum(o.index for o in orbits) != 0:
        problems.append("index sum nonzero")
    if not any(o.unstable for o in orbits):
        problems.append("no unstable orbit")
    if not res.no_twist_fallback:
        for o in orbits:
            slope = reduced_slope(params, o.q0, cfg=ctx.cfg)
            if abs(slope) > 1e-6 and o.index != -int(np.sign(slope)):
                problems.append("index != -sign(Phi')")
    detail = f"{len(orbits)} orbits" + ("; " + ", ".join(problems) if problems else "")
    return SuiteResult("solver", not problems, worst, ctx.solver.tol, detail)


def suite_autonomous(ctx: VerifyContext) -> SuiteResult:
    rng = ctx.rng()
    a = 0.2
    sep = 1 + 2 * a
    Es = np.linspace(sep + 0.01, sep + 10, 50)
    Ts = [aut.running_time(a, E) for E in Es]
    problems = []
    if not all(t1 > t2 for t1, t2 in zip(Ts, Ts[1:])):
        problems.append("T_N not decreasing")
    free = max(abs(aut.running_time(0.0, E, 1) - aut.free_running_time(E, 1))
               for E in rng.uniform(1.05, 20, 20))
    sym = abs(aut.libration_period(0.25, 1.3, ctx.cfg, side=1)
              - aut.libration_period(0.25, 1.3, ctx.cfg, side=-1))
    if aut.classify_energy(a, sep) is not aut.EnergyClass.SEPARATRIX:
        problems.append("separatrix boundary")
    worst = max(free / 1e-9, sym / 1e-10)
    ok = free < 1e-9 and sym < 1e-10 and not problems
    detail = f"closed form {free:.2e} (1e-9), symmetry {sym:.2e} (1e-10)"
    return SuiteResult("autonomous", ok, worst, 1.0,
                       detail + ("; " + ", ".join(problems) if problems else ""))


SUITES: dict[str, Callable[[VerifyContext], SuiteResult]] = {
    "model": suite_model,
    "energy": suite_energy,
    "symplecticity": suite_symplectic,
    "tangent": suite_tangent,
    "reversibility": suite_reversibility,
    "generating-function": suite_generating_function,
    "equivariance": suite_equivariance,
    "twist": suite_twist,
    "solver": suite_solver,
    "autonomous": suite_autonomous,
}


def run_suites(ctx: VerifyContext, names=None) -> list[SuiteResult]:
    results = []
    for name in names or SUITES:
        if not admissible(ctx.params) and name not in ("model", "autonomous"):
            results.append(SuiteResult(name, False, math.nan, math.nan, "inadmissible parameters"))
            continue
        try:
            results.append(SUITES[name](ctx))
        except PendulumError as exc:
            results.append(SuiteResult(name, False, math.nan, math.nan, f"{type(exc).__name__}: {exc}"))
    return results
