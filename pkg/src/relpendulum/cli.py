"""Command-line front end.

Every subcommand reads one JSON run configuration (``--config``) and writes
deterministic CSV / JSONL / JSON output.  Exit codes: 0 ok, 1 verify
failure, 2 inadmissible parameters, 3 convergence failure, 64 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import random
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import autonomous as aut
from .errors import (
    ConvergenceError,
    IntegrationError,
    ParameterError,
    PendulumError,
)
from .integrate import (
    IntegratorConfig,
    format_float,
    sample_trajectory,
    trajectory_csv,
)
from .model import ForcingSeries, PendulumParams, TWO_PI, admissible
from .poincare import (
    angle_grid,
    boundary_twist_report,
    default_region,
    poincare_map,
    strip_bound,
    twist_grid,
    twist_margin,
)
from .solver import SolverConfig, find_fixed_points
from .verify import SUITES, VerifyContext, run_suites

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_INADMISSIBLE = 2
EXIT_CONVERGENCE = 3
EXIT_USAGE = 64

DEFAULT_PARAMS = {"a": 0.2, "T": TWO_PI, "N": 0, "forcing": {"cos": [0.1], "sin": []}}

SECTION_DEFAULTS = {
    "simulate": {"q0": 0.0, "p0": 0.0, "t0": 0.0, "t1": None, "n_samples": 201},
    "poincare_grid": {"n_q": 8, "n_p": 8, "iterations": 200, "p_range": None},
    "twist_map": {"n_grid": 32, "region": None, "boundary_grid": 64, "grid_csv": None},
    "autonomous": {"N": 1, "n_levels": 50, "n_running": 50, "E_span": 10.0},
    "sweep": {"cases": [], "jobs": 1, "seed": None},
    "verify": {"suites": None, "assert_twist": False, "seed": 0},
}


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    params: PendulumParams
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    output: Optional[str] = None
    sections: dict = field(default_factory=dict)

    def section(self, name: str) -> dict:
        merged = dict(SECTION_DEFAULTS[name])
        merged.update(self.sections.get(name, {}))
        return merged

    @classmethod
    def from_dict(cls, data: dict) -> RunConfig:
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        allowed = {"params", "integrator", "solver", "output", *SECTION_DEFAULTS}
        unknown = set(data) - allowed
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        sections = {}
        for name in SECTION_DEFAULTS:
            sec = data.get(name, {})
            if not isinstance(sec, dict):
                raise ConfigError(f"section {name!r} must be an object")
            bad = set(sec) - set(SECTION_DEFAULTS[name])
            if bad:
                raise ConfigError(f"unknown keys in {name!r}: {sorted(bad)}")
            sections[name] = sec
        try:
            params = PendulumParams.from_dict(data.get("params", DEFAULT_PARAMS))
            integrator = IntegratorConfig.from_dict(data.get("integrator", {}))
            solver = SolverConfig.from_dict(data.get("solver", {}))
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc
        return cls(params, integrator, solver, data.get("output"), sections)

    @classmethod
    def load(cls, path: Optional[str]) -> RunConfig:
        if path is None:
            return cls.from_dict({})
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data)


def write_output(path: Optional[str], text: str) -> None:
    """Write ``text`` atomically to ``path`` (temp file + rename), or to stdout."""
    if path is None:
        sys.stdout.write(text)
        return
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_float(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _require_admissible(params):
    if not admissible(params):
        print(f"inadmissible: |2 N pi / T| = {abs(params.K):.6g} >= 1", file=sys.stderr)
        return False
    return True


def cmd_check(cfg: RunConfig, out) -> int:
    p = cfg.params
    K = p.K
    if not admissible(p):
        print(f"inadmissible: |2 N pi / T| = {abs(K):.6g} >= 1 (N={p.N}, T={p.T:.6g})", file=out)
        return EXIT_INADMISSIBLE
    thr = p.twist_threshold
    if p.a < thr:
        twist = f"a < pi^2/T^2 ({p.a:.6g} < {thr:.6g}): twist regime"
    elif p.a == thr:
        twist = (f"a = pi^2/T^2 ({p.a:.6g}): twist holds unless f is a sin({K:.6g} t)")
    else:
        twist = f"a > pi^2/T^2 ({p.a:.6g} > {thr:.6g}): twist not guaranteed"
    b = strip_bound(p, cfg.solver.margin)
    print(f"admissible; {twist}", file=out)
    print(f"|2 N pi / T| = {abs(K):.6g} < 1", file=out)
    print(f"strip bound: p_hat = {b.p_hat:.17g}, p_tilde = {b.p_tilde:.17g}", file=out)
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, out) -> int:
    s = cfg.section("simulate")
    p = cfg.params
    t1 = p.T if s["t1"] is None else s["t1"]
    rows = sample_trajectory(p, (s["q0"], s["p0"]), s["t0"], t1, int(s["n_samples"]), cfg.integrator)
    write_output(cfg.output, trajectory_csv(rows))
    return EXIT_OK


def cmd_poincare_grid(cfg: RunConfig, out) -> int:
    p = cfg.params
    if not _require_admissible(p):
        return EXIT_INADMISSIBLE
    s = cfg.section("poincare_grid")
    lo, hi = default_region(p) if s["p_range"] is None else s["p_range"]
    rows = []
    k = 0
    for q0 in angle_grid(int(s["n_q"])):
        for p0 in np.linspace(lo, hi, int(s["n_p"])):
            z = (float(q0), float(p0))
            for it in range(int(s["iterations"]) + 1):
                rows.append((k, it, z[0], z[1], z[0] % TWO_PI))
                z = poincare_map(p, z, cfg.integrator)
            k += 1
    write_output(cfg.output, _csv(("orbit", "iteration", "q", "p", "q_mod"), rows))
    return EXIT_OK


def cmd_find_periodic(cfg: RunConfig, out) -> int:
    p = cfg.params
    if not _require_admissible(p):
        return EXIT_INADMISSIBLE
    res = find_fixed_points(p, cfg.integrator, cfg.solver)
    if res.no_twist_fallback:
        print("warning: twist reduction failed; multi-start Newton result is not "
              "guaranteed complete", file=sys.stderr)
    write_output(cfg.output, res.jsonl())
    return EXIT_OK


def cmd_twist_map(cfg: RunConfig, out) -> int:
    p = cfg.params
    if not _require_admissible(p):
        return EXIT_INADMISSIBLE
    s = cfg.section("twist_map")
    lo, hi = default_region(p) if s["region"] is None else s["region"]
    n = int(s["n_grid"])
    qs, ps, vals = twist_grid(p, (lo, hi), n, cfg.integrator)
    report = {
        "min_twist": float(vals.min()),
        "grid": [n, n],
        "region": [lo, hi],
        "params_hash": p.params_hash(),
    }
    try:
        report["boundary"] = boundary_twist_report(p, strip_bound(p, cfg.solver.margin),
                                                   int(s["boundary_grid"]), cfg.integrator)
    except PendulumError as exc:
        report["boundary"] = {"error": str(exc)}
    if s["grid_csv"]:
        rows = [(float(q), float(pp), float(vals[i, j]))
                for i, q in enumerate(qs) for j, pp in enumerate(ps)]
        write_output(s["grid_csv"], _csv(("q", "p", "dQ_dp0"), rows))
    write_output(cfg.output, json.dumps(report, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_autonomous(cfg: RunConfig, out) -> int:
    s = cfg.section("autonomous")
    a = cfg.params.a
    N = int(s["N"])
    rows = []
    if a > 0:
        rows.append((1.0, aut.EnergyClass.CENTER.value, TWO_PI / math.sqrt(a)))
        for E in aut.libration_energies(a, int(s["n_levels"])):
            rows.append((float(E), aut.EnergyClass.LIBRATION.value,
                         aut.libration_period(a, float(E), cfg.integrator)))
        rows.append((1.0 + 2.0 * a, aut.EnergyClass.SEPARATRIX.value, math.inf))
    sep = 1.0 + 2.0 * a
    for dE in np.geomspace(1e-3, float(s["E_span"]), int(s["n_running"])):
        E = sep + float(dE)
        rows.append((E, aut.EnergyClass.RUNNING.value, aut.running_time(a, E, N)))
    write_output(cfg.output, _csv(("E", "class", "period_or_TN"), rows))
    return EXIT_OK


SWEEP_HEADER = ("a", "T", "N", "forcing_scale", "admissible", "status", "n_orbits",
                "degenerate", "n_unstable", "index_sum", "max_residual", "min_twist",
                "max_abs_Phi", "no_twist_fallback")


def _sweep_case(args):
    (a, T, N, scale), base_forcing, integrator, solver = args
    row = {"a": float(a), "T": float(T), "N": int(N), "forcing_scale": float(scale)}
    params = PendulumParams(a, T, N, base_forcing.scaled(scale))
    if not admissible(params):
        return {**row, "admissible": 0, "status": "inadmissible"}
    row["admissible"] = 1
    try:
        res = find_fixed_points(params, integrator, solver)
    except (ConvergenceError, IntegrationError) as exc:
        return {**row, "status": f"failed: {type(exc).__name__}"}
    row.update(
        status="ok",
        n_orbits=len(res.orbits),
        degenerate=int(res.degenerate),
        n_unstable=sum(o.unstable for o in res.orbits),
        index_sum=sum(o.index or 0 for o in res.orbits),
        max_residual=max((o.residual for o in res.orbits), default=0.0),
        min_twist=twist_margin(params, None, 16, integrator),
        max_abs_Phi=res.max_abs_Phi,
        no_twist_fallback=int(res.no_twist_fallback),
    )
    return row


def cmd_sweep(cfg: RunConfig, out, jobs: Optional[int] = None, seed: Optional[int] = None) -> int:
    s = cfg.section("sweep")
    cases = [tuple(c) for c in s["cases"]]
    if any(len(c) != 4 for c in cases):
        raise ConfigError("sweep cases must be [a, T, N, forcing_scale] tuples")
    forcing = cfg.params.forcing
    if forcing.is_zero:
        forcing = ForcingSeries((1.0,))
    order = list(cases)
    seed = s["seed"] if seed is None else seed
    if seed is not None:
        random.Random(seed).shuffle(order)
    tasks = [(c, forcing, cfg.integrator, cfg.solver) for c in order]
    jobs = int(s["jobs"] if jobs is None else jobs)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(_sweep_case, tasks))
    else:
        rows = [_sweep_case(t) for t in tasks]
    rows.sort(key=lambda r: (r["a"], r["T"], r["N"], r["forcing_scale"]))
    table = [tuple(r.get(k, "") for k in SWEEP_HEADER) for r in rows]
    write_output(cfg.output, _csv(SWEEP_HEADER, table))
    failed = any(r["status"].startswith("failed") for r in rows)
    return EXIT_CONVERGENCE if failed else EXIT_OK


def cmd_verify(cfg: RunConfig, out) -> int:
    s = cfg.section("verify")
    names = s["suites"]
    if names is not None:
        unknown = set(names) - set(SUITES)
        if unknown:
            raise ConfigError(f"unknown verify suites: {sorted(unknown)}")
    ctx = VerifyContext(cfg.params, cfg.integrator, cfg.solver, bool(s["assert_twist"]), int(s["seed"]))
    results = run_suites(ctx, names)
    for r in results:
        print(r.line(), file=out)
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"FAILED: {', '.join(failed)}", file=out)
        return EXIT_VERIFY
    print(f"all {len(results)} suites passed", file=out)
    return EXIT_OK


COMMANDS = {
    "check": cmd_check,
    "simulate": cmd_simulate,
    "poincare-grid": cmd_poincare_grid,
    "find-periodic": cmd_find_periodic,
    "twist-map": cmd_twist_map,
    "autonomous": cmd_autonomous,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="relpendulum", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--out", help="output path (overrides the config)")
        if name == "sweep":
            sp.add_argument("--jobs", type=int, help="parallel worker processes")
            sp.add_argument("--seed", type=int, help="shuffle evaluation order")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig.load(args.config)
        if args.out:
            cfg.output = args.out
        if args.command == "sweep":
            return cmd_sweep(cfg, sys.stdout, args.jobs, args.seed)
        return COMMANDS[args.command](cfg, sys.stdout)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParameterError as exc:
        print(f"parameter error: {exc}", file=sys.stderr)
        return EXIT_INADMISSIBLE if "inadmissible" in str(exc) else EXIT_USAGE
    except (ConvergenceError, IntegrationError) as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except PendulumError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
