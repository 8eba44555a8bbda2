"""Command-line front end.

Subcommands:
  exponents classify|theta|bootstrap|endgame|region   exact queries
  simulate CONFIG                                     run a solve, write snapshots
  ledger TRAJ_DIR                                     balance reports and probes

Exponents cross this boundary as exact fraction strings ("9/5", "inf"),
never decimals.  Exit codes: 0 success, 1 numerical failure (NaN/CFL),
2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from .exponents import (
    Exponent,
    ExponentRangeError,
    MixedNormSpace,
    ShinbrotRegimeError,
    bootstrap_trace,
    classify,
    proof_case_theta,
    region_csv_lines,
    region_diagram,
    shinbrot_endgame,
)
from .ledger import criterion_report, flux_splitting, oseen_regularity_probe
from .solver import (
    CFLError,
    InitialCondition,
    NumericalError,
    SolverConfig,
    SolverError,
    read_trajectory,
    solve,
    write_trajectory,
)
from .snapshots import SnapshotFormatError


class ConfigError(ValueError):
    pass


def _reject_unknown(section: dict, allowed: set, where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(unknown))}")


def _parse_initial(section: dict) -> InitialCondition:
    _reject_unknown(section, {"kind", "amplitude", "sigma", "seed", "path"},
                    "solver.initial")
    try:
        return InitialCondition(**section)
    except (SolverError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def _parse_solver(section: dict) -> SolverConfig:
    allowed = {"n", "dt", "t_end", "viscosity", "initial", "snapshot_stride", "mode"}
    _reject_unknown(section, allowed, "solver")
    kwargs = dict(section)
    if "initial" in kwargs:
        kwargs["initial"] = _parse_initial(kwargs["initial"])
    try:
        config = SolverConfig(**kwargs)
        config.validate()
    except (SolverError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return config


def _parse_norm_triples(items) -> list[tuple[str, str, int]]:
    out = []
    for item in items:
        if len(item) != 3:
            raise ConfigError(f"norm triple must be [r, q, k], got {item}")
        r, q, k = item
        try:
            Exponent(str(r))
            Exponent(str(q))
        except (ExponentRangeError, ValueError) as exc:
            raise ConfigError(f"bad exponent in norm triple {item}: {exc}") from exc
        if k not in (0, 1):
            raise ConfigError(f"derivative order must be 0 or 1 in {item}")
        out.append((str(r), str(q), int(k)))
    return out


def load_experiment_config(path: Path) -> dict:
    """Parse and validate the experiment configuration document."""
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")
    if not isinstance(doc, dict):
        raise ConfigError("config root must be an object")
    _reject_unknown(doc, {"solver", "ledger", "output"}, "config")
    if "solver" not in doc:
        raise ConfigError("config needs a solver section")
    out = {"solver": _parse_solver(doc["solver"])}
    ledger_section = doc.get("ledger", {})
    _reject_unknown(ledger_section, {"norms", "mollify_eps"}, "ledger")
    out["norms"] = (_parse_norm_triples(ledger_section["norms"])
                    if "norms" in ledger_section else None)
    out["mollify_eps"] = [float(e) for e in ledger_section.get("mollify_eps", [])]
    output_section = doc.get("output", {})
    _reject_unknown(output_section, {"directory", "formats"}, "output")
    out["directory"] = output_section.get("directory", "out")
    formats = output_section.get("formats", ["csv", "json"])
    bad = set(formats) - {"csv", "json"}
    if bad:
        raise ConfigError(f"unknown output format(s): {', '.join(sorted(bad))}")
    out["formats"] = formats
    return out


def _parse_exponent(text: str) -> Exponent:
    try:
        return Exponent.parse(text)
    except (ExponentRangeError, ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"malformed exponent {text!r}: {exc}") from exc


def _print_check(name: str, check) -> None:
    if check is None:
        return
    state = "satisfied" if check.satisfied else "violated"
    margin = "n/a" if check.margin is None else str(check.margin)
    print(f"  {name:<20} {state:<10} margin {margin}")


def cmd_exponents(args) -> int:
    if args.query == "classify":
        r = _parse_exponent(args.r)
        s = _parse_exponent(args.s)
        space = MixedNormSpace(r, s, 1 if args.grad else 0)
        v = classify(space)
        print(f"space {space}")
        if args.grad:
            case = v.gradient_ranges_case or "none"
            print(f"  gradient-ranges case ({case})"
                  f" {'satisfied' if v.gradient_ranges.satisfied else 'violated'}"
                  f" margin {v.gradient_ranges.margin}")
            _print_check("gradient-regularity", v.gradient_regularity)
            emb = v.embedded_velocity
            print(f"embedded velocity space {emb.space}")
            _print_check("serrin", emb.serrin)
            _print_check("shinbrot", emb.shinbrot)
            _print_check("leray-hopf", emb.leray_hopf)
            _print_check("leslie-shvydkoy", emb.leslie_shvydkoy)
        else:
            _print_check("serrin", v.serrin)
            _print_check("shinbrot", v.shinbrot)
            _print_check("leray-hopf", v.leray_hopf)
            _print_check("leslie-shvydkoy", v.leslie_shvydkoy)
        return 0
    if args.query == "theta":
        q = _parse_exponent(args.q)
        theta = proof_case_theta(args.case, q)
        print(f"theta({args.case}, {q}) = {theta}")
        return 0
    if args.query == "bootstrap":
        r = _parse_exponent(args.r)
        s = _parse_exponent(args.s)
        trace = bootstrap_trace(r, s, max_steps=args.max_steps)
        print(f"transport (r, s) = ({r}, {s}), gamma = {trace.gamma}")
        print("n,alpha,beta,grad_time,grad_space")
        for i, (forcing, grad) in enumerate(
                zip(trace.forcing_seq, trace.gradient_seq[1:])):
            print(f"{i + 1},{forcing[0]},{forcing[1]},{grad[0]},{grad[1]}")
        print(f"stop: {trace.stop_reason}")
        return 0
    if args.query == "endgame":
        s = _parse_exponent(args.s)
        eg = shinbrot_endgame(s)
        blend = "exact arrival" if eg.even_arrival else f"theta={eg.theta}"
        print(f"N={eg.steps} {blend} "
              f"target L^{eg.target.time_exp}(L^{eg.target.space_exp})")
        return 0
    # region
    rows = region_diagram(args.nq, args.np)
    lines = region_csv_lines(rows)
    if args.out:
        Path(args.out).write_text("\n".join(lines) + "\n")
        print(f"wrote {len(rows)} rows to {args.out}")
    else:
        for line in lines:
            print(line)
    return 0


def _simpson_total(values: np.ndarray, dt: float) -> float:
    """Composite Simpson over the whole series (trapezoid tail if odd)."""
    n = len(values) - 1
    if n < 2:
        return float(np.sum(values) * dt / 2 * n)
    m = n if n % 2 == 0 else n - 1
    total = float(
        dt / 3.0 * (values[0] + values[m]
                    + 4.0 * np.sum(values[1:m:2]) + 2.0 * np.sum(values[2:m - 1:2]))
    )
    if m != n:
        total += 0.5 * dt * float(values[-2] + values[-1])
    return total


def cmd_simulate(args) -> int:
    cfg = load_experiment_config(Path(args.config))
    solver_cfg: SolverConfig = cfg["solver"]
    if args.seed is not None:
        if solver_cfg.initial.kind != "rough":
            raise ConfigError("--seed only applies to rough initial data")
        solver_cfg.initial = InitialCondition(
            "rough", amplitude=solver_cfg.initial.amplitude,
            sigma=solver_cfg.initial.sigma, seed=args.seed,
        )
    outdir = Path(args.out or cfg["directory"])
    outdir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    traj = solve(solver_cfg)
    wall = time.perf_counter() - t0
    paths = write_trajectory(outdir, traj)
    series = traj.series
    diss = _simpson_total(solver_cfg.viscosity * series.enstrophy, solver_cfg.dt)
    e0 = series.energy[0]
    drift = abs(series.energy[-1] + diss - e0) / e0 if e0 > 0 else 0.0
    manifest = {
        "config": solver_cfg.to_dict(),
        "config_hash": solver_cfg.config_hash(),
        "mode": solver_cfg.mode,
        "steps": solver_cfg.n_steps,
        "snapshot_count": len(paths),
        "energy_drift": drift,
        "wall_time_s": wall,
        "format": "NSEF v1",
    }
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(f"wrote {len(paths)} snapshots to {outdir} "
          f"(steps={solver_cfg.n_steps}, drift={drift:.3e}, wall={wall:.2f}s)")
    return 0


def cmd_ledger(args) -> int:
    traj_dir = Path(args.traj_dir)
    mode = "navier-stokes"
    manifest_path = traj_dir / "manifest.json"
    if manifest_path.exists():
        mode = json.loads(manifest_path.read_text()).get("mode", mode)
    traj = read_trajectory(traj_dir, mode=mode)
    norms = None
    if args.config:
        cfg = load_experiment_config(Path(args.config))
        norms = cfg["norms"]
    report = (criterion_report(traj, norms) if norms is not None
              else criterion_report(traj))
    outdir = Path(args.out or traj_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    aggregates = report.aggregates()
    if args.mollify:
        splits = []
        for eps in args.mollify.split(","):
            sp = flux_splitting(traj, float(eps))
            splits.append({
                "eps": sp.eps,
                "smoothing_term": sp.smoothing_term,
                "mollification_term": sp.mollification_term,
                "raw_term": sp.raw_term,
            })
        aggregates["flux_splitting"] = splits
    if args.oseen_probe:
        r, s = (_parse_exponent(x) for x in args.oseen_probe)
        try:
            probe = oseen_regularity_probe(traj, r, s, refine=args.refine)
        except ShinbrotRegimeError as exc:
            raise ConfigError(str(exc)) from exc
        for line in probe.table_lines():
            print(line)
        for w in probe.warnings:
            print(f"warning: {w}", file=sys.stderr)
        aggregates["oseen_probe"] = {
            "transport_pair": [str(r), str(s)],
            "gamma": str(probe.gamma),
            "rows": [
                {
                    "n": row.index,
                    "alpha": str(row.alpha),
                    "beta": str(row.beta),
                    "advective_norm": row.advective_norm,
                    "pressure_norm": row.pressure_norm,
                    "closed_form_match": row.closed_form_match,
                    "refined_advective": row.refined_advective,
                    "refined_pressure": row.refined_pressure,
                    "stable": row.stable,
                }
                for row in probe.rows
            ],
            "warnings": probe.warnings,
        }
    report.write_csv(outdir / "report.csv")
    (outdir / "aggregates.json").write_text(
        json.dumps(aggregates, indent=2, sort_keys=True) + "\n")
    print(f"wrote {outdir / 'report.csv'} and {outdir / 'aggregates.json'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nsenergy",
        description="Energy-balance laboratory for periodic incompressible flow",
    )
    parser.add_argument("--threads", type=int, default=1,
                        help="accepted for compatibility; results never depend on it")
    sub = parser.add_subparsers(dest="command", required=True)

    exp = sub.add_parser("exponents", help="exact exponent queries")
    expsub = exp.add_subparsers(dest="query", required=True)
    c = expsub.add_parser("classify", help="criterion verdicts for a space")
    c.add_argument("--grad", action="store_true",
                   help="classify a gradient space L^p(W^1,q)")
    c.add_argument("r")
    c.add_argument("s")
    t = expsub.add_parser("theta", help="interpolation weight for a case")
    t.add_argument("case", choices=["i", "ii1", "ii2", "iii"])
    t.add_argument("q")
    b = expsub.add_parser("bootstrap", help="regularity-exchange trace")
    b.add_argument("r")
    b.add_argument("s")
    b.add_argument("--max-steps", type=int, default=64)
    e = expsub.add_parser("endgame", help="stopping index, blend and target")
    e.add_argument("s")
    g = expsub.add_parser("region", help="criterion region diagram CSV")
    g.add_argument("--nq", type=int, default=200)
    g.add_argument("--np", type=int, default=200)
    g.add_argument("--out")

    sim = sub.add_parser("simulate", help="run a configured solve")
    sim.add_argument("config")
    sim.add_argument("--out", help="override output directory")
    sim.add_argument("--seed", type=int, help="override rough-field seed")

    led = sub.add_parser("ledger", help="energy-budget reports for a trajectory")
    led.add_argument("traj_dir")
    led.add_argument("--config", help="experiment config providing norm triples")
    led.add_argument("--mollify", help="comma-separated mollifier widths")
    led.add_argument("--oseen-probe", nargs=2, metavar=("R", "S"),
                     help="probe transport regularity for the declared pair")
    led.add_argument("--refine", action="store_true",
                     help="re-measure the probe at doubled resolution")
    led.add_argument("--out", help="override report directory")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "exponents":
            return cmd_exponents(args)
        if args.command == "simulate":
            return cmd_simulate(args)
        return cmd_ledger(args)
    except (NumericalError, CFLError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, ExponentRangeError, ShinbrotRegimeError, SolverError,
            SnapshotFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
