"""``creepdam`` command-line interface."""
from __future__ import annotations

import argparse
import logging
import sys

from . import output
from .driver import Termination, lifetime_sweep, worker_count
from .errors import ConfigError, CreepDamError
from .geometry import notched_rect_mesh, structured_rect_mesh, write_mesh
from .scenario import BUILTIN, SWEEP_ALIASES, Scenario, ScenarioFactory

EXIT_OK = 0
EXIT_SOLVER = 1
EXIT_CONFIG = 2
EXIT_IO = 3

OK_TERMINATIONS = {Termination.REACHED_T.value, Termination.RUPTURE.value}


def _values(text: str) -> list:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("no values given")
    return vals


def cmd_run(args) -> int:
    scenario = Scenario.load(args.config)
    problem = scenario.to_problem()
    every = scenario.snapshot_every
    snapshots = [(0, None)]      # (index, state); None means the initial state

    def observe(state, report):
        count = observe.count = observe.count + 1
        if count % every == 0:
            snapshots.append((count, state))
    observe.count = 0

    result = problem.run(observer=observe)
    if snapshots[-1][0] != len(result.steps):
        snapshots.append((len(result.steps), result.final_state))
    with output.StagedOutput(args.output, stale=("field_*.vtk",)) as out:
        out.write("timeseries.csv", output.timeseries_text(result))
        for k, (_, state) in enumerate(snapshots):
            state = result.initial_state if state is None else state
            out.write(f"field_{k:04d}.vtk", output.vtk_text(problem.mesh, problem.params, state,
                                                           scenario.name))
        out.write("summary.txt", output.summary_text(scenario.name, result))
    t_star = "none" if result.t_star is None else f"{result.t_star:.6g}"
    print(f"{scenario.name}: {result.termination.value} at t={result.t_final:.6g} "
          f"(t*={t_star}, {len(result.steps)} steps) -> {args.output}")
    if result.termination.value not in OK_TERMINATIONS:
        print(f"error: {result.message or result.termination.value}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def cmd_sweep(args) -> int:
    scenario = Scenario.load(args.config)
    key = SWEEP_ALIASES.get(args.param, args.param)
    for v in args.values:          # validate every value before any run starts
        scenario.with_value(key, v)
    rows = lifetime_sweep(ScenarioFactory(scenario, key), args.values, worker_count())
    with output.StagedOutput(args.output, stale=()) as out:
        out.write("sweep.csv", output.sweep_text(rows))
        for row in rows:
            out.write(f"{args.param}_{row.value:g}/summary.txt",
                      output.sweep_row_summary(scenario.name, args.param, row))
    for row in rows:
        status = row.termination if row.error is None else f"Error ({row.error})"
        print(f"{args.param}={row.value:g}: t*={row.t_star:.6g} {status}")
    failed = [r for r in rows if r.error is not None or r.termination not in OK_TERMINATIONS]
    return EXIT_SOLVER if failed else EXIT_OK


def cmd_mesh(args) -> int:
    if args.kind == "rect":
        mesh = structured_rect_mesh(args.width, args.height, args.nx, args.ny)
    else:
        mesh = notched_rect_mesh(args.width, args.height, args.depth, args.angle, args.nx, args.ny)
    write_mesh(mesh, args.output)
    print(f"{args.kind} mesh: {mesh.n_nodes} nodes, {mesh.n_elements} triangles -> {args.output}")
    return EXIT_OK


def cmd_show(args) -> int:
    if args.name is None:
        print("\n".join(sorted(BUILTIN)))
        return EXIT_OK
    if args.name not in BUILTIN:
        raise ConfigError(f"{args.name}: no such built-in scenario ({', '.join(sorted(BUILTIN))})")
    sys.stdout.write(BUILTIN[args.name].lstrip("\n"))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="creepdam",
                                 description="Creep damage simulation on triangular meshes.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one scenario")
    p.add_argument("config", help="config file or built-in scenario name")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="lifetime sweep over one parameter")
    p.add_argument("config", help="config file or built-in scenario name")
    p.add_argument("--param", required=True,
                   help="h, nx (alias mesh_size) or any section.key")
    p.add_argument("--values", required=True, type=_values, help="comma-separated values")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("mesh", help="generate a mesh file")
    p.add_argument("kind", choices=("rect", "notch"))
    p.add_argument("--width", type=float, default=2.0)
    p.add_argument("--height", type=float, default=1.0)
    p.add_argument("--nx", type=int, default=16)
    p.add_argument("--ny", type=int, default=8)
    p.add_argument("--depth", type=float, default=0.3, help="notch depth")
    p.add_argument("--angle", type=float, default=60.0, help="notch opening angle in degrees")
    p.add_argument("-o", "--output", required=True, help="mesh file to write")
    p.set_defaults(func=cmd_mesh)

    p = sub.add_parser("show", help="print a built-in scenario config")
    p.add_argument("name", nargs="?")
    p.set_defaults(func=cmd_show)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except CreepDamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
