"""Command-line front end: ``sandpile-lab <subcommand> [flags]``.

Exit status is 0 when every check passes, 1 when any check fails and 2 on
usage errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import electro, harness, sandpile
from .grid import GridShape, parse_vertex
from .reports import fit_to_csv, jsonable
from .rng import generator

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _vertex(text: str):
    try:
        return parse_vertex(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _single_n(args) -> int:
    if len(args.n) != 1:
        raise ValueError("this subcommand takes a single --n")
    return args.n[0]


def _shape(args) -> GridShape:
    return GridShape(_single_n(args), args.d)


def cmd_simulate(args) -> int:
    shape = _shape(args)
    if args.random_fill:
        rng = generator(args.seed, 0, 0)
        config = harness.random_config(shape, rng)
    else:
        config = sandpile.new_config(shape)
    site = args.site or shape.corner()
    if args.grains:
        config = config.with_grains(site, args.grains)
    stable, odo = sandpile.stabilize(config)
    data = {
        "n": shape.n,
        "d": shape.d,
        "site": list(shape.check(site)),
        "grains_added": args.grains,
        "grains_in": config.total(),
        "grains_left": stable.total(),
        "to_sink": odo.to_sink(),
        "total_topplings": odo.total(),
        "recurrent": sandpile.burning_test(stable),
    }
    if shape.size <= 4096:
        data["config"] = stable.grains.tolist()
    _emit(json.dumps(data, sort_keys=True), args.out)
    return EXIT_OK


def cmd_drive(args) -> int:
    shape = _shape(args)
    report = sandpile.drive_to_recurrence(shape, args.site)
    _emit(report.to_json(sort_keys=True), args.out)
    return EXIT_OK


def cmd_tcl_exact(args) -> int:
    shape = _shape(args)
    tcl = sandpile.tcl_exact(shape)
    _emit(json.dumps({"n": shape.n, "d": shape.d, "tcl": tcl}, sort_keys=True), args.out)
    return EXIT_OK


def cmd_potentials(args) -> int:
    shape = _shape(args)
    source = args.site or shape.far_corner()
    field = electro.potentials(shape, source, args.backend)
    resid = field.harmonic_residual()
    ok = resid == 0 if args.backend == "exact" else resid < 1e-10
    data = {
        "n": shape.n,
        "d": shape.d,
        "source": list(field.source),
        "backend": args.backend,
        "harmonic_residual": resid,
        "solver_residual": field.residual,
        "iterations": field.iterations,
        "values": [jsonable(v) for v in field.values.tolist()],
    }
    _emit(json.dumps(jsonable(data), sort_keys=True), args.out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_resistance(args) -> int:
    shape = _shape(args)
    u = args.site or shape.corner()
    r = electro.effective_resistance(shape, u, args.backend)
    data = {"n": shape.n, "d": shape.d, "u": list(shape.check(u)), "backend": args.backend, "r_eff": r}
    _emit(json.dumps(jsonable(data), sort_keys=True), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    suites = harness.SUITES if args.suite == "all" else (args.suite,)
    ok = True
    reports = []
    for name in suites:
        cfg = harness.SuiteConfig(
            suite=name, ns=tuple(args.n), d=args.d, seed=args.seed, backend=args.backend, out=args.out, jobs=args.jobs
        )
        report = harness.run_suite(cfg)
        reports.append(report)
        ok &= report.passed
        print(harness.summary_line(report), file=sys.stderr)
        for line in report.failures()[:20]:
            print("  FAIL " + line, file=sys.stderr)
    if args.out and args.out.endswith(".csv"):
        text = "".join(r.to_csv() if i == 0 else r.to_csv().split("\n", 1)[1] for i, r in enumerate(reports))
    elif len(reports) == 1:
        text = reports[0].to_json()
    else:
        text = json.dumps([r.to_dict() for r in reports], indent=1, sort_keys=True)
    _emit(text, args.out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_fit(args) -> int:
    ns = args.n or list(harness.DEFAULT_NS["scaling"])
    result = harness.fit_quantity(args.quantity, ns, args.d)
    if args.out and args.out.endswith(".csv"):
        text = fit_to_csv(result)
    else:
        text = json.dumps(jsonable(result.to_dict()), indent=1, sort_keys=True)
    _emit(text, args.out)
    print(f"{result.quantity}: slope={result.slope:.4f} r2={result.r2:.5f} expected={result.expected}"
          f"+-{result.tolerance} {'PASS' if result.passed else 'FAIL'}", file=sys.stderr)
    return EXIT_OK if result.passed else EXIT_FAIL


def cmd_render(args) -> int:
    shape = GridShape(_single_n(args), 2)
    site = args.site or shape.corner()
    out = args.out or "frames"
    paths, odos = sandpile.render_frames(shape, site, args.checkpoints, out)
    supports = [int(o.support().sum()) for o in odos]
    monotone = all(np.all(a.support() <= b.support()) for a, b in zip(odos, odos[1:]))
    data = {"frames": [str(p) for p in paths], "odometer_support": supports, "support_monotone": monotone}
    print(json.dumps(data, sort_keys=True))
    return EXIT_OK if monotone else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=_int_list, default=[], help="side length(s), comma separated")
    common.add_argument("--d", type=int, default=2, help="dimension")
    common.add_argument("--site", type=_vertex, default=None, help="1-based vertex r,c[,...]")
    common.add_argument("--seed", type=int, default=7)
    common.add_argument("--backend", choices=electro.BACKENDS, default="float")
    common.add_argument("--trials", type=int, default=100_000)
    common.add_argument("--out", default=None, help="output file (default stdout)")
    common.add_argument("--jobs", type=int, default=1)

    parser = argparse.ArgumentParser(prog="sandpile-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="add grains and stabilize once")
    p.add_argument("--grains", type=int, default=0)
    p.add_argument("--random-fill", action="store_true", help="start from a seeded random configuration")
    p.set_defaults(func=cmd_simulate)

    sub.add_parser("drive", parents=[common], help="grains at one site until recurrent").set_defaults(func=cmd_drive)
    sub.add_parser("tcl-exact", parents=[common], help="exhaustive transience class").set_defaults(func=cmd_tcl_exact)
    sub.add_parser("potentials", parents=[common], help="potential field of a source").set_defaults(
        func=cmd_potentials
    )
    sub.add_parser("resistance", parents=[common], help="effective resistance to the sink").set_defaults(
        func=cmd_resistance
    )

    p = sub.add_parser("verify", parents=[common], help="run a verification suite")
    p.add_argument("--suite", choices=harness.SUITES + ("all",), required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("fit", parents=[common], help="log-log scaling fit")
    p.add_argument("--quantity", choices=harness.FIT_QUANTITIES, required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("render", parents=[common], help="write PPM frames while driving a corner")
    p.add_argument("--checkpoints", type=_int_list, required=True)
    p.set_defaults(func=cmd_render)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (ValueError, KeyError) as exc:
        print(f"sandpile-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
