"""Command line front end.

Subcommands: crystal, gate, sweep, reproduce, oracle. Gate times are given
in units of the trap period; detunings in units of the trap frequency; ion
labels are 1-based.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from iongate.crystal import Crystal
from iongate.gate import GatePair, build_model
from iongate.optimize import exact_null, neighbor_moving_set, refine, surrogate_optimize
from iongate.oracle import OracleConfig, thermal_fidelity
from iongate.pulses import PulseSchedule
from iongate.scan import TAU0, SweepSpec, reproduce, sweep, write_records_csv


def _parse_pair(text: str) -> GatePair:
    try:
        i, j = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("pair must look like I,J") from None
    return GatePair(i, j)


def _parse_scope(text: str) -> int | None:
    if text == "full":
        return None
    if text.startswith("n="):
        return int(text[2:])
    raise argparse.ArgumentTypeError("scope must be 'full' or 'n=<k>'")


def _emit(payload: dict, path: str | None) -> None:
    text = json.dumps(payload, indent=2)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _cmd_crystal(args) -> int:
    crystal = Crystal.build(args.ions)
    _emit(crystal.to_json_dict(), args.json)
    return 0


def _cmd_gate(args) -> int:
    crystal = Crystal.build(args.ions)
    moving = (
        None
        if args.scope is None
        else neighbor_moving_set(args.pair, args.scope, args.ions)
    )
    model = build_model(
        crystal, args.pair, args.tau * TAU0, args.mu, args.segments, args.nbar, moving
    )
    if args.optimize:
        result = surrogate_optimize(model)
        if args.refine:
            result = refine(result, model)
        _emit(result.to_json_dict(), args.json)
    else:
        outcome = model.outcome(np.ones(args.segments), normalize=True)
        _emit(outcome.to_json_dict(), args.json)
    return 0


def _cmd_sweep(args) -> int:
    base = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            base = json.load(fh)
    pair = args.pair
    if pair is None and base.get("pair"):
        pair = GatePair(*base["pair"])
    merged = {
        "n_ions": args.ions if args.ions is not None else base.get("n_ions"),
        "pair": pair,
        "tau_list": tuple(args.tau) if args.tau else tuple(base.get("tau_list", ())),
        "mu_min": args.mu_min if args.mu_min is not None else base.get("mu_min"),
        "mu_max": args.mu_max if args.mu_max is not None else base.get("mu_max"),
        "points": args.points if args.points is not None else base.get("points"),
        "segments": args.segments
        if args.segments is not None
        else base.get("segments", 1),
        "nbar": args.nbar if args.nbar is not None else base.get("nbar", 0.0),
        "scope": args.scope if args.scope is not None else base.get("scope"),
        "refine": args.refine or bool(base.get("refine", False)),
    }
    missing = [k for k, v in merged.items() if v is None and k != "scope"]
    if missing:
        print(f"sweep: missing required settings: {', '.join(missing)}", file=sys.stderr)
        return 2
    spec = SweepSpec(**merged)
    records = sweep(spec, workers=args.workers)
    write_records_csv(records, args.csv)
    return 0


def _cmd_reproduce(args) -> int:
    paths = reproduce(args.figure, args.out, workers=args.workers)
    for p in paths:
        print(p)
    return 0


def _cmd_oracle(args) -> int:
    crystal = Crystal.build(args.ions)
    pair = args.pair or GatePair(args.ions // 2, args.ions // 2 + 1)
    model = build_model(
        crystal, pair, args.tau * TAU0, args.mu, args.segments, args.nbar
    )
    if args.segments == 2 * model.modes.n_modes + 1:
        amps = exact_null(model)
    else:
        amps = np.ones(args.segments)
    amps = model.outcome(amps, normalize=True).amps
    config = OracleConfig(
        n_ions=args.ions,
        schedule=PulseSchedule(args.tau * TAU0, args.mu, amps),
        pair=pair,
        nbar=args.nbar,
        fock_cutoff=args.cutoff,
    )
    report = thermal_fidelity(config, crystal)
    _emit(report.to_json_dict(), args.json)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="iongate",
        description="Conditional-phase gate design in long linear ion crystals",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("crystal", help="solve a chain and emit it as JSON")
    p.add_argument("--ions", type=int, required=True)
    p.add_argument("--json", default=None, help="output path (stdout if omitted)")
    p.set_defaults(func=_cmd_crystal)

    p = sub.add_parser("gate", help="evaluate or optimize one gate point")
    p.add_argument("--ions", type=int, required=True)
    p.add_argument("--pair", type=_parse_pair, required=True, help="I,J (1-based)")
    p.add_argument("--tau", type=float, required=True, help="gate time / trap period")
    p.add_argument("--mu", type=float, required=True, help="detuning / trap frequency")
    p.add_argument("--segments", type=int, default=1)
    p.add_argument("--optimize", action="store_true")
    p.add_argument("--refine", action="store_true")
    p.add_argument("--scope", type=_parse_scope, default=None, help="full or n=<k>")
    p.add_argument("--nbar", type=float, default=0.0)
    p.add_argument("--json", default=None)
    p.set_defaults(func=_cmd_gate)

    p = sub.add_parser("sweep", help="detuning sweep to CSV")
    p.add_argument("--ions", type=int, default=None)
    p.add_argument("--pair", type=_parse_pair, default=None)
    p.add_argument("--tau", type=float, nargs="+", default=None, help="in trap periods")
    p.add_argument("--mu-min", type=float, default=None)
    p.add_argument("--mu-max", type=float, default=None)
    p.add_argument("--points", type=int, default=None)
    p.add_argument("--segments", type=int, default=None)
    p.add_argument("--nbar", type=float, default=None)
    p.add_argument("--scope", type=_parse_scope, default=None)
    p.add_argument("--refine", action="store_true")
    p.add_argument("--config", default=None, help="JSON file mirroring the spec fields")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--csv", required=True)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("reproduce", help="write the canned figure/table CSVs")
    p.add_argument("figure", choices=["fig1", "fig2", "fig3", "tables", "n40", "all"])
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=_cmd_reproduce)

    p = sub.add_parser("oracle", help="brute-force fidelity check")
    p.add_argument("--ions", type=int, default=2)
    p.add_argument("--pair", type=_parse_pair, default=None)
    p.add_argument("--tau", type=float, required=True, help="in trap periods")
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--segments", type=int, default=1)
    p.add_argument("--nbar", type=float, default=0.0)
    p.add_argument("--cutoff", type=int, default=40)
    p.add_argument("--json", default=None)
    p.set_defaults(func=_cmd_oracle)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError) as err:
        # domain errors (phase-null schedules, degenerate constraint systems,
        # non-convergent solvers) exit cleanly; real bugs still raise
        print(f"iongate: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
