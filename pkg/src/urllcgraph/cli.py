"""Command line entry point: run, sweep, validate, figure, schedule-dump."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .experiment import ALGORITHMS, CSV_COLUMNS, SWEEP_VARS, SweepSpec, evaluate, figure_tables, fmt, read_csv, \
    run_sweep, write_csv
from .params import ALIASES, SystemParams, dump_config, load_config, params_from_overrides
from .scenario import generate_scenario
from .validate import validate_reliability

log = logging.getLogger("urllcgraph")

_PARAM_FIELDS = [f.name for f in dataclasses.fields(SystemParams)]
_SYMBOL = {v: k for k, v in ALIASES.items() if k != "M_D"}


def _json_float(x):
    if isinstance(x, float):
        return None if math.isnan(x) else float(fmt(x))
    if isinstance(x, list):
        return [_json_float(v) for v in x]
    return x


def add_param_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("system parameters (override the config file)")
    g.add_argument("--config", type=Path, help="INI file with a [system] section")
    for name in _PARAM_FIELDS:
        g.add_argument(f"--{name.replace('_', '-')}", dest=name, default=None, metavar=_SYMBOL[name])


def params_from_args(args) -> SystemParams:
    overrides = {n: getattr(args, n) for n in _PARAM_FIELDS}
    if args.config is not None:
        return load_config(args.config, **overrides)
    return params_from_overrides(**overrides)


def add_scenario_flags(p: argparse.ArgumentParser):
    p.add_argument("-n", "--devices", type=int, default=140)
    p.add_argument("-c", "--channels", type=int, default=7)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fading", choices=("independent", "correlated"), default="independent")


def _scenario(args, params):
    return generate_scenario(args.devices, args.channels, params, args.seed, fading_mode=args.fading)


def _int_list(text: str) -> list[int]:
    """Comma list with optional ranges: '80:200:20,250'."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if ":" in part:
            bits = [int(x) for x in part.split(":")]
            lo, hi = bits[0], bits[1]
            step = bits[2] if len(bits) > 2 else 1
            out.extend(range(lo, hi + 1, step))
        elif part:
            out.append(int(part))
    return out


def cmd_run(args) -> int:
    params = params_from_args(args)
    scenario = _scenario(args, params)
    _, report = evaluate(args.algorithm, scenario)
    payload = {k: _json_float(v) for k, v in report.to_dict().items()}
    payload["seed"] = args.seed
    json.dump(payload, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0


def cmd_sweep(args) -> int:
    params = params_from_args(args)
    spec = SweepSpec(
        var=args.var,
        values=_int_list(args.values),
        algorithms=args.algorithms.split(","),
        seeds=list(range(args.seed, args.seed + args.seeds)),
        n_devices=args.devices,
        n_channels=args.channels,
        params=params,
        fading=args.fading,
        include_runtime=not args.no_runtime,
    )

    def progress(k, total):
        log.info("cell %d/%d", k, total)

    rows = run_sweep(spec, jobs=args.jobs, progress=progress)
    if args.output:
        with open(args.output, "w", newline="") as fh:
            write_csv(rows, fh)
    else:
        write_csv(rows, sys.stdout)
    return 0


def cmd_validate(args) -> int:
    params = params_from_args(args)
    if args.rho is not None:
        params = params.replace(reliability=args.rho)
    scenario = _scenario(args, params)
    schedule, _ = evaluate(args.algorithm, scenario)
    rep = validate_reliability(schedule, scenario, args.trials, seed=args.seed)
    ok = rep.passed(args.sigmas)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["device", "served", "analytic", "empirical", "lower_bound", "pass"])
    for u in range(scenario.n_devices):
        writer.writerow([u, int(rep.served[u]), fmt(rep.analytic[u]), fmt(rep.empirical[u]),
                         fmt(rep.lower_bound(args.sigmas)[u]), int(ok[u])])
    failed = int((~ok).sum())
    log.info("%d of %d served devices below bound", failed, int(rep.served.sum()))
    return 1 if failed else 0


def cmd_figure(args) -> int:
    with open(args.csv) as fh:
        rows = read_csv(fh)
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    params = params_from_args(args)
    tables = figure_tables(rows, distance_n=args.distance_devices, radius=params.area_radius)
    for name, table in tables.items():
        with open(out / f"{name}.csv", "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["value", "algorithm", "mean", "sd", "n"])
            for r in table:
                writer.writerow([fmt(r["value"]), r["algorithm"], fmt(r["mean"]), fmt(r["sd"]), r["n"]])
        log.info("wrote %s", out / f"{name}.csv")
    return 0


def cmd_dump(args) -> int:
    params = params_from_args(args)
    scenario = _scenario(args, params)
    schedule, _ = evaluate(args.algorithm, scenario)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["channel", "slot", "owner", "role", "bits"])
    for c, slot, dev, role, bits in schedule.rows():
        writer.writerow([c, slot, dev, role, fmt(bits)])
    return 0


def cmd_config(args) -> int:
    sys.stdout.write(dump_config(params_from_args(args)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="urllcgraph", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    algs = sorted(ALGORITHMS)

    p = sub.add_parser("run", help="one scenario, one algorithm; prints metrics as JSON")
    p.add_argument("algorithm", choices=algs)
    add_scenario_flags(p)
    add_param_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="sweep N, C or Delta; emits CSV")
    p.add_argument("var", choices=sorted(SWEEP_VARS))
    p.add_argument("values", help="e.g. 80:200:20 or 5,7,10")
    p.add_argument("--algorithms", default="fsa,bca,gba,gba_sic")
    p.add_argument("--seeds", type=int, default=10, help="number of seeds starting at --seed")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--no-runtime", action="store_true", help="write 0 runtimes for byte-stable output")
    p.add_argument("-o", "--output")
    add_scenario_flags(p)
    add_param_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="Monte Carlo reliability check of one schedule")
    p.add_argument("algorithm", choices=algs)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--rho", type=float, default=0.99, help="reliability used for the schedule")
    p.add_argument("--sigmas", type=float, default=3.0)
    add_scenario_flags(p)
    add_param_flags(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("figure", help="aggregate a sweep CSV into fig4..fig8 tables")
    p.add_argument("csv")
    p.add_argument("-o", "--outdir", default=".")
    p.add_argument("--distance-devices", type=int, default=140)
    add_param_flags(p)
    p.set_defaults(func=cmd_figure)

    p = sub.add_parser("schedule-dump", help="print the RU table of one schedule")
    p.add_argument("algorithm", choices=algs)
    add_scenario_flags(p)
    add_param_flags(p)
    p.set_defaults(func=cmd_dump)

    p = sub.add_parser("config", help="print the effective parameters as a config file")
    add_param_flags(p)
    p.set_defaults(func=cmd_config)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s",
                        stream=sys.stderr)
    np.seterr(over="ignore")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
