"""Command line front end.

Subcommands: ``gen`` (synthesize a table file), ``run`` (execute one join
experiment), ``cost`` (print model costs without executing), ``verify``
(execute and compare against the all-pairs oracle), ``sweep`` (run a grid
from a JSON config). Exit codes: 0 success, 1 verification mismatch,
2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .datagen import (
    DatasetFormatError,
    SingleSkewSpec,
    ZipfSpec,
    export_keys_csv,
    gen_single_skew,
    gen_zipf,
    save_dataset,
)
from .harness import (
    ConfigError,
    RunConfig,
    compute_costs,
    load_sweep_config,
    run_experiment,
    sweep,
    write_report,
    write_sweep_csv,
)
from .strategies import STRATEGY_NAMES

DESK_SCALE = 0.1


def _add_run_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--r", required=True, help="probe table file")
    p.add_argument("--s", required=True, help="build table file")
    p.add_argument("--nodes", type=int, required=True)
    p.add_argument("--strategy", choices=STRATEGY_NAMES, default="auto")
    p.add_argument("--threshold", type=float, default=0.05, help="skew threshold p")
    p.add_argument("--gateway", type=int, default=0)
    p.add_argument("--hash-offset", type=int, default=0)
    p.add_argument("--merge", choices=("gather", "local"), default="gather")
    p.add_argument(
        "--placement", default="balanced", help="balanced | hot:K | random"
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--repeats", type=int, default=None)


def _run_config(args: argparse.Namespace, verify: bool = False) -> RunConfig:
    return RunConfig(
        r_source=args.r,
        s_source=args.s,
        nodes=args.nodes,
        strategy=args.strategy,
        threshold=args.threshold,
        gateway=args.gateway,
        hash_offset=args.hash_offset,
        merge=args.merge,
        placement=args.placement,
        seed=args.seed,
        workers=args.workers,
        repeats=args.repeats,
        verify=verify,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="skewjoin")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a table file")
    gen.add_argument("--rows", type=int, required=True)
    gen.add_argument("--distinct", type=int, default=1000,
                     help="distinct keys (Zipf) or distinct non-hot keys")
    gen.add_argument("--zipf-z", type=float, default=None, help="Zipf skew factor")
    gen.add_argument("--skew-key", type=int, default=None, help="hot key value")
    gen.add_argument("--skew-frac", type=float, default=None,
                     help="fraction of rows carrying the hot key")
    gen.add_argument("--payload-width", type=int, default=8)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)
    gen.add_argument("--csv", default=None, help="also export keys as CSV")

    run = sub.add_parser("run", help="run one join experiment")
    _add_run_args(run)
    run.add_argument("--verify", action="store_true",
                     help="compare the result against the all-pairs oracle")
    run.add_argument("--report", default=None, help="write the JSON report here")

    cost = sub.add_parser("cost", help="print model costs without executing")
    _add_run_args(cost)

    verify = sub.add_parser("verify", help="oracle comparison only")
    _add_run_args(verify)

    swp = sub.add_parser("sweep", help="run an experiment grid from a config")
    swp.add_argument("--config", required=True)
    swp.add_argument("--out-csv", default=None)
    swp.add_argument("--out-json", default=None)
    swp.add_argument(
        "--paper-scale",
        action="store_true",
        help="run at the configs' full table sizes instead of desk scale "
        f"(default scale factor {DESK_SCALE})",
    )
    return parser


def _cmd_gen(args: argparse.Namespace) -> int:
    if args.skew_frac is not None:
        if args.skew_key is None:
            raise ConfigError("--skew-frac needs --skew-key")
        ds = gen_single_skew(
            SingleSkewSpec(
                skew_key=args.skew_key,
                skew_fraction=args.skew_frac,
                rows=args.rows,
                distinct_rest=args.distinct,
                seed=args.seed,
            ),
            args.payload_width,
        )
    else:
        ds = gen_zipf(
            ZipfSpec(
                n_distinct=args.distinct,
                z=args.zipf_z if args.zipf_z is not None else 0.0,
                rows=args.rows,
                seed=args.seed,
            ),
            args.payload_width,
        )
    save_dataset(ds, args.out)
    if args.csv:
        export_keys_csv(ds, args.csv)
    print(f"wrote {len(ds.tuples)} rows to {args.out}")
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    report = run_experiment(_run_config(args, verify=args.verify))
    if args.report:
        write_report(report, args.report)
        print(f"report written to {args.report}")
    else:
        json.dump(report, sys.stdout, indent=2, sort_keys=True)
        print()
    if args.verify and not report["verified"]:
        print("VERIFICATION FAILED: result differs from oracle", file=sys.stderr)
        return 1
    return 0


def _cmd_cost(args: argparse.Namespace) -> int:
    json.dump(compute_costs(_run_config(args)), sys.stdout, indent=2, sort_keys=True)
    print()
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    report = run_experiment(_run_config(args, verify=True))
    if report["verified"]:
        print(f"OK: {report['metrics']['result_count']} pairs match the oracle")
        return 0
    print("VERIFICATION FAILED: result differs from oracle", file=sys.stderr)
    return 1


def _cmd_sweep(args: argparse.Namespace) -> int:
    config = load_sweep_config(args.config)
    scale = 1.0 if args.paper_scale else DESK_SCALE
    rows = sweep(config, scale=scale)
    if args.out_csv:
        write_sweep_csv(rows, args.out_csv)
        print(f"{len(rows)} rows written to {args.out_csv}")
    if args.out_json:
        with open(args.out_json, "w") as fh:
            json.dump(rows, fh, indent=2, sort_keys=True)
        print(f"JSON written to {args.out_json}")
    if not args.out_csv and not args.out_json:
        json.dump(rows, sys.stdout, indent=2, sort_keys=True)
        print()
    return 0


_COMMANDS = {
    "gen": _cmd_gen,
    "run": _cmd_run,
    "cost": _cmd_cost,
    "verify": _cmd_verify,
    "sweep": _cmd_sweep,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, DatasetFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
