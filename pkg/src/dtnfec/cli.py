"""Command-line front end.

    dtnfec analyze   --config FILE          closed-form sweep
    dtnfec simulate  --config FILE          closed form plus Monte Carlo
    dtnfec trace validate|stats|filter|generate ...
    dtnfec reproduce FIGURE                 sweep behind one figure

Flags given on the command line override the configuration document.
Exit codes: 0 success, 1 configuration error, 2 trace format error,
3 infeasible scenario.
"""

from __future__ import annotations

import argparse
import sys

from .config import load_document, parse_config
from .errors import ConfigError, InfeasibleError, TraceFormatError
from .experiments import evaluate, write_csv
from .figures import FIGURES, recipe
from .simulator import JOBS_ENV
from .traces import (
    estimate_lambda,
    filter_active_nodes,
    gen_contacts_exponential,
    gen_contacts_rwp,
    pair_contact_histogram,
    read_trace,
    write_trace,
)

EXIT_OK, EXIT_CONFIG, EXIT_TRACE, EXIT_INFEASIBLE = 0, 1, 2, 3


def _progress(message: str):
    print(message, file=sys.stderr, flush=True)


def _overrides(args) -> dict:
    out = {}
    if getattr(args, "seed", None) is not None:
        out["seed"] = args.seed
    if getattr(args, "replications", None) is not None:
        out["replications"] = args.replications
    return out


def _run_sweep(docs, args, simulate: bool):
    columns, rows = None, []
    for doc in docs:
        cfg = parse_config({**doc, **_overrides(args)})
        columns, part = evaluate(cfg, simulate, jobs=args.jobs, progress=_progress if simulate else None)
        rows.extend(part)
    write_csv(columns, rows, args.out)


def cmd_analyze(args) -> int:
    if not args.config:
        raise ConfigError("--config: required")
    _run_sweep([load_document(args.config)], args, simulate=False)
    return EXIT_OK


def cmd_simulate(args) -> int:
    if not args.config:
        raise ConfigError("--config: required")
    _run_sweep([load_document(args.config)], args, simulate=True)
    return EXIT_OK


def cmd_reproduce(args) -> int:
    seed = 0 if args.seed is None else args.seed
    docs, simulate = recipe(args.figure, tau=args.tau, replications=args.replications, seed=seed)
    if args.out is None:
        args.out = f"{args.figure}.csv"
    _run_sweep(docs, args, simulate)
    _progress(f"wrote {args.out}")
    return EXIT_OK


def _emit(lines, out):
    text = "\n".join(lines) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def cmd_trace(args) -> int:
    if args.trace_cmd == "generate":
        if args.kind == "exponential":
            trace = gen_contacts_exponential(args.nodes, args.lam, args.horizon, seed=args.seed)
        else:
            trace = gen_contacts_rwp(
                args.side, args.range, args.speed, args.nodes, args.horizon, args.step, seed=args.seed
            )
        if args.out is None:
            raise ConfigError("--out: required for trace generate")
        write_trace(trace, args.out)
        return EXIT_OK

    trace = read_trace(args.path)
    if args.trace_cmd == "validate":
        _emit([f"ok: {len(trace)} events, {trace.node_count} nodes, horizon {trace.horizon:.10g}"], args.out)
    elif args.trace_cmd == "stats":
        window = tuple(args.window) if args.window else None
        lines = [
            f"nodes {trace.node_count}",
            f"events {len(trace)}",
            f"horizon {trace.horizon:.10g}",
            f"lambda_hat {estimate_lambda(trace, window):.10g}",
            "contacts_per_pair pairs",
        ]
        lines += [f"{k} {v}" for k, v in sorted(pair_contact_histogram(trace).items())]
        _emit(lines, args.out)
    else:
        kept = filter_active_nodes(trace, args.min_contacts)
        if args.out is None:
            raise ConfigError("--out: required for trace filter")
        write_trace(kept, args.out, header=f"filtered from {args.path} with min_contacts={args.min_contacts}")
        _progress(f"kept {kept.node_count} of {trace.node_count} nodes, {len(kept)} events")
    return EXIT_OK


def _global_flags(suppress: bool) -> argparse.ArgumentParser:
    # shared so the flags work before or after the subcommand
    default = argparse.SUPPRESS if suppress else None
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", metavar="PATH", default=default, help="JSON or YAML scenario document")
    p.add_argument("--out", metavar="PATH", default=default, help="output file (default stdout)")
    p.add_argument("--seed", type=int, metavar="U64", default=default, help="master seed")
    p.add_argument("--replications", type=int, metavar="N", default=default)
    p.add_argument(
        "--jobs", type=int, metavar="N", default=default, help=f"worker processes (default ${JOBS_ENV} or 1)"
    )
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dtnfec",
        description="Coded two-hop DTN relaying: closed forms, Monte Carlo and traces.",
        parents=[_global_flags(False)],
    )
    flags = _global_flags(True)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze", parents=[flags], help="closed-form sweep to CSV").set_defaults(func=cmd_analyze)
    sub.add_parser("simulate", parents=[flags], help="closed form plus Monte Carlo").set_defaults(func=cmd_simulate)

    rep = sub.add_parser("reproduce", parents=[flags], help="sweep behind one figure")
    rep.add_argument("figure", choices=FIGURES)
    rep.add_argument("--tau", type=float, help="deadline (fig1*: skips calibration)")
    rep.set_defaults(func=cmd_reproduce)

    tr = sub.add_parser("trace", help="contact trace utilities")
    tsub = tr.add_subparsers(dest="trace_cmd", required=True)
    for name in ("validate", "stats", "filter"):
        t = tsub.add_parser(name, parents=[flags])
        t.add_argument("path")
        t.set_defaults(func=cmd_trace)
        if name == "stats":
            t.add_argument("--window", type=float, nargs=2, metavar=("START", "STOP"))
        if name == "filter":
            t.add_argument("--min-contacts", type=int, required=True)
    gen = tsub.add_parser("generate", parents=[flags], help="write a synthetic trace")
    gen.add_argument("--kind", choices=("exponential", "rwp"), default="exponential")
    gen.add_argument("--nodes", type=int, required=True)
    gen.add_argument("--horizon", type=float, required=True)
    gen.add_argument("--lam", type=float, help="pairwise rate (exponential)")
    gen.add_argument("--side", type=float, default=5000.0)
    gen.add_argument("--range", type=float, default=15.0)
    gen.add_argument("--speed", type=float, default=5.0)
    gen.add_argument("--step", type=float, default=1.0)
    gen.set_defaults(func=cmd_trace)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for name in ("config", "out", "seed", "replications", "jobs"):
        if not hasattr(args, name):
            setattr(args, name, None)
    try:
        if args.command == "trace" and args.trace_cmd == "generate" and args.kind == "exponential" and args.lam is None:
            raise ConfigError("--lam: required for exponential traces")
        if args.replications is not None and args.replications < 1:
            raise ConfigError(f"replications: must be >= 1, got {args.replications}")
        return args.func(args)
    except TraceFormatError as exc:
        print(f"trace error: {exc}", file=sys.stderr)
        return EXIT_TRACE
    except InfeasibleError as exc:
        print(f"infeasible scenario: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
