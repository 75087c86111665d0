"""Command-line front end.

    remoteproj list
    remoteproj run --scenario stripe_example --out runs/stripe
    remoteproj run --config runs/stripe/config.json
    remoteproj analyze --schedule power:0.5 --M 1000 --window 0.1,10

Exit codes: 0 success, 1 usage error, 2 a run finished but an invariant check
failed (named under ``failed_checks`` in report.json).
"""
import argparse
import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
import json
import logging
import math
import os
import sys

from . import scenarios
from .report import build_report, write_json, write_trace_csv
from .scenarios import SCENARIOS, ScenarioConfig
from .schedules import (Schedule, build_extremal_witness, check_window_condition,
                        classify_condition_t, partial_sum_diagnostics)

log = logging.getLogger("remoteproj")

EXIT_OK, EXIT_USAGE, EXIT_INVARIANT = 0, 1, 2
DEFAULT_OUT = "remoteproj_runs"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunManifest:
    scenario: str = None
    config: str = None
    out: str = None
    stride: int = None
    tol: float = 1e-10
    seed: int = None
    horizon: int = None
    dim: int = None
    t: str = None

    def resolve(self):
        if (self.scenario is None) == (self.config is None):
            raise UsageError("give exactly one of a scenario name or a config path")
        if self.stride is not None and self.stride < 1:
            raise UsageError("stride must be >= 1")
        t = Schedule.parse(self.t) if self.t else None
        if self.config is not None:
            try:
                with open(self.config) as fh:
                    cfg = ScenarioConfig.from_dict(json.load(fh))
            except (OSError, json.JSONDecodeError) as exc:
                raise UsageError(f"cannot read config {self.config}: {exc}") from None
            if self.dim is not None or self.seed is not None:
                log.warning("--dim/--seed do not apply to a loaded config; ignored")
            if self.horizon is not None:
                cfg.horizon = self.horizon
            if t is not None:
                cfg.schedule = t
            return cfg
        if self.scenario not in SCENARIOS:
            raise UsageError(f"unknown scenario {self.scenario!r}; try `remoteproj list`")
        try:
            return scenarios.build(self.scenario, horizon=self.horizon, dim=self.dim,
                                   seed=self.seed, t=t)
        except NotImplementedError as exc:
            raise UsageError(str(exc)) from None


def cmd_run(manifest):
    """Run one manifest; write trace.csv, report.json and config.json."""
    try:
        cfg = manifest.resolve()
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = manifest.out or os.path.join(os.environ.get("REMOTEPROJ_OUT", DEFAULT_OUT), cfg.name)
    try:
        os.makedirs(out, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create {out}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    trace = cfg.run(tol=manifest.tol, stride=manifest.stride)
    report = build_report(cfg, trace)
    write_json(cfg.to_dict(), os.path.join(out, "config.json"))
    write_trace_csv(trace, os.path.join(out, "trace.csv"))
    write_json(report, os.path.join(out, "report.json"))
    status = "ok" if not report["failed_checks"] else "FAILED " + ",".join(report["failed_checks"])
    print(f"{cfg.name}: {report['steps']} steps, {report['stop_reason']}, {status} -> {out}")
    return EXIT_INVARIANT if report["failed_checks"] else EXIT_OK


def cmd_list():
    width = max(map(len, SCENARIOS))
    for name, blurb in SCENARIOS.items():
        print(f"{name:<{width}}  {blurb}")
    return EXIT_OK


def _decades(M):
    k = 1
    while k <= M:
        yield k
        k *= 10


def cmd_analyze(spec, M, windows=(), witness_csv=None):
    try:
        sched = Schedule.parse(spec)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if M < 1:
        print("error: M must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    ps = partial_sum_diagnostics(sched, M)
    print(f"schedule: {sched}")
    print(f"sum_sq[n<{M}]: {ps.sum_sq!r}")
    print(f"sum_over_n[n<{M}]: {ps.sum_over_n!r}")
    label = classify_condition_t(sched)
    print(f"condition_T: {label or 'undetermined by the implication chain'}")
    if not windows:
        windows = [(0.5, 0), (0.1, 5), (0.01, 50)]
    for delta, K in windows:
        if M < K + 1:
            print(f"window delta={delta!r} K={K}: skipped (M < K+1)")
            continue
        wc = check_window_condition(sched, delta, K, M)
        tail = "" if wc.holds else f" (first violation at n={wc.first_violation})"
        print(f"window delta={delta!r} K={K}: {str(wc.holds).lower()}{tail}")
    wit = build_extremal_witness(sched, M)
    for i in range(min(5, M)):
        print(f"a_{i + 1}: {float(wit.a[i])!r}")
    for k in _decades(M):
        print(f"sumsq({k}): {wit.sumsq_at(k)!r}")
    if witness_csv:
        with open(witness_csv, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["m", "t", "a", "partial_sum", "b", "sumsq"])
            for i in range(M):
                w.writerow([i + 1] + [f"{v:.17g}" for v in
                                      (wit.t[i], wit.a[i], wit.partial_sums[i], wit.b[i], wit.sumsq[i])])
    return EXIT_OK


def _parse_window(text):
    try:
        d, k = text.split(",")
        d, k = float(d), int(k)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected DELTA,K, got {text!r}") from None
    if not (d > 0 and math.isfinite(d)) or k < 0:
        raise argparse.ArgumentTypeError("need DELTA > 0 and K >= 0")
    return d, k


def make_parser():
    p = _Parser(prog="remoteproj", description="Remote projections onto convex families.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run built-in scenarios or JSON configs")
    r.add_argument("--scenario", action="append", default=[], help="built-in scenario name (repeatable)")
    r.add_argument("--config", action="append", default=[], help="scenario JSON path (repeatable)")
    r.add_argument("--out", help="output directory (default $REMOTEPROJ_OUT/<name>)")
    r.add_argument("--horizon", type=int)
    r.add_argument("--dim", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--t", help="schedule spec kind:params, e.g. power:1")
    r.add_argument("--tol", type=float, default=1e-10)
    r.add_argument("--stride", type=int, help="keep every STRIDE-th iterate")
    r.add_argument("--jobs", type=int, default=1, help="parallel workers for several runs")

    a = sub.add_parser("analyze", help="diagnostics for a weakness schedule")
    a.add_argument("--schedule", required=True, help="kind:params, e.g. constant:1")
    a.add_argument("--M", type=int, required=True, help="number of terms")
    a.add_argument("--window", type=_parse_window, action="append", default=[],
                   metavar="DELTA,K", help="window condition to test (repeatable)")
    a.add_argument("--witness-csv", help="write the extremal witness to this CSV")

    sub.add_parser("list", help="list built-in scenarios")
    return p


def _manifests(args):
    refs = [("scenario", s) for s in args.scenario] + [("config", c) for c in args.config]
    if not refs:
        raise UsageError("run needs --scenario or --config")
    multi = len(refs) > 1
    out = []
    for i, (kind, ref) in enumerate(refs):
        name = ref if kind == "scenario" else os.path.splitext(os.path.basename(ref))[0]
        dest = args.out
        if multi and dest is not None:
            dest = os.path.join(dest, f"{i:02d}_{name}")
        out.append(RunManifest(**{kind: ref}, out=dest, stride=args.stride, tol=args.tol,
                               seed=args.seed, horizon=args.horizon, dim=args.dim, t=args.t))
    return out


def main(argv=None):
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    if args.command == "list":
        return cmd_list()
    if args.command == "analyze":
        return cmd_analyze(args.schedule, args.M, args.window, args.witness_csv)
    try:
        manifests = _manifests(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.jobs > 1 and len(manifests) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            codes = list(pool.map(cmd_run, manifests))
    else:
        codes = [cmd_run(m) for m in manifests]
    return max(codes)


if __name__ == "__main__":
    sys.exit(main())
