"""Command-line entry point: discover, enforce, audit, bench, scenarios.

Exit codes: 0 clean, 2 input error, 3 access denied in fatal mode.
"""

from __future__ import annotations

import argparse
import json
import sys
from collections.abc import Sequence
from pathlib import Path

from ztdeps import bench
from ztdeps.alerts import AlertRecord, AlertSink
from ztdeps.engine import EngineConfig, Mode, ModeEffect
from ztdeps.generator import DEFAULT_FLUSH_INTERVAL, audit_metrics, parse_manifest, permission_count
from ztdeps.policy import PolicyError, PolicySet, parse_policy_file, serialize_policy_set
from ztdeps.trace import TraceError, discover, emit_trace, parse_trace, replay

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_DENIED = 3


class CLIError(Exception):
    def __init__(self, message: str, exit_code: int = EXIT_INPUT):
        super().__init__(message)
        self.exit_code = exit_code


def _read(path: str, what: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CLIError(f"cannot read {what} {path}: {exc.strerror or exc}") from None


def _write(path: str, text: str, what: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise CLIError(f"cannot write {what} {path}: {exc.strerror or exc}") from None


def _load_trace(path: str):
    try:
        return parse_trace(_read(path, "trace"))
    except TraceError as exc:
        raise CLIError(f"{path}: {exc}") from None


def _load_policy(path: str) -> PolicySet:
    try:
        return parse_policy_file(_read(path, "policy"))
    except PolicyError as exc:
        raise CLIError(f"{path}: {exc}") from None


def _int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values or any(v < 1 for v in values):
        raise argparse.ArgumentTypeError("values must be positive integers")
    return values


def _positive(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("value must be positive")
    return value


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------


def cmd_discover(args: argparse.Namespace) -> int:
    events = _load_trace(args.trace)
    try:
        manifest = parse_manifest(_read(args.manifest, "manifest"))
    except PolicyError as exc:
        raise CLIError(f"{args.manifest}: {exc}") from None

    def flush(snapshot: PolicySet) -> None:
        _write(args.out, serialize_policy_set(snapshot), "policy")

    policies = discover(events, manifest, args.flush_interval, flush)
    _write(args.out, serialize_policy_set(policies), "policy")
    count, mean = audit_metrics(policies)
    print(f"wrote {args.out}: {count} policies, {mean:.2f} permissions per policy")
    return EXIT_OK


def cmd_enforce(args: argparse.Namespace) -> int:
    policies = _load_policy(args.policy)
    events = _load_trace(args.trace)
    mode = Mode.FATAL if args.mode == "fatal" else Mode.NON_FATAL
    report = replay(events, EngineConfig(mode=mode), policies)

    if args.report:
        _write(args.report, json.dumps(report.to_dict(), indent=2) + "\n", "report")

    if mode is Mode.FATAL:
        first = report.first_denial
        if first is not None:
            print(
                f"DENIED seq={first.event.seq} {first.event.op.wire} {first.event.object!r} "
                f"by {first.verdict.denying_namespace or '<no policy>'}: {first.verdict.reason}"
            )
            return EXIT_DENIED
        print(f"ok: {report.allowed} accesses allowed, 0 denied")
        return EXIT_OK

    records = [
        AlertRecord.from_denial(v.event, v.verdict)
        for v in report.verdicts
        if v.verdict.mode_effect is ModeEffect.ALERTED
    ]
    if args.alerts:
        try:
            with open(args.alerts, "w", encoding="utf-8") as fh:
                sink = AlertSink(fh)
                for record in records:
                    sink.send(record)
        except OSError as exc:
            raise CLIError(f"cannot write alerts {args.alerts}: {exc.strerror or exc}") from None
    else:
        sink = AlertSink(sys.stderr)
        for record in records:
            sink.send(record)
    print(f"alerts: {len(records)} ({report.allowed} allowed, {report.denied} denied)")
    return EXIT_OK


def cmd_audit(args: argparse.Namespace) -> int:
    policies = _load_policy(args.policy)
    count, mean = audit_metrics(policies)
    print(f"policies: {count}")
    print(f"mean permissions per policy: {mean:.2f}")
    width = max((len(ns) for ns in policies), default=9)
    print(f"{'namespace':<{width}}  perms  ops")
    for ns in sorted(policies):
        policy = policies[ns]
        ops = ",".join(op.wire for op, grant in policy.grants.items() if grant.coarse) or "-"
        print(f"{ns:<{width}}  {permission_count(policy):>5}  {ops}")
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    cells = bench.run_grid(args.deps, args.depths, args.iterations)
    table = bench.to_csv(cells)
    if args.out:
        _write(args.out, table, "bench output")
        summary = sys.stdout
    else:
        sys.stdout.write(table)
        summary = sys.stderr
    for depth in args.depths:
        row = bench.cells_at_depth(cells, depth)
        if len(row) >= 2:
            fit = bench.linear_fit([c.deps for c in row], [c.mean_us for c in row])
            print(
                f"depth={depth}: slope over deps {fit.slope:.3g} us/dep, "
                f"max/min {bench.flatness_ratio(row):.3f}",
                file=summary,
            )
    for n in args.deps:
        col = bench.cells_at_deps(cells, n)
        if len(col) >= 2:
            fit = bench.linear_fit([c.depth for c in col], [c.mean_us for c in col])
            print(
                f"deps={n}: slope over depth {fit.slope:.3g} us/frame-dep, R^2 {fit.r_squared:.4f}",
                file=summary,
            )
    return EXIT_OK


def cmd_scenarios(args: argparse.Namespace) -> int:
    from ztdeps.scenarios import builtin_scenarios

    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CLIError(f"cannot create {out}: {exc.strerror or exc}") from None
    for s in builtin_scenarios():
        _write(str(out / f"{s.name}.manifest"), "".join(ns + "\n" for ns in s.manifest), "manifest")
        _write(str(out / f"{s.name}.benign.jsonl"), emit_trace(s.benign_trace, header=True), "trace")
        _write(str(out / f"{s.name}.exploit.jsonl"), emit_trace(s.exploit_trace, header=True), "trace")
        print(f"{s.name}: {s.vulnerability_class} ({', '.join(s.cves)})")
    return EXIT_OK


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ztd",
        description="Least-privilege policy discovery and call-stack enforcement for dependencies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("discover", help="generate policies from a benign trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--flush-interval", type=_positive, default=DEFAULT_FLUSH_INTERVAL)
    p.set_defaults(func=cmd_discover)

    p = sub.add_parser("enforce", help="replay a trace against a policy file")
    p.add_argument("--trace", required=True)
    p.add_argument("--policy", required=True)
    p.add_argument("--mode", choices=("fatal", "alert"), required=True)
    p.add_argument("--alerts", help="alert JSON lines file (default: stderr)")
    p.add_argument("--report", help="write the replay report as JSON")
    p.set_defaults(func=cmd_enforce)

    p = sub.add_parser("audit", help="configuration-effort metrics for a policy file")
    p.add_argument("--policy", required=True)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("bench", help="authorization latency grid, CSV output")
    p.add_argument("--deps", type=_int_list, default=list(bench.DEFAULT_DEPS))
    p.add_argument("--depths", type=_int_list, default=list(bench.DEFAULT_DEPTHS))
    p.add_argument("--iterations", type=_positive, default=bench.DEFAULT_ITERATIONS)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("scenarios", help="export the built-in scenario corpus")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_scenarios)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CLIError as exc:
        print(f"ztd: error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
