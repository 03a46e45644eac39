"""Portable JSON Lines access traces: parsing, emission, replay and discovery.

Wire records, one per line, stack innermost-first::

    {"seq": 1, "thread": 0, "kind": "access", "op": "fs.read", "object": "/etc/hosts", "stack": [...]}
    {"seq": 2, "kind": "spawn", "parent": 0, "child": 1, "stack": [...]}

An optional first line ``ztd-trace/1`` names the format version.
"""

from __future__ import annotations

import json
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Union

from ztdeps.context import build_context
from ztdeps.engine import (
    MAIN_THREAD,
    AccessEvent,
    EngineConfig,
    Enforcer,
    Mode,
    SpawnEvent,
    Verdict,
)
from ztdeps.generator import DEFAULT_FLUSH_INTERVAL, GeneratorState, manifest_resolver
from ztdeps.policy import Policy, PolicySet, ResourceOp

TRACE_HEADER = "ztd-trace/1"

TraceEvent = Union[AccessEvent, SpawnEvent]


class TraceError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class TraceParseError(TraceError):
    pass


class OrderError(TraceError):
    pass


class UnknownThreadError(TraceError):
    pass


def _require(record: dict, key: str, kind: type | tuple[type, ...], lineno: int):
    if key not in record:
        raise TraceParseError(f"missing field {key!r}", lineno)
    value = record[key]
    # bool is an int subclass; never accept it for ids or seq.
    if isinstance(value, bool) and bool not in (kind if isinstance(kind, tuple) else (kind,)):
        raise TraceParseError(f"field {key!r} has wrong type", lineno)
    if not isinstance(value, kind):
        raise TraceParseError(f"field {key!r} has wrong type", lineno)
    return value


def _stack(record: dict, lineno: int) -> tuple[str, ...]:
    stack = _require(record, "stack", list, lineno)
    if not stack or not all(isinstance(frame, str) and frame for frame in stack):
        raise TraceParseError("stack must be a non-empty list of class names", lineno)
    return tuple(stack)


def _decode(record: object, lineno: int) -> TraceEvent:
    if not isinstance(record, dict):
        raise TraceParseError("record must be a JSON object", lineno)
    seq = _require(record, "seq", int, lineno)
    kind = _require(record, "kind", str, lineno)
    if kind == "access":
        thread = _require(record, "thread", int, lineno)
        try:
            op = ResourceOp.from_wire(_require(record, "op", str, lineno))
        except ValueError as exc:
            raise TraceParseError(str(exc), lineno) from None
        obj = _require(record, "object", str, lineno)
        if not obj:
            raise TraceParseError("object must be non-empty", lineno)
        return AccessEvent(seq, thread, op, obj, _stack(record, lineno))
    if kind == "spawn":
        parent = _require(record, "parent", int, lineno)
        child = _require(record, "child", int, lineno)
        if parent == child:
            raise TraceParseError("a thread cannot spawn itself", lineno)
        return SpawnEvent(seq, parent, child, _stack(record, lineno))
    raise TraceParseError(f"unknown record kind {kind!r}", lineno)


def parse_trace(text: str) -> list[TraceEvent]:
    """Parse and validate a trace; errors carry 1-based line numbers."""
    events: list[TraceEvent] = []
    known_threads = {MAIN_THREAD}
    last_seq: int | None = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if lineno == 1 and line == TRACE_HEADER:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TraceParseError(f"malformed JSON: {exc.msg}", lineno) from None
        event = _decode(record, lineno)
        if last_seq is not None and event.seq <= last_seq:
            raise OrderError(f"seq {event.seq} does not follow {last_seq}", lineno)
        last_seq = event.seq
        if isinstance(event, SpawnEvent):
            if event.parent_thread not in known_threads:
                raise UnknownThreadError(f"spawn from unknown thread {event.parent_thread}", lineno)
            if event.child_thread in known_threads:
                raise TraceParseError(f"thread {event.child_thread} already exists", lineno)
            known_threads.add(event.child_thread)
        elif event.thread not in known_threads:
            raise UnknownThreadError(f"access on unspawned thread {event.thread}", lineno)
        events.append(event)
    return events


def event_to_dict(event: TraceEvent) -> dict[str, object]:
    if isinstance(event, SpawnEvent):
        return {
            "seq": event.seq,
            "kind": "spawn",
            "parent": event.parent_thread,
            "child": event.child_thread,
            "stack": list(event.stack),
        }
    return {
        "seq": event.seq,
        "thread": event.thread,
        "kind": "access",
        "op": event.op.wire,
        "object": event.object,
        "stack": list(event.stack),
    }


def emit_trace(events: Iterable[TraceEvent], header: bool = False) -> str:
    lines = [TRACE_HEADER] if header else []
    lines.extend(json.dumps(event_to_dict(e), ensure_ascii=False) for e in events)
    return "".join(line + "\n" for line in lines)


# --------------------------------------------------------------------------
# Replay
# --------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class EventVerdict:
    event: AccessEvent
    verdict: Verdict


@dataclass
class ReplayReport:
    mode: Mode
    verdicts: list[EventVerdict] = field(default_factory=list)
    spawns: int = 0
    halted: bool = False

    @property
    def allowed(self) -> int:
        return sum(1 for v in self.verdicts if v.verdict.allowed)

    @property
    def denied(self) -> int:
        return sum(1 for v in self.verdicts if not v.verdict.allowed)

    @property
    def alerts(self) -> int:
        return self.denied if self.mode is Mode.NON_FATAL else 0

    @property
    def denials(self) -> list[EventVerdict]:
        return [v for v in self.verdicts if not v.verdict.allowed]

    @property
    def first_denial(self) -> EventVerdict | None:
        return next((v for v in self.verdicts if not v.verdict.allowed), None)

    def to_dict(self) -> dict[str, object]:
        first = self.first_denial
        return {
            "mode": self.mode.value,
            "totals": {
                "events": len(self.verdicts),
                "spawns": self.spawns,
                "allowed": self.allowed,
                "denied": self.denied,
                "alerts": self.alerts,
            },
            "halted": self.halted,
            "first_denial": None
            if first is None
            else {
                "seq": first.event.seq,
                "namespace": first.verdict.denying_namespace,
                "reason": first.verdict.reason,
            },
            "verdicts": [
                {
                    "seq": v.event.seq,
                    "thread": v.event.thread,
                    "op": v.event.op.wire,
                    "object": v.event.object,
                    "decision": "allowed" if v.verdict.allowed else "denied",
                    "namespace": v.verdict.denying_namespace,
                    "reason": v.verdict.reason,
                    "effect": v.verdict.mode_effect.value,
                }
                for v in self.verdicts
            ],
        }


def replay(
    events: Sequence[TraceEvent],
    cfg: EngineConfig,
    policies: Mapping[str, Policy],
) -> ReplayReport:
    """Feed a trace through a fresh enforcer; fatal mode stops at the first denial."""
    enforcer = Enforcer(build_context(policies), cfg)
    report = ReplayReport(cfg.mode)
    for event in sorted(events, key=lambda e: e.seq):
        if isinstance(event, SpawnEvent):
            enforcer.spawn(event)
            report.spawns += 1
            continue
        verdict = enforcer.authorize(event)
        report.verdicts.append(EventVerdict(event, verdict))
        if verdict.denied and cfg.mode is Mode.FATAL:
            report.halted = True
            break
    return report


def discover(
    events: Iterable[TraceEvent],
    manifest: Iterable[str],
    flush_interval: int = DEFAULT_FLUSH_INTERVAL,
    on_flush=None,
) -> PolicySet:
    """Observe every event in order against the manifest, then snapshot."""
    resolver = manifest_resolver(manifest)
    state = GeneratorState(flush_interval, on_flush)
    for event in events:
        state.observe(resolver, event)
    return state.snapshot()
