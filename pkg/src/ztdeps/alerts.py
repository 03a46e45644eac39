"""Structured alert records for non-fatal enforcement."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import TextIO

from ztdeps.engine import AccessEvent, Verdict


@dataclass(frozen=True, slots=True)
class AlertRecord:
    seq: int
    thread: int
    op: str
    object: str
    denying_namespace: str | None
    reason: str
    stack: tuple[str, ...]

    @classmethod
    def from_denial(cls, event: AccessEvent, verdict: Verdict) -> AlertRecord:
        return cls(
            event.seq,
            event.thread,
            event.op.wire,
            event.object,
            verdict.denying_namespace,
            verdict.reason,
            event.stack,
        )

    def to_json(self) -> str:
        record = asdict(self)
        record["stack"] = list(self.stack)
        return json.dumps(record, ensure_ascii=False)


class AlertSink:
    """Writes one JSON line per alert to a text stream."""

    def __init__(self, stream: TextIO):
        self.stream = stream
        self.count = 0

    def send(self, record: AlertRecord) -> None:
        self.stream.write(record.to_json() + "\n")
        self.count += 1
