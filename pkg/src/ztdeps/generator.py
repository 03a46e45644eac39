"""Least-privilege policy discovery from observed access events."""

from __future__ import annotations

import threading
from collections.abc import Callable, Iterable, Mapping
from dataclasses import dataclass, field

from ztdeps.context import PolicyContext, resolve_stack
from ztdeps.engine import AccessEvent, DuplicateSpawnError, SpawnEvent
from ztdeps.policy import OP_ORDER, OpGrant, Policy, PolicySet, ResourceOp, validate_namespace

DEFAULT_FLUSH_INTERVAL = 1000


# --------------------------------------------------------------------------
# Manifest
# --------------------------------------------------------------------------


def parse_manifest(text: str) -> list[str]:
    """One namespace per line; ``#`` starts a comment; blank lines ignored."""
    namespaces: list[str] = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            namespaces.append(validate_namespace(line))
    return list(dict.fromkeys(namespaces))


def manifest_resolver(namespaces: Iterable[str]) -> PolicyContext:
    """Namespace-only trie for discovery; each node carries an empty placeholder policy."""
    return PolicyContext((ns, Policy(ns)) for ns in dict.fromkeys(namespaces))


# --------------------------------------------------------------------------
# Accumulator
# --------------------------------------------------------------------------


@dataclass
class _GrantBuilder:
    coarse: bool = False
    allowed: dict[str, None] = field(default_factory=dict)
    denied: dict[str, None] = field(default_factory=dict)
    transitive: dict[str, None] = field(default_factory=dict)

    def freeze(self) -> OpGrant:
        return OpGrant(self.coarse, tuple(self.allowed), tuple(self.denied), tuple(self.transitive))


class GeneratorState:
    """Working policy set grown by observation.

    ``on_flush`` receives a snapshot every ``flush_interval`` observed access
    events.
    """

    def __init__(
        self,
        flush_interval: int = DEFAULT_FLUSH_INTERVAL,
        on_flush: Callable[[PolicySet], None] | None = None,
    ):
        if flush_interval < 1:
            raise ValueError("flush_interval must be positive")
        self.flush_interval = flush_interval
        self.on_flush = on_flush
        self.events_observed = 0
        self._policies: dict[str, dict[ResourceOp, _GrantBuilder]] = {}
        # child thread -> namespaces saved from its spawning stack (and ancestors)
        self._threads: dict[int, tuple[str, ...]] = {}
        self._lock = threading.Lock()

    def _credit(self, namespace: str, op: ResourceOp, obj: str, direct: bool) -> None:
        grant = self._policies.setdefault(namespace, {}).setdefault(op, _GrantBuilder())
        grant.coarse = True
        (grant.allowed if direct else grant.transitive)[obj] = None

    def observe_access(self, resolver: PolicyContext, ev: AccessEvent) -> None:
        deps = resolve_stack(resolver, ev.stack).namespaces
        # Only the innermost dependency on the thread's own stack is direct;
        # inherited spawn-context namespaces are always transitive.
        has_direct = bool(deps)
        for namespace in self._threads.get(ev.thread, ()):
            if namespace not in deps:
                deps.append(namespace)
        with self._lock:
            for i, namespace in enumerate(deps):
                self._credit(namespace, ev.op, ev.object, direct=(i == 0 and has_direct))
            self.events_observed += 1
        if self.on_flush is not None and self.events_observed % self.flush_interval == 0:
            self.on_flush(self.snapshot())

    def observe_spawn(self, resolver: PolicyContext, ev: SpawnEvent) -> None:
        if ev.child_thread in self._threads:
            raise DuplicateSpawnError(f"thread {ev.child_thread} spawned twice")
        own = resolve_stack(resolver, ev.stack).namespaces
        inherited = [ns for ns in self._threads.get(ev.parent_thread, ()) if ns not in own]
        self._threads[ev.child_thread] = tuple(own + inherited)

    def observe(self, resolver: PolicyContext, ev: AccessEvent | SpawnEvent) -> GeneratorState:
        if isinstance(ev, SpawnEvent):
            self.observe_spawn(resolver, ev)
        else:
            self.observe_access(resolver, ev)
        return self

    def snapshot(self) -> PolicySet:
        with self._lock:
            return PolicySet(
                Policy(ns, {op: ops[op].freeze() for op in OP_ORDER if op in ops})
                for ns, ops in self._policies.items()
            )


def observe(state: GeneratorState, resolver: PolicyContext, ev: AccessEvent | SpawnEvent) -> GeneratorState:
    return state.observe(resolver, ev)


def snapshot(state: GeneratorState) -> PolicySet:
    return state.snapshot()


# --------------------------------------------------------------------------
# Set algebra and metrics
# --------------------------------------------------------------------------


def _merge_grant(a: OpGrant, b: OpGrant) -> OpGrant:
    return OpGrant(
        a.coarse or b.coarse,
        a.allowed + b.allowed,
        a.denied + b.denied,
        a.transitive + b.transitive,
    )


def merge(a: Mapping[str, Policy], b: Mapping[str, Policy]) -> PolicySet:
    """Namespace-wise union; list entries keep ``a``'s order first."""
    merged: list[Policy] = []
    for ns in list(a) + [ns for ns in b if ns not in a]:
        if ns in a and ns in b:
            pa, pb = a[ns], b[ns]
            grants = {op: _merge_grant(pa.grant(op), pb.grant(op)) for op in OP_ORDER}
            merged.append(Policy(ns, grants))
        else:
            merged.append(a[ns] if ns in a else b[ns])
    return PolicySet(merged)


def permission_count(policy: Policy) -> int:
    return sum(1 for grant in policy.grants.values() if grant.coarse)


def audit_metrics(policies: Mapping[str, Policy]) -> tuple[int, float]:
    """(number of policies granting anything, mean granted ops per such policy)."""
    counts = [permission_count(p) for p in policies.values()]
    counts = [c for c in counts if c]
    if not counts:
        return 0, 0.0
    return len(counts), sum(counts) / len(counts)
