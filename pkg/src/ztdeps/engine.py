"""Context-sensitive authorization over the call stack and inherited thread context."""

from __future__ import annotations

import enum
import threading
from collections.abc import Sequence
from dataclasses import dataclass, field

from ztdeps.context import PolicyContext, ResolvedDep, resolve_stack
from ztdeps.policy import CallPosition, Policy, ResourceOp, check_access, validate_namespace

MAIN_THREAD = 0


class Mode(enum.Enum):
    FATAL = "fatal"
    NON_FATAL = "alert"


class ModeEffect(enum.Enum):
    NONE = "none"
    RAISED = "raised"
    ALERTED = "alerted"


@dataclass(frozen=True, slots=True)
class AccessEvent:
    seq: int
    thread: int
    op: ResourceOp
    object: str
    stack: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "stack", tuple(self.stack))
        if not self.stack:
            raise ValueError("access event stack must be non-empty")
        if not self.object:
            raise ValueError("access event object must be non-empty")


@dataclass(frozen=True, slots=True)
class SpawnEvent:
    seq: int
    parent_thread: int
    child_thread: int
    stack: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "stack", tuple(self.stack))
        if self.parent_thread == self.child_thread:
            raise ValueError("a thread cannot spawn itself")


@dataclass(frozen=True, slots=True)
class EngineConfig:
    mode: Mode = Mode.FATAL
    # Zero trust: a stack carrying no policy-bearing dependency is denied.
    allow_when_no_policy: bool = False
    trusted_namespaces: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "trusted_namespaces", tuple(self.trusted_namespaces))
        for ns in self.trusted_namespaces:
            validate_namespace(ns)


@dataclass(frozen=True, slots=True)
class Verdict:
    allowed: bool
    denying_namespace: str | None = None
    reason: str = ""
    mode_effect: ModeEffect = ModeEffect.NONE

    @property
    def denied(self) -> bool:
        return not self.allowed


ALLOWED = Verdict(True)


class AccessDenied(Exception):
    """Raised by callers that turn a fatal-mode denial into a stop signal."""

    def __init__(self, verdict: Verdict, event: AccessEvent | None = None):
        self.verdict = verdict
        self.event = event
        super().__init__(f"access denied by {verdict.denying_namespace}: {verdict.reason}")


class DuplicateSpawnError(ValueError):
    pass


@dataclass
class ThreadRegistry:
    """Dependency policies saved from each child thread's spawning stack.

    Reads need no lock; registration is serialized.
    """

    saved: dict[int, tuple[tuple[str, Policy], ...]] = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def get(self, thread: int) -> tuple[tuple[str, Policy], ...]:
        return self.saved.get(thread, ())

    def __contains__(self, thread: object) -> bool:
        return thread in self.saved

    def save(self, child: int, entries: Sequence[tuple[str, Policy]]) -> None:
        with self._lock:
            if child in self.saved:
                raise DuplicateSpawnError(f"thread {child} spawned twice")
            self.saved[child] = tuple(entries)


def _is_trusted(frame: str, trusted: Sequence[str]) -> bool:
    return any(frame == ns or frame.startswith(ns + ".") for ns in trusted)


def combined_resolution(
    ctx: PolicyContext, registry: ThreadRegistry, cfg: EngineConfig, thread: int, stack: Sequence[str]
) -> list[ResolvedDep]:
    """Own-stack dependencies followed by inherited parent-context ones.

    Inherited entries are checked at transitive position and skipped when the
    namespace already appears on the thread's own stack.
    """
    if cfg.trusted_namespaces:
        stack = [f for f in stack if not _is_trusted(f, cfg.trusted_namespaces)]
    entries = list(resolve_stack(ctx, stack))
    seen = {e.namespace for e in entries}
    for namespace, policy in registry.get(thread):
        if namespace not in seen:
            seen.add(namespace)
            entries.append(ResolvedDep(namespace, policy, CallPosition.TRANSITIVE))
    return entries


def _deny(cfg: EngineConfig, namespace: str | None, reason: str) -> Verdict:
    effect = ModeEffect.RAISED if cfg.mode is Mode.FATAL else ModeEffect.ALERTED
    return Verdict(False, namespace, reason, effect)


def evaluate(entries: Sequence[ResolvedDep], cfg: EngineConfig, op: ResourceOp, obj: str) -> Verdict:
    if not entries:
        if cfg.allow_when_no_policy:
            return ALLOWED
        return _deny(cfg, None, "no policy on stack")
    for entry in entries:
        decision = check_access(entry.policy, op, obj, entry.position)
        if not decision.allowed:
            return _deny(cfg, entry.namespace, decision.reason)
    return ALLOWED


def authorize(ctx: PolicyContext, registry: ThreadRegistry, cfg: EngineConfig, ev: AccessEvent) -> Verdict:
    entries = combined_resolution(ctx, registry, cfg, ev.thread, ev.stack)
    return evaluate(entries, cfg, ev.op, ev.object)


def register_spawn(ctx: PolicyContext, registry: ThreadRegistry, ev: SpawnEvent) -> Verdict:
    """Save the spawning context for the child thread. Spawning is never gated."""
    own = [(e.namespace, e.policy) for e in resolve_stack(ctx, ev.stack)]
    seen = {ns for ns, _ in own}
    inherited = [(ns, p) for ns, p in registry.get(ev.parent_thread) if ns not in seen]
    registry.save(ev.child_thread, own + inherited)
    return ALLOWED


class Enforcer:
    """Bundles a context, a thread registry and a configuration."""

    def __init__(self, ctx: PolicyContext, cfg: EngineConfig | None = None):
        self.ctx = ctx
        self.cfg = cfg or EngineConfig()
        self.registry = ThreadRegistry()
        trusted = [ns for ns in self.cfg.trusted_namespaces if ns in ctx]
        if trusted:
            raise ValueError(f"trusted namespaces also carry policies: {trusted}")

    def authorize(self, ev: AccessEvent) -> Verdict:
        return authorize(self.ctx, self.registry, self.cfg, ev)

    def spawn(self, ev: SpawnEvent) -> Verdict:
        return register_spawn(self.ctx, self.registry, ev)

    def check(self, ev: AccessEvent) -> Verdict:
        """Like :meth:`authorize` but raises :class:`AccessDenied` in fatal mode."""
        verdict = self.authorize(ev)
        if verdict.mode_effect is ModeEffect.RAISED:
            raise AccessDenied(verdict, ev)
        return verdict
