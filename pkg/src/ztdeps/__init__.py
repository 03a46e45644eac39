"""Zero-trust permission engine for third-party dependencies.

Policies are discovered from observed resource accesses and enforced by
checking every dependency on the call stack, plus the context saved when
the current thread was spawned.
"""

from ztdeps.context import PolicyContext, StackResolution, build_context, resolve_stack
from ztdeps.engine import (
    AccessDenied,
    AccessEvent,
    EngineConfig,
    Enforcer,
    Mode,
    ModeEffect,
    SpawnEvent,
    ThreadRegistry,
    Verdict,
    authorize,
    register_spawn,
)
from ztdeps.generator import GeneratorState, audit_metrics, merge, observe, snapshot
from ztdeps.policy import (
    CallPosition,
    Decision,
    OpGrant,
    Policy,
    PolicySet,
    ResourceOp,
    check_access,
    parse_policy_file,
    serialize_policy_set,
)
from ztdeps.trace import ReplayReport, discover, emit_trace, parse_trace, replay

__all__ = [
    "AccessDenied",
    "AccessEvent",
    "CallPosition",
    "Decision",
    "EngineConfig",
    "Enforcer",
    "GeneratorState",
    "Mode",
    "ModeEffect",
    "OpGrant",
    "Policy",
    "PolicyContext",
    "PolicySet",
    "ReplayReport",
    "ResourceOp",
    "SpawnEvent",
    "StackResolution",
    "ThreadRegistry",
    "Verdict",
    "audit_metrics",
    "authorize",
    "build_context",
    "check_access",
    "discover",
    "emit_trace",
    "merge",
    "observe",
    "parse_policy_file",
    "parse_trace",
    "register_spawn",
    "replay",
    "resolve_stack",
    "serialize_policy_set",
    "snapshot",
]
