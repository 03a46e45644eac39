"""Permission data model, policy file format and the per-policy access decision."""

from __future__ import annotations

import enum
import functools
import json
import posixpath
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from types import MappingProxyType


class ResourceOp(enum.Enum):
    FS_READ = "fs.read"
    FS_WRITE = "fs.write"
    NET_CONNECT = "net.connect"
    RUNTIME_EXEC = "runtime.exec"

    @property
    def wire(self) -> str:
        return self.value

    @classmethod
    def from_wire(cls, name: str) -> ResourceOp:
        try:
            return cls(name)
        except ValueError:
            raise ValueError(f"unknown resource operation: {name!r}") from None


# Fixed serialization order.
OP_ORDER: tuple[ResourceOp, ...] = tuple(ResourceOp)
_LIST_KINDS = ("allowed", "denied", "transitive")


class CallPosition(enum.Enum):
    DIRECT = "direct"
    TRANSITIVE = "transitive"


# --------------------------------------------------------------------------
# Errors
# --------------------------------------------------------------------------


class PolicyError(ValueError):
    """Base class for policy file and model errors."""


class ParseError(PolicyError):
    def __init__(self, message: str, position: int | None = None):
        self.position = position
        where = f" at offset {position}" if position is not None else ""
        super().__init__(f"{message}{where}")


class UnknownKeyError(PolicyError):
    def __init__(self, namespace: str, key: str):
        self.namespace = namespace
        self.key = key
        super().__init__(f"unknown key {key!r} in policy for {namespace!r}")


class PolicyTypeError(PolicyError, TypeError):
    """A policy value has the wrong JSON type (boolean gate or string list)."""

    def __init__(self, key: str, expected: str, namespace: str | None = None):
        self.key = key
        self.namespace = namespace
        ns = f" in policy for {namespace!r}" if namespace else ""
        super().__init__(f"key {key!r}{ns} must be {expected}")


class InvalidNamespaceError(PolicyError):
    def __init__(self, namespace: object):
        self.namespace = namespace
        super().__init__(f"invalid dependency namespace: {namespace!r}")


def validate_namespace(namespace: object) -> str:
    """Return ``namespace`` unchanged if it is a well-formed dotted prefix."""
    if not isinstance(namespace, str) or not namespace:
        raise InvalidNamespaceError(namespace)
    if any(ch.isspace() for ch in namespace):
        raise InvalidNamespaceError(namespace)
    if any(part == "" for part in namespace.split(".")):
        raise InvalidNamespaceError(namespace)
    return namespace


def _ordered_unique(items: Iterable[str]) -> tuple[str, ...]:
    return tuple(dict.fromkeys(items))


# --------------------------------------------------------------------------
# Model
# --------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class OpGrant:
    """Grant for one resource operation.

    ``coarse`` is the bare boolean gate. When it is false the lists are kept
    but never allow anything.
    """

    coarse: bool = False
    allowed: tuple[str, ...] = ()
    denied: tuple[str, ...] = ()
    transitive: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        for kind in _LIST_KINDS:
            object.__setattr__(self, kind, _ordered_unique(getattr(self, kind)))

    @property
    def is_empty(self) -> bool:
        return not (self.coarse or self.allowed or self.denied or self.transitive)

    @property
    def fine_grained(self) -> bool:
        return bool(self.allowed or self.transitive)


_EMPTY_GRANT = OpGrant()


@dataclass(frozen=True, slots=True)
class Policy:
    namespace: str
    grants: Mapping[ResourceOp, OpGrant] = field(default_factory=dict)

    def __post_init__(self) -> None:
        validate_namespace(self.namespace)
        # Empty grants are indistinguishable from absent ones; drop them so
        # structural equality matches semantic equality.
        kept = {
            op: self.grants[op]
            for op in OP_ORDER
            if op in self.grants and not self.grants[op].is_empty
        }
        object.__setattr__(self, "grants", MappingProxyType(kept))

    def grant(self, op: ResourceOp) -> OpGrant:
        return self.grants.get(op, _EMPTY_GRANT)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Policy):
            return NotImplemented
        return self.namespace == other.namespace and dict(self.grants) == dict(other.grants)

    def __hash__(self) -> int:
        return hash((self.namespace, tuple(self.grants.items())))


class PolicySet(Mapping[str, Policy]):
    """Immutable map from dependency namespace to its :class:`Policy`."""

    __slots__ = ("_policies",)

    def __init__(self, policies: Iterable[Policy] = ()):
        table: dict[str, Policy] = {}
        for policy in policies:
            if policy.namespace in table:
                raise PolicyError(f"duplicate namespace {policy.namespace!r}")
            table[policy.namespace] = policy
        self._policies = table

    def __getitem__(self, namespace: str) -> Policy:
        return self._policies[namespace]

    def __iter__(self) -> Iterator[str]:
        return iter(self._policies)

    def __len__(self) -> int:
        return len(self._policies)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, PolicySet):
            return self._policies == other._policies
        return NotImplemented

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"PolicySet({list(self._policies.values())!r})"


# --------------------------------------------------------------------------
# Policy file format
# --------------------------------------------------------------------------


def _reject_duplicate_keys(pairs: list[tuple[str, object]]) -> dict[str, object]:
    seen: dict[str, object] = {}
    for key, value in pairs:
        if key in seen:
            raise ParseError(f"duplicate key {key!r}")
        seen[key] = value
    return seen


def _split_key(key: str) -> tuple[ResourceOp, str | None] | None:
    for op in OP_ORDER:
        if key == op.wire:
            return op, None
        prefix = op.wire + "."
        if key.startswith(prefix) and key[len(prefix):] in _LIST_KINDS:
            return op, key[len(prefix):]
    return None


def _parse_policy(namespace: str, body: object) -> Policy:
    validate_namespace(namespace)
    if not isinstance(body, dict):
        raise PolicyTypeError(namespace, "an object")
    fields: dict[ResourceOp, dict[str, object]] = {}
    for key, value in body.items():
        split = _split_key(key)
        if split is None:
            raise UnknownKeyError(namespace, key)
        op, kind = split
        slot = fields.setdefault(op, {})
        if kind is None:
            if not isinstance(value, bool):
                raise PolicyTypeError(key, "a boolean", namespace)
            slot["coarse"] = value
        else:
            if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
                raise PolicyTypeError(key, "an array of strings", namespace)
            slot[kind] = tuple(value)
    return Policy(namespace, {op: OpGrant(**kw) for op, kw in fields.items()})


def parse_policy_file(text: str | bytes) -> PolicySet:
    """Parse a policy document into a :class:`PolicySet`.

    Parsing is strict: any key outside ``<op>``, ``<op>.allowed``,
    ``<op>.denied`` and ``<op>.transitive`` is rejected.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        doc = json.loads(text, object_pairs_hook=_reject_duplicate_keys)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.pos) from None
    if not isinstance(doc, dict):
        raise ParseError("policy document must be a JSON object", 0)
    return PolicySet(_parse_policy(ns, body) for ns, body in doc.items())


def policy_to_dict(policy: Policy) -> dict[str, object]:
    out: dict[str, object] = {}
    for op, grant in policy.grants.items():
        out[op.wire] = grant.coarse
        for kind in _LIST_KINDS:
            values = getattr(grant, kind)
            if values:
                out[f"{op.wire}.{kind}"] = list(values)
    return out


def serialize_policy_set(policies: Mapping[str, Policy]) -> str:
    """Canonical policy document: sorted namespaces, fixed op and sub-key order."""
    doc = {ns: policy_to_dict(policies[ns]) for ns in sorted(policies)}
    return json.dumps(doc, indent=2, ensure_ascii=False)


# --------------------------------------------------------------------------
# Decision
# --------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Decision:
    allowed: bool
    reason: str = ""

    def __bool__(self) -> bool:
        return self.allowed


ALLOW = Decision(True)
DENY_NOT_GRANTED = Decision(False, "op not granted")
DENY_OBJECT_DENIED = Decision(False, "object denied")
DENY_NOT_ALLOWED = Decision(False, "object not in allowed")
DENY_NOT_TRANSITIVE = Decision(False, "object not in transitive")


@functools.lru_cache(maxsize=65536)
def normalize_path(path: str) -> str:
    """Lexically normalize a path string; no filesystem access."""
    if path.startswith("/"):
        # posixpath keeps a leading "//"; collapse it like any other repeat.
        path = "/" + path.lstrip("/")
    return posixpath.normpath(path)


def _path_matches(entry: str, obj: str) -> bool:
    entry = normalize_path(entry)
    obj = normalize_path(obj)
    if entry == obj:
        return True
    if entry == "/":
        return obj.startswith("/")
    if entry == ".":
        return not obj.startswith("/") and obj != ".." and not obj.startswith("../")
    return obj.startswith(entry + "/")


def _split_host_port(target: str) -> tuple[str, str | None]:
    if target.startswith("["):
        # [v6addr]:port
        host, sep, rest = target.partition("]")
        if sep and rest.startswith(":"):
            return host + "]", rest[1:]
        return target, None
    host, sep, port = target.rpartition(":")
    if sep and host and ":" not in host:
        return host, port
    return target, None


def _net_matches(entry: str, obj: str) -> bool:
    if entry == obj:
        return True
    entry_host, entry_port = _split_host_port(entry)
    if entry_port is not None:
        return False
    obj_host, _ = _split_host_port(obj)
    return entry_host == obj_host


@functools.lru_cache(maxsize=4096)
def program_name(command: str) -> str:
    parts = command.split(None, 1)
    return parts[0] if parts else ""


def _exec_matches(entry: str, obj: str) -> bool:
    return program_name(entry) == program_name(obj)


_MATCHERS = {
    ResourceOp.FS_READ: _path_matches,
    ResourceOp.FS_WRITE: _path_matches,
    ResourceOp.NET_CONNECT: _net_matches,
    ResourceOp.RUNTIME_EXEC: _exec_matches,
}


def object_matches(op: ResourceOp, entries: Iterable[str], obj: str) -> bool:
    """True if ``obj`` is covered by any entry under the matching rule for ``op``."""
    match = _MATCHERS[op]
    return any(match(entry, obj) for entry in entries)


def check_access(policy: Policy, op: ResourceOp, obj: str, position: CallPosition) -> Decision:
    grant = policy.grants.get(op)
    if grant is None or not grant.coarse:
        return DENY_NOT_GRANTED
    if object_matches(op, grant.denied, obj):
        return DENY_OBJECT_DENIED
    if not grant.fine_grained or object_matches(op, grant.allowed, obj):
        return ALLOW
    if position is CallPosition.DIRECT:
        return DENY_NOT_ALLOWED
    if object_matches(op, grant.transitive, obj):
        return ALLOW
    return DENY_NOT_TRANSITIVE
