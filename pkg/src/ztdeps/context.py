"""Prefix trie resolving class names on a call stack to dependency policies."""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass

from ztdeps.policy import CallPosition, Policy, PolicyError, validate_namespace


class _Node:
    __slots__ = ("children", "namespace", "policy")

    def __init__(self) -> None:
        self.children: dict[str, _Node] = {}
        self.namespace: str | None = None
        self.policy: Policy | None = None


class PolicyContext:
    """Component trie over dot-separated dependency namespaces.

    A lookup walks one node per component of the class name and remembers the
    deepest node carrying a policy, so its cost does not depend on how many
    namespaces are registered. The trie is not mutated after construction.
    """

    __slots__ = ("_root", "_count", "visits")

    def __init__(self, entries: Iterable[tuple[str, Policy]] = ()):
        self._root = _Node()
        self._count = 0
        # Instrumentation only; incremented per node touched by lookup().
        self.visits = 0
        for namespace, policy in entries:
            self._insert(namespace, policy)

    @classmethod
    def from_policies(cls, policies: Mapping[str, Policy]) -> PolicyContext:
        return cls((ns, policies[ns]) for ns in policies)

    def _insert(self, namespace: str, policy: Policy) -> None:
        validate_namespace(namespace)
        node = self._root
        for part in namespace.split("."):
            child = node.children.get(part)
            if child is None:
                child = node.children[part] = _Node()
            node = child
        if node.namespace is not None:
            raise PolicyError(f"duplicate namespace {namespace!r}")
        node.namespace = namespace
        node.policy = policy
        self._count += 1

    def __len__(self) -> int:
        return self._count

    def __contains__(self, namespace: object) -> bool:
        if not isinstance(namespace, str):
            return False
        node = self._root
        for part in namespace.split("."):
            node = node.children.get(part)
            if node is None:
                return False
        return node.namespace is not None

    def namespaces(self) -> list[str]:
        out: list[str] = []
        stack = [self._root]
        while stack:
            node = stack.pop()
            if node.namespace is not None:
                out.append(node.namespace)
            stack.extend(node.children.values())
        return sorted(out)

    def lookup(self, class_name: str) -> tuple[str, Policy] | None:
        """Longest registered namespace that is a component prefix of ``class_name``."""
        node = self._root
        best: _Node | None = None
        visited = 0
        for part in class_name.split("."):
            node = node.children.get(part)
            if node is None:
                break
            visited += 1
            if node.namespace is not None:
                best = node
        self.visits += visited
        if best is None:
            return None
        return best.namespace, best.policy  # type: ignore[return-value]


def build_context(policies: Mapping[str, Policy]) -> PolicyContext:
    return PolicyContext.from_policies(policies)


@dataclass(frozen=True, slots=True)
class ResolvedDep:
    namespace: str
    policy: Policy
    position: CallPosition


@dataclass(frozen=True, slots=True)
class StackResolution:
    entries: tuple[ResolvedDep, ...]

    @property
    def any_policy_found(self) -> bool:
        return bool(self.entries)

    @property
    def namespaces(self) -> list[str]:
        return [e.namespace for e in self.entries]

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)


def resolve_stack(ctx: PolicyContext, stack: Sequence[str]) -> StackResolution:
    """Map frames (innermost first) to their dependencies, one entry per namespace.

    Frames that belong to no registered namespace are skipped. The first
    surviving entry is the direct caller; every other one is transitive.
    """
    seen: set[str] = set()
    entries: list[ResolvedDep] = []
    for frame in stack:
        hit = ctx.lookup(frame)
        if hit is None or hit[0] in seen:
            continue
        namespace, policy = hit
        seen.add(namespace)
        position = CallPosition.DIRECT if not entries else CallPosition.TRANSITIVE
        entries.append(ResolvedDep(namespace, policy, position))
    return StackResolution(tuple(entries))
