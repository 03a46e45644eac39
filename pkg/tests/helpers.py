"""Fixtures and independent oracles shared by the test modules.

The oracles here deliberately avoid the trie, the resolver and the engine so
they can be used to check them.
"""

from __future__ import annotations

import random

from ztdeps.context import PolicyContext
from ztdeps.engine import AccessEvent, SpawnEvent
from ztdeps.policy import CallPosition, OpGrant, Policy, PolicySet, ResourceOp, check_access

# Two-dependency sample policy used across the suites.
SAMPLE_POLICY = """
{
  "com.app.bar": {
    "fs.read": true,
    "fs.read.denied": ["/tmp", "/sensitive"]
  },
  "com.foo.baz": {
    "fs.write": true,
    "fs.write.allowed": ["app/logs"],
    "runtime.exec": true,
    "runtime.exec.transitive": ["whoami"]
  }
}
"""


def sample_policy_set() -> PolicySet:
    return PolicySet(
        [
            Policy("com.app.bar", {ResourceOp.FS_READ: OpGrant(True, denied=("/tmp", "/sensitive"))}),
            Policy(
                "com.foo.baz",
                {
                    ResourceOp.FS_WRITE: OpGrant(True, allowed=("app/logs",)),
                    ResourceOp.RUNTIME_EXEC: OpGrant(True, transitive=("whoami",)),
                },
            ),
        ]
    )


# --------------------------------------------------------------------------
# Oracles
# --------------------------------------------------------------------------


def linear_longest_prefix(namespaces, class_name: str) -> str | None:
    """Longest namespace that is a dot-component prefix of ``class_name``, by scan."""
    parts = class_name.split(".")
    best = None
    for ns in namespaces:
        ns_parts = ns.split(".")
        if parts[: len(ns_parts)] == ns_parts and (best is None or len(ns_parts) > len(best.split("."))):
            best = ns
    return best


def naive_resolve(policies, stack) -> list[tuple[str, CallPosition]]:
    """Per-frame scan, then drop misses and later duplicates."""
    hits = [linear_longest_prefix(policies, frame) for frame in stack]
    out: list[str] = []
    for ns in hits:
        if ns is not None and ns not in out:
            out.append(ns)
    return [(ns, CallPosition.DIRECT if i == 0 else CallPosition.TRANSITIVE) for i, ns in enumerate(out)]


def truth_table_allows(coarse: bool, denied: bool, any_allowed: bool, any_transitive: bool,
                       in_allowed: bool, in_transitive: bool, transitive_position: bool) -> bool:
    if not coarse or denied:
        return False
    if not any_allowed and not any_transitive:
        return True
    return in_allowed or (transitive_position and in_transitive)


def brute_force_verdict(policies, stack, inherited, op, obj):
    """(allowed, first denying namespace) with every dependency required to pass."""
    entries = naive_resolve(policies, stack)
    seen = {ns for ns, _ in entries}
    entries += [(ns, CallPosition.TRANSITIVE) for ns in inherited if ns not in seen]
    if not entries:
        return False, None
    failing = [ns for ns, pos in entries if not check_access(policies[ns], op, obj, pos)]
    return (not failing), (failing[0] if failing else None)


# --------------------------------------------------------------------------
# Random traces
# --------------------------------------------------------------------------

OBJECTS = {
    ResourceOp.FS_READ: ["/etc/hosts", "/data/a.csv", "/data/sub/b.csv", "app/data/x", "app/data", "conf/./app.yml"],
    ResourceOp.FS_WRITE: ["app/logs/run.log", "app/logs", "/tmp/out.bin", "build//out.json", "/var/log/x"],
    ResourceOp.NET_CONNECT: ["db.internal:5432", "db.internal:5433", "api.example:443", "cache.local", "10.0.0.1:80"],
    ResourceOp.RUNTIME_EXEC: ["whoami", "ls -la /", "ls /tmp", "git status", "docker load", "sh -c id"],
}


def random_namespaces(rng: random.Random, count: int) -> list[str]:
    out: list[str] = []
    while len(out) < count:
        if out and rng.random() < 0.2:
            # nested namespace, exercises longest-prefix resolution
            ns = f"{rng.choice(out)}.sub{rng.randrange(3)}"
        else:
            ns = f"{rng.choice(['com', 'org', 'io'])}.vendor{rng.randrange(40)}.lib{rng.randrange(5)}"
        if ns not in out:
            out.append(ns)
    return out


def random_frame(rng: random.Random, namespaces: list[str]) -> str:
    return f"{rng.choice(namespaces)}.impl.C{rng.randrange(4)}"


def unmanaged_frame(rng: random.Random) -> str:
    return rng.choice(["java.io.FileInputStream", "java.lang.ProcessBuilder", "com.example.app.Main", "com.example.app.Svc"])


def random_trace(
    rng: random.Random,
    namespaces: list[str],
    n_events: int,
    max_depth: int = 8,
    max_chain: int = 3,
    allow_empty_stacks: bool = False,
) -> list:
    """Random valid trace; spawn chains are at most ``max_chain`` spawns deep.

    Unless ``allow_empty_stacks`` is set, every access has at least one
    manifested dependency on its own stack or in its thread's spawn context.
    """
    events = []
    chain_depth = {0: 0}
    has_context = {0: False}
    next_thread = 1
    for seq in range(1, n_events + 1):
        parents = [t for t, d in chain_depth.items() if d < max_chain]
        if parents and rng.random() < 0.1:
            parent = rng.choice(parents)
            depth = rng.randint(1, max_depth)
            stack = [random_frame(rng, namespaces) if rng.random() < 0.6 else unmanaged_frame(rng) for _ in range(depth)]
            child = next_thread
            next_thread += 1
            events.append(SpawnEvent(seq, parent, child, tuple(stack)))
            chain_depth[child] = chain_depth[parent] + 1
            has_context[child] = has_context[parent] or any(not f.startswith(("java.", "com.example.")) for f in stack)
            continue
        thread = rng.choice(list(chain_depth))
        op = rng.choice(list(ResourceOp))
        depth = rng.randint(1, max_depth)
        stack = [random_frame(rng, namespaces) if rng.random() < 0.6 else unmanaged_frame(rng) for _ in range(depth)]
        if not allow_empty_stacks and not has_context[thread] and all(f.startswith(("java.", "com.example.")) for f in stack):
            stack[rng.randrange(depth)] = random_frame(rng, namespaces)
        events.append(AccessEvent(seq, thread, op, rng.choice(OBJECTS[op]), tuple(stack)))
    return events


def random_grant(rng: random.Random, op: ResourceOp) -> OpGrant:
    pool = OBJECTS[op]

    def pick():
        return tuple(rng.sample(pool, rng.randint(0, 2))) if rng.random() < 0.6 else ()

    return OpGrant(rng.random() < 0.8, pick(), pick() if rng.random() < 0.3 else (), pick())


def random_policy_set(rng: random.Random, max_policies: int = 6) -> PolicySet:
    namespaces = random_namespaces(rng, rng.randint(0, max_policies))
    policies = []
    for ns in namespaces:
        ops = rng.sample(list(ResourceOp), rng.randint(0, 4))
        policies.append(Policy(ns, {op: random_grant(rng, op) for op in ops}))
    return PolicySet(policies)


def context_of(policies) -> PolicyContext:
    return PolicyContext.from_policies(policies)
