"""Component fault trees: reusable element library, instantiation, composition.

Library format (``#`` comments):

    cft VoterCft {
      inport in_a on a;
      inport in_b on b;
      event internal prob=0.1 effect out_wrong=true;
      gate both_in AND(in_a, in_b);
      gate any OR(internal, both_in);
      outmode out_wrong on out_wrong;
      define out_wrong = any;
      host_failure out_wrong;           # hardware templates only
    }

Gate operands reference inports, events, or other gates of the same template.
``define`` wires an output failure mode to an internal node. ``host_failure``
designates the output failure mode that is OR-ed into the output failure
modes of every software component allocated to the owning hardware component.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .diagnostics import Diagnostic, ParseError, SafelineError
from .dsl import Parser
from .model import HARDWARE, SOFTWARE, Component, Hazard, SystemModel

AND = "AND"
OR = "OR"
VOTE = "VOTE"
FALSE = "FALSE"
EVENT = "EVENT"


class CftError(SafelineError):
    """Instantiation or composition failure (missing template, bad binding)."""


class CompositionCycleError(CftError):
    def __init__(self, cycle: list[str]):
        self.cycle = cycle
        super().__init__("cycle in failure propagation: " + " -> ".join(cycle))


@dataclass(frozen=True)
class BasicEvent:
    id: str
    prob: float | None = None  # fixed occurrence probability
    rate: float | None = None  # failures per hour, p = 1 - exp(-rate * t)
    effect: tuple[str, object] | None = None  # (signal, override value)

    def probability(self, mission_time: float) -> float:
        if self.prob is not None:
            return self.prob
        return 1.0 - math.exp(-self.rate * mission_time)

    def to_canon(self):
        effect = None
        if self.effect is not None:
            effect = [self.effect[0], self.effect[1]]
        return {"id": self.id, "prob": self.prob, "rate": self.rate, "effect": effect}

    def param_canon(self):
        return {"prob": self.prob, "rate": self.rate}


@dataclass(frozen=True)
class Gate:
    id: str
    kind: str  # AND | OR | VOTE
    operands: tuple[str, ...]
    k: int | None = None  # VOTE threshold

    def to_canon(self):
        return {"id": self.id, "kind": self.kind, "k": self.k, "operands": list(self.operands)}


@dataclass(frozen=True)
class CftElement:
    name: str
    inports: tuple[tuple[str, str], ...] = ()  # (port, bound input signal)
    outmodes: tuple[tuple[str, str], ...] = ()  # (mode, bound output signal)
    events: tuple[BasicEvent, ...] = ()
    gates: tuple[Gate, ...] = ()
    defines: tuple[tuple[str, str], ...] = ()  # (outmode, internal node)
    host_failure: str | None = None

    def node_kind(self, name: str) -> str | None:
        if any(p == name for p, _ in self.inports):
            return "inport"
        if any(e.id == name for e in self.events):
            return "event"
        if any(g.id == name for g in self.gates):
            return "gate"
        return None

    def to_canon(self, structural_only: bool = False):
        events = sorted((e.to_canon() for e in self.events), key=lambda e: e["id"])
        if structural_only:
            for e in events:
                del e["prob"]
                del e["rate"]
        return {
            "name": self.name,
            "inports": sorted(list(p) for p in self.inports),
            "outmodes": sorted(list(p) for p in self.outmodes),
            "events": events,
            "gates": sorted((g.to_canon() for g in self.gates), key=lambda g: g["id"]),
            "defines": sorted(list(d) for d in self.defines),
            "host_failure": self.host_failure,
        }


@dataclass(frozen=True)
class CftLibrary:
    templates: tuple[CftElement, ...] = ()

    def get(self, name: str) -> CftElement | None:
        for t in self.templates:
            if t.name == name:
                return t
        return None

    def to_canon(self, structural_only: bool = False):
        return {
            "templates": sorted(
                (t.to_canon(structural_only) for t in self.templates), key=lambda t: t["name"]
            )
        }

    def structural_canon(self):
        return self.to_canon(structural_only=True)


@dataclass(frozen=True)
class CftInstance:
    """A template instantiated for one component; event ids are qualified."""

    component: str
    template: CftElement

    def event_id(self, local: str) -> str:
        return f"{self.component}.{local}"

    def events(self) -> dict[str, BasicEvent]:
        return {self.event_id(e.id): e for e in self.template.events}


# ---------------------------------------------------------------------------
# Library parsing / printing


def _check_element(elem: CftElement, diags: list[Diagnostic]) -> None:
    names: list[str] = (
        [p for p, _ in elem.inports] + [e.id for e in elem.events] + [g.id for g in elem.gates]
    )
    for name in sorted({n for n in names if names.count(n) > 1}):
        diags.append(
            Diagnostic("error", f"duplicate node name {name!r} in template {elem.name}",
                       element=elem.name)
        )
    for g in elem.gates:
        if not g.operands:
            diags.append(
                Diagnostic("error", f"gate {g.id} in template {elem.name} has no operands",
                           element=elem.name)
            )
        if g.kind == VOTE and not (g.k is not None and 1 <= g.k <= len(g.operands)):
            diags.append(
                Diagnostic("error", f"VOTE gate {g.id} in template {elem.name} needs "
                           "1 <= k <= fan-in", element=elem.name)
            )
        for op in g.operands:
            if elem.node_kind(op) is None:
                diags.append(
                    Diagnostic("error", f"gate {g.id} references unknown node {op!r} in "
                               f"template {elem.name}", element=elem.name)
                )
    defined = {mode for mode, _ in elem.defines}
    for mode, _sig in elem.outmodes:
        if mode not in defined:
            diags.append(
                Diagnostic("error", f"output failure mode {mode} of template {elem.name} "
                           "has no definition", element=elem.name)
            )
    for mode, node in elem.defines:
        if not any(m == mode for m, _ in elem.outmodes):
            diags.append(
                Diagnostic("error", f"define of unknown output failure mode {mode!r} in "
                           f"template {elem.name}", element=elem.name)
            )
        if elem.node_kind(node) is None:
            diags.append(
                Diagnostic("error", f"define {mode} references unknown node {node!r} in "
                           f"template {elem.name}", element=elem.name)
            )
    if elem.host_failure is not None and not any(m == elem.host_failure for m, _ in elem.outmodes):
        diags.append(
            Diagnostic("error", f"host_failure references unknown output failure mode "
                       f"{elem.host_failure!r} in template {elem.name}", element=elem.name)
        )
    # Acyclicity of the internal graph.
    adj = {g.id: [op for op in g.operands if elem.node_kind(op) == "gate"] for g in elem.gates}
    state: dict[str, int] = {}

    def dfs(n: str) -> bool:
        state[n] = 1
        for ch in adj.get(n, ()):
            if state.get(ch) == 1 or (state.get(ch) is None and dfs(ch)):
                return True
        state[n] = 2
        return False

    for g in elem.gates:
        if state.get(g.id) is None and dfs(g.id):
            diags.append(
                Diagnostic("error", f"gate cycle in template {elem.name}", element=elem.name)
            )
            break


def _parse_value(p: Parser):
    tok = p.ident("value")
    if tok.value == "true":
        return True
    if tok.value == "false":
        return False
    return tok.value


def parse_library(text: str) -> CftLibrary:
    p = Parser(text)
    templates: list[CftElement] = []
    diags: list[Diagnostic] = []
    while not p.at_kind("eof"):
        p.expect("cft")
        name = p.ident("template name").value
        inports: list[tuple[str, str]] = []
        outmodes: list[tuple[str, str]] = []
        events: list[BasicEvent] = []
        gates: list[Gate] = []
        defines: list[tuple[str, str]] = []
        host_failure: str | None = None
        p.expect("{")
        while not p.accept("}"):
            if p.accept("inport"):
                port = p.ident("port name").value
                p.expect("on")
                inports.append((port, p.ident("signal name").value))
            elif p.accept("outmode"):
                mode = p.ident("failure mode name").value
                p.expect("on")
                outmodes.append((mode, p.ident("signal name").value))
            elif p.accept("event"):
                eid = p.ident("event id").value
                prob = rate = None
                if p.accept("prob"):
                    p.expect("=")
                    prob = p.number()
                elif p.accept("rate"):
                    p.expect("=")
                    rate = p.number()
                else:
                    raise p.fail("'prob' or 'rate'")
                effect = None
                if p.accept("effect"):
                    sig = p.ident("signal name").value
                    p.expect("=")
                    effect = (sig, _parse_value(p))
                if prob is not None and not 0.0 <= prob <= 1.0:
                    diags.append(
                        Diagnostic("error", f"event {eid} probability outside [0,1]",
                                   element=name)
                    )
                if rate is not None and rate < 0.0:
                    diags.append(
                        Diagnostic("error", f"event {eid} failure rate must be >= 0",
                                   element=name)
                    )
                events.append(BasicEvent(eid, prob=prob, rate=rate, effect=effect))
            elif p.accept("gate"):
                gid = p.ident("gate id").value
                kind_tok = p.ident("'AND', 'OR' or 'VOTE'")
                k = None
                if kind_tok.value == VOTE:
                    k = int(p.number())
                elif kind_tok.value not in (AND, OR):
                    raise ParseError(
                        [Diagnostic("error", f"unknown gate kind {kind_tok.value!r}",
                                    element=name, line=kind_tok.line, col=kind_tok.col)]
                    )
                p.expect("(")
                operands = [p.ident("operand").value]
                while p.accept(","):
                    operands.append(p.ident("operand").value)
                p.expect(")")
                gates.append(Gate(gid, kind_tok.value, tuple(operands), k=k))
            elif p.accept("define"):
                mode = p.ident("failure mode name").value
                p.expect("=")
                defines.append((mode, p.ident("node name").value))
            elif p.accept("host_failure"):
                host_failure = p.ident("failure mode name").value
            else:
                raise p.fail(
                    "'inport', 'outmode', 'event', 'gate', 'define', 'host_failure' or '}'"
                )
            p.expect(";")
        elem = CftElement(
            name=name,
            inports=tuple(inports),
            outmodes=tuple(outmodes),
            events=tuple(events),
            gates=tuple(gates),
            defines=tuple(defines),
            host_failure=host_failure,
        )
        if any(t.name == name for t in templates):
            diags.append(Diagnostic("error", f"duplicate template name {name!r}", element=name))
        _check_element(elem, diags)
        templates.append(elem)
    if diags:
        raise ParseError(diags)
    return CftLibrary(tuple(templates))


def print_library(lib: CftLibrary) -> str:
    out: list[str] = []
    for t in sorted(lib.templates, key=lambda t: t.name):
        out.append(f"cft {t.name} {{")
        for port, sig in t.inports:
            out.append(f"  inport {port} on {sig};")
        for mode, sig in t.outmodes:
            out.append(f"  outmode {mode} on {sig};")
        for e in t.events:
            spec = f"prob={e.prob}" if e.prob is not None else f"rate={e.rate}"
            line = f"  event {e.id} {spec}"
            if e.effect is not None:
                val = {True: "true", False: "false"}.get(e.effect[1], e.effect[1])
                line += f" effect {e.effect[0]}={val}"
            out.append(line + ";")
        for g in t.gates:
            kind = f"VOTE {g.k}" if g.kind == VOTE else g.kind
            out.append(f"  gate {g.id} {kind}({', '.join(g.operands)});")
        for mode, node in t.defines:
            out.append(f"  define {mode} = {node};")
        if t.host_failure:
            out.append(f"  host_failure {t.host_failure};")
        out.append("}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Instantiation


def instantiate(m: SystemModel, lib: CftLibrary) -> dict[str, CftInstance]:
    """One CFT instance per component carrying a template reference.

    Raises CftError when a template is missing or a port binds to a signal
    the component does not declare.
    """
    instances: dict[str, CftInstance] = {}
    for comp in m.components:
        if comp.cft_ref is None:
            continue
        template = lib.get(comp.cft_ref)
        if template is None:
            raise CftError(
                f"component {comp.id}: CFT template {comp.cft_ref!r} not found in library"
            )
        for port, sig in template.inports:
            if comp.signal(sig, "in") is None:
                raise CftError(
                    f"component {comp.id}: inport {port} of template {template.name} binds to "
                    f"missing input signal {sig!r}"
                )
        for mode, sig in template.outmodes:
            if comp.signal(sig, "out") is None:
                raise CftError(
                    f"component {comp.id}: outmode {mode} of template {template.name} binds to "
                    f"missing output signal {sig!r}"
                )
        instances[comp.id] = CftInstance(comp.id, template)
    return instances


def event_probabilities(
    instances: dict[str, CftInstance], mission_time: float
) -> dict[str, float]:
    """Occurrence probability per instance-qualified basic event."""
    probs: dict[str, float] = {}
    for inst in instances.values():
        for eid, event in inst.events().items():
            probs[eid] = event.probability(mission_time)
    return probs


def fault_effects(
    instances: dict[str, CftInstance]
) -> dict[str, tuple[str, str, object] | None]:
    """Per event: (component, signal, override value) or None when unmapped."""
    effects: dict[str, tuple[str, str, object] | None] = {}
    for inst in instances.values():
        for eid, event in inst.events().items():
            if event.effect is None:
                effects[eid] = None
            else:
                effects[eid] = (inst.component, event.effect[0], event.effect[1])
    return effects


# ---------------------------------------------------------------------------
# System fault tree


@dataclass(frozen=True)
class Node:
    id: str
    kind: str  # AND | OR | VOTE | EVENT | FALSE
    children: tuple[str, ...] = ()
    k: int | None = None

    def to_canon(self):
        return {"id": self.id, "kind": self.kind, "k": self.k, "children": list(self.children)}


@dataclass(frozen=True)
class SystemFaultTree:
    hazard: str
    top: str
    nodes: dict[str, Node]
    trace: dict[str, tuple[str, str]]  # node id -> (component instance, element node)

    def events(self) -> list[str]:
        return sorted(n.id for n in self.nodes.values() if n.kind == EVENT)

    def components(self) -> set[str]:
        return {comp for comp, _ in self.trace.values()}

    def to_canon(self):
        return {
            "hazard": self.hazard,
            "top": self.top,
            "nodes": sorted((n.to_canon() for n in self.nodes.values()), key=lambda n: n["id"]),
            "trace": {nid: list(origin) for nid, origin in sorted(self.trace.items())},
        }


def compose(
    m: SystemModel, instances: dict[str, CftInstance], hazard: Hazard
) -> tuple[SystemFaultTree, list[Diagnostic]]:
    """Flatten per-component fault trees into one DAG for the hazard.

    Input failure ports are replaced by the failure-mode subgraph of the
    connected upstream component; the host's designated failure mode is OR-ed
    into every output failure mode of hosted software components; unconnected
    input ports become constant FALSE with a warning.
    """
    nodes: dict[str, Node] = {}
    trace: dict[str, tuple[str, str]] = {}
    diags: list[Diagnostic] = []
    visiting: list[str] = []
    done: set[str] = set()

    def add_node(nid: str, kind: str, origin: tuple[str, str], children=(), k=None) -> str:
        nodes[nid] = Node(nid, kind, tuple(children), k=k)
        trace[nid] = origin
        return nid

    def host_mode_node(comp: Component) -> str | None:
        # Designated host failure mode for a software component's allocation.
        if comp.kind != SOFTWARE or comp.allocation is None:
            return None
        host_inst = instances.get(comp.allocation)
        if host_inst is None or host_inst.template.host_failure is None:
            return None
        return outmode_node(comp.allocation, host_inst.template.host_failure)

    def outmode_node(cid: str, mode: str) -> str:
        nid = f"{cid}/{mode}"
        if nid in done:
            return nid
        if nid in visiting:
            raise CompositionCycleError(visiting[visiting.index(nid):] + [nid])
        inst = instances.get(cid)
        if inst is None:
            raise CftError(f"hazard {hazard.id}: component {cid} has no CFT instance")
        defines = dict(inst.template.defines)
        if mode not in defines:
            raise CftError(
                f"hazard {hazard.id}: component {cid} has no output failure mode {mode!r}"
            )
        visiting.append(nid)
        children = [internal_node(cid, defines[mode])]
        host = host_mode_node(m.component(cid))
        if host is not None:
            children.append(host)
        add_node(nid, OR, (cid, mode), children)
        visiting.pop()
        done.add(nid)
        return nid

    def internal_node(cid: str, local: str) -> str:
        inst = instances[cid]
        kind = inst.template.node_kind(local)
        if kind == "event":
            nid = f"{cid}.{local}"
            if nid not in nodes:
                add_node(nid, EVENT, (cid, local))
            return nid
        if kind == "gate":
            nid = f"{cid}/{local}"
            if nid in nodes:
                return nid
            gate = next(g for g in inst.template.gates if g.id == local)
            children = [internal_node(cid, op) for op in gate.operands]
            return add_node(nid, gate.kind, (cid, local), children, k=gate.k)
        if kind == "inport":
            return inport_node(cid, local)
        raise CftError(f"component {cid}: unknown CFT node {local!r}")

    def inport_node(cid: str, port: str) -> str:
        inst = instances[cid]
        signal = dict(inst.template.inports)[port]
        conn = m.incoming(cid, signal)
        nid = f"{cid}/{port}"
        if conn is not None:
            upstream = instances.get(conn.from_component)
            if upstream is not None:
                candidates = [
                    mode for mode, sig in upstream.template.outmodes if sig == conn.from_signal
                ]
                if len(candidates) > 1:
                    # Ambiguity resolved by failure-mode name match.
                    candidates = [c for c in candidates if c == port]
                if len(candidates) == 1:
                    return outmode_node(conn.from_component, candidates[0])
                if len(candidates) > 1:
                    raise CftError(
                        f"ambiguous failure-mode mapping for {cid}.{port}: upstream "
                        f"{conn.from_component}.{conn.from_signal} exposes several modes"
                    )
        diags.append(
            Diagnostic(
                "warning",
                f"input failure port {cid}.{port} is unconnected; treated as constant FALSE",
                element=cid,
            )
        )
        if nid not in nodes:
            add_node(nid, FALSE, (cid, port))
        return nid

    top_comp = m.component(hazard.top_component)
    if top_comp is None:
        raise CftError(f"hazard {hazard.id}: top event component {hazard.top_component!r} missing")
    top = outmode_node(hazard.top_component, hazard.top_failure_mode)
    return SystemFaultTree(hazard.id, top, nodes, trace), diags


def evaluate(t: SystemFaultTree, assignment: dict[str, bool]) -> bool:
    """Boolean value of the top node under a total basic-event assignment."""
    memo: dict[str, bool] = {}

    def rec(nid: str) -> bool:
        if nid in memo:
            return memo[nid]
        node = t.nodes[nid]
        if node.kind == EVENT:
            if nid not in assignment:
                raise CftError(f"assignment missing basic event {nid!r}")
            val = assignment[nid]
        elif node.kind == FALSE:
            val = False
        elif node.kind == AND:
            val = all(rec(c) for c in node.children)
        elif node.kind == OR:
            val = any(rec(c) for c in node.children)
        elif node.kind == VOTE:
            val = sum(rec(c) for c in node.children) >= node.k
        else:  # pragma: no cover - node kinds are closed
            raise CftError(f"unknown node kind {node.kind!r}")
        memo[nid] = val
        return val

    return rec(t.top)


def tree_from_canon(data: dict) -> SystemFaultTree:
    """Rebuild a SystemFaultTree from its canonical (artifact) form."""
    nodes = {
        n["id"]: Node(n["id"], n["kind"], tuple(n["children"]), k=n["k"])
        for n in data["nodes"]
    }
    trace = {nid: (origin[0], origin[1]) for nid, origin in data["trace"].items()}
    return SystemFaultTree(data["hazard"], data["top"], nodes, trace)
