"""System architecture and requirements model: types, DSL, validation.

Format (one file, UTF-8, ``#`` comments):

    model M version "1";
    component SensorA kind=software {
      out val: enum(ok, invalid);
      allocate Ecu;
      behavior SensorBeh;
      cft SensorCft;
    }
    connect SensorA.val -> Voter.a;
    hazard H1 top=Voter.out_wrong "voter output wrong";
    requirement R1 MaxTopEventProbability(H1, bound=0.2, mission_time=1) on [Voter];
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .diagnostics import Diagnostic, ParseError
from .dsl import Parser

SOFTWARE = "software"
HARDWARE = "hardware"

MAX_TOP_EVENT_PROBABILITY = "MaxTopEventProbability"
MIN_CUT_SET_ORDER = "MinCutSetOrder"
MITIGATION_REQUIRED = "MitigationRequired"
REQUIREMENT_KINDS = (MAX_TOP_EVENT_PROBABILITY, MIN_CUT_SET_ORDER, MITIGATION_REQUIRED)


@dataclass(frozen=True)
class SignalType:
    kind: str  # "bool" | "enum"
    literals: tuple[str, ...] = ()

    def default(self):
        return False if self.kind == "bool" else self.literals[0]

    def domain(self) -> tuple:
        return (False, True) if self.kind == "bool" else self.literals

    def accepts(self, value) -> bool:
        if self.kind == "bool":
            return isinstance(value, bool)
        return value in self.literals

    def to_canon(self):
        if self.kind == "bool":
            return "bool"
        return {"enum": sorted(self.literals)}

    def __str__(self) -> str:
        if self.kind == "bool":
            return "bool"
        return "enum(" + ", ".join(self.literals) + ")"


BOOL = SignalType("bool")


@dataclass(frozen=True)
class Signal:
    name: str
    type: SignalType

    def to_canon(self):
        return {"name": self.name, "type": self.type.to_canon()}


@dataclass(frozen=True)
class Component:
    id: str
    kind: str  # SOFTWARE | HARDWARE
    inputs: tuple[Signal, ...] = ()
    outputs: tuple[Signal, ...] = ()
    allocation: str | None = None
    behavior: str | None = None
    cft_ref: str | None = None

    def signal(self, name: str, direction: str | None = None) -> Signal | None:
        pools = {"in": self.inputs, "out": self.outputs}
        for d, pool in pools.items():
            if direction in (None, d):
                for sig in pool:
                    if sig.name == name:
                        return sig
        return None

    def to_canon(self):
        return {
            "id": self.id,
            "kind": self.kind,
            "inputs": sorted((s.to_canon() for s in self.inputs), key=lambda s: s["name"]),
            "outputs": sorted((s.to_canon() for s in self.outputs), key=lambda s: s["name"]),
            "allocation": self.allocation,
            "behavior": self.behavior,
            "cft_ref": self.cft_ref,
        }


@dataclass(frozen=True)
class Connection:
    from_component: str
    from_signal: str
    to_component: str
    to_signal: str
    line: int | None = None
    col: int | None = None

    def key(self) -> tuple[str, str, str, str]:
        return (self.from_component, self.from_signal, self.to_component, self.to_signal)

    def to_canon(self):
        return {
            "from": [self.from_component, self.from_signal],
            "to": [self.to_component, self.to_signal],
        }


@dataclass(frozen=True)
class Hazard:
    id: str
    description: str
    top_component: str
    top_failure_mode: str

    def to_canon(self):
        return {
            "id": self.id,
            "description": self.description,
            "top": [self.top_component, self.top_failure_mode],
        }


@dataclass(frozen=True)
class SafetyRequirement:
    id: str
    kind: str
    hazard: str
    bound: float | None = None
    mission_time: float | None = None
    min_order: int | None = None
    detection_deadline: int | None = None
    allocated_to: tuple[str, ...] = ()

    def to_canon(self):
        return {
            "id": self.id,
            "kind": self.kind,
            "hazard": self.hazard,
            "bound": self.bound,
            "mission_time": self.mission_time,
            "min_order": self.min_order,
            "detection_deadline": self.detection_deadline,
            "allocated_to": sorted(self.allocated_to),
        }


@dataclass(frozen=True)
class SystemModel:
    id: str = "model"
    version: str = ""
    components: tuple[Component, ...] = ()
    connections: tuple[Connection, ...] = ()
    hazards: tuple[Hazard, ...] = ()
    requirements: tuple[SafetyRequirement, ...] = ()

    def component(self, cid: str) -> Component | None:
        for c in self.components:
            if c.id == cid:
                return c
        return None

    def hazard(self, hid: str) -> Hazard | None:
        for h in self.hazards:
            if h.id == hid:
                return h
        return None

    def incoming(self, component_id: str, signal: str) -> Connection | None:
        for conn in self.connections:
            if conn.to_component == component_id and conn.to_signal == signal:
                return conn
        return None

    def to_canon(self):
        return {
            "id": self.id,
            "version": self.version,
            "components": sorted((c.to_canon() for c in self.components), key=lambda c: c["id"]),
            "connections": sorted(
                (c.to_canon() for c in self.connections), key=lambda c: (c["from"], c["to"])
            ),
            "hazards": sorted((h.to_canon() for h in self.hazards), key=lambda h: h["id"]),
            "requirements": sorted(
                (r.to_canon() for r in self.requirements), key=lambda r: r["id"]
            ),
        }

    def structural_canon(self):
        """Canonical form restricted to what fault-tree composition consumes.

        Excludes requirements and hazard descriptions, so the composed-tree
        fingerprint is stable under requirement or wording edits.
        """
        canon = self.to_canon()
        del canon["requirements"]
        del canon["version"]
        canon["hazards"] = [{"id": h["id"], "top": h["top"]} for h in canon["hazards"]]
        return canon


# ---------------------------------------------------------------------------
# Parsing


def _parse_signal_type(p: Parser) -> SignalType:
    tok = p.ident("signal type")
    if tok.value == "bool":
        return BOOL
    if tok.value == "enum":
        p.expect("(")
        literals = [p.ident("enumeration literal").value]
        while p.accept(","):
            literals.append(p.ident("enumeration literal").value)
        p.expect(")")
        return SignalType("enum", tuple(literals))
    raise ParseError(
        [Diagnostic("error", f"unknown signal type {tok.value!r}", line=tok.line, col=tok.col)]
    )


def _parse_component(p: Parser) -> Component:
    name = p.ident("component name")
    p.expect("kind")
    p.expect("=")
    kind_tok = p.ident("'software' or 'hardware'")
    if kind_tok.value not in (SOFTWARE, HARDWARE):
        raise ParseError(
            [
                Diagnostic(
                    "error",
                    f"component kind must be software or hardware, got {kind_tok.value!r}",
                    element=name.value,
                    line=kind_tok.line,
                    col=kind_tok.col,
                )
            ]
        )
    inputs: list[Signal] = []
    outputs: list[Signal] = []
    allocation = behavior = cft_ref = None
    p.expect("{")
    while not p.accept("}"):
        if p.accept("in"):
            sig = p.ident("signal name")
            p.expect(":")
            inputs.append(Signal(sig.value, _parse_signal_type(p)))
        elif p.accept("out"):
            sig = p.ident("signal name")
            p.expect(":")
            outputs.append(Signal(sig.value, _parse_signal_type(p)))
        elif p.accept("allocate"):
            allocation = p.ident("hardware component id").value
        elif p.accept("behavior"):
            behavior = p.ident("state machine id").value
        elif p.accept("cft"):
            cft_ref = p.ident("CFT template name").value
        else:
            raise p.fail("'in', 'out', 'allocate', 'behavior', 'cft' or '}'")
        p.expect(";")
    return Component(
        id=name.value,
        kind=kind_tok.value,
        inputs=tuple(inputs),
        outputs=tuple(outputs),
        allocation=allocation,
        behavior=behavior,
        cft_ref=cft_ref,
    )


def _parse_requirement(p: Parser) -> SafetyRequirement:
    rid = p.ident("requirement id").value
    kind_tok = p.ident("requirement kind")
    if kind_tok.value not in REQUIREMENT_KINDS:
        raise ParseError(
            [
                Diagnostic(
                    "error",
                    f"unknown requirement kind {kind_tok.value!r}",
                    element=rid,
                    line=kind_tok.line,
                    col=kind_tok.col,
                )
            ]
        )
    p.expect("(")
    hazard = p.ident("hazard id").value
    params: dict[str, float] = {}
    while p.accept(","):
        key = p.ident("parameter name").value
        p.expect("=")
        params[key] = p.number()
    p.expect(")")
    allocated: list[str] = []
    if p.accept("on"):
        p.expect("[")
        if not p.at("]"):
            allocated.append(p.ident("component id").value)
            while p.accept(","):
                allocated.append(p.ident("component id").value)
        p.expect("]")
    p.expect(";")

    expected = {
        MAX_TOP_EVENT_PROBABILITY: {"bound", "mission_time"},
        MIN_CUT_SET_ORDER: {"min_order"},
        MITIGATION_REQUIRED: {"detection_deadline"},
    }[kind_tok.value]
    if set(params) != expected:
        raise ParseError(
            [
                Diagnostic(
                    "error",
                    f"requirement {kind_tok.value} takes parameters {sorted(expected)}, "
                    f"got {sorted(params)}",
                    element=rid,
                    line=kind_tok.line,
                    col=kind_tok.col,
                )
            ]
        )
    return SafetyRequirement(
        id=rid,
        kind=kind_tok.value,
        hazard=hazard,
        bound=params.get("bound"),
        mission_time=params.get("mission_time"),
        min_order=int(params["min_order"]) if "min_order" in params else None,
        detection_deadline=(
            int(params["detection_deadline"]) if "detection_deadline" in params else None
        ),
        allocated_to=tuple(allocated),
    )


def parse_model(text: str) -> SystemModel:
    """Parse model-DSL source into a SystemModel.

    Raises ParseError with positioned diagnostics on syntax errors, duplicate
    identifiers, or references to undeclared components/signals.
    """
    p = Parser(text)
    model_id, version = "model", ""
    components: list[Component] = []
    connections: list[Connection] = []
    hazards: list[Hazard] = []
    requirements: list[SafetyRequirement] = []
    diags: list[Diagnostic] = []

    if p.accept("model"):
        model_id = p.ident("model id").value
        if p.accept("version"):
            version = p.string()
        p.expect(";")

    while not p.at_kind("eof"):
        tok = p.cur
        if p.accept("component"):
            comp = _parse_component(p)
            if any(c.id == comp.id for c in components):
                diags.append(
                    Diagnostic(
                        "error",
                        f"duplicate component id {comp.id!r}",
                        element=comp.id,
                        line=tok.line,
                        col=tok.col,
                    )
                )
            components.append(comp)
        elif p.accept("connect"):
            fc = p.ident("component id")
            p.expect(".")
            fs = p.ident("signal name")
            p.expect("->")
            tc = p.ident("component id")
            p.expect(".")
            ts = p.ident("signal name")
            p.expect(";")
            connections.append(
                Connection(fc.value, fs.value, tc.value, ts.value, line=fc.line, col=fc.col)
            )
        elif p.accept("hazard"):
            hid = p.ident("hazard id").value
            p.expect("top")
            p.expect("=")
            comp = p.ident("component id").value
            p.expect(".")
            mode = p.ident("failure mode name").value
            desc = p.string() if p.at_kind("string") else ""
            p.expect(";")
            if any(h.id == hid for h in hazards):
                diags.append(
                    Diagnostic("error", f"duplicate hazard id {hid!r}", element=hid,
                               line=tok.line, col=tok.col)
                )
            hazards.append(Hazard(hid, desc, comp, mode))
        elif p.accept("requirement"):
            req = _parse_requirement(p)
            if any(r.id == req.id for r in requirements):
                diags.append(
                    Diagnostic("error", f"duplicate requirement id {req.id!r}", element=req.id,
                               line=tok.line, col=tok.col)
                )
            requirements.append(req)
        else:
            raise p.fail("'component', 'connect', 'hazard' or 'requirement'")

    # Reference resolution for connections: unknown components/signals are
    # reported at their source position.
    by_id = {c.id: c for c in components}
    for conn in connections:
        for cid, sig, direction in (
            (conn.from_component, conn.from_signal, "out"),
            (conn.to_component, conn.to_signal, "in"),
        ):
            comp = by_id.get(cid)
            if comp is None:
                diags.append(
                    Diagnostic("error", f"unknown component {cid!r}", element=cid,
                               line=conn.line, col=conn.col)
                )
            elif comp.signal(sig, direction) is None:
                diags.append(
                    Diagnostic(
                        "error",
                        f"unknown signal {cid}.{sig} (expected an {direction}put signal)",
                        element=cid,
                        line=conn.line,
                        col=conn.col,
                    )
                )

    if diags:
        raise ParseError(diags)
    return SystemModel(
        id=model_id,
        version=version,
        components=tuple(components),
        connections=tuple(connections),
        hazards=tuple(hazards),
        requirements=tuple(requirements),
    )


# ---------------------------------------------------------------------------
# Printing (round-trip source form)


def print_model(m: SystemModel) -> str:
    out: list[str] = []
    if m.id != "model" or m.version:
        out.append(f'model {m.id} version "{m.version}";')
    for c in sorted(m.components, key=lambda c: c.id):
        out.append(f"component {c.id} kind={c.kind} {{")
        for sig in c.inputs:
            out.append(f"  in {sig.name}: {sig.type};")
        for sig in c.outputs:
            out.append(f"  out {sig.name}: {sig.type};")
        if c.allocation:
            out.append(f"  allocate {c.allocation};")
        if c.behavior:
            out.append(f"  behavior {c.behavior};")
        if c.cft_ref:
            out.append(f"  cft {c.cft_ref};")
        out.append("}")
    for conn in sorted(m.connections, key=lambda c: c.key()):
        out.append(
            f"connect {conn.from_component}.{conn.from_signal} -> "
            f"{conn.to_component}.{conn.to_signal};"
        )
    for h in sorted(m.hazards, key=lambda h: h.id):
        out.append(f'hazard {h.id} top={h.top_component}.{h.top_failure_mode} "{h.description}";')
    for r in sorted(m.requirements, key=lambda r: r.id):
        params = {
            MAX_TOP_EVENT_PROBABILITY: f"bound={r.bound}, mission_time={r.mission_time}",
            MIN_CUT_SET_ORDER: f"min_order={r.min_order}",
            MITIGATION_REQUIRED: f"detection_deadline={r.detection_deadline}",
        }[r.kind]
        line = f"requirement {r.id} {r.kind}({r.hazard}, {params})"
        if r.allocated_to:
            line += " on [" + ", ".join(r.allocated_to) + "]"
        out.append(line + ";")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Validation


def validate(m: SystemModel) -> list[Diagnostic]:
    """Check all SystemModel invariants. Total: returns diagnostics, never raises."""
    diags: list[Diagnostic] = []
    by_id: dict[str, Component] = {}
    for c in m.components:
        if c.id in by_id:
            diags.append(Diagnostic("error", f"duplicate component id {c.id!r}", element=c.id))
        by_id[c.id] = c

    for c in m.components:
        names = [s.name for s in c.inputs] + [s.name for s in c.outputs]
        for name in sorted({n for n in names if names.count(n) > 1}):
            diags.append(
                Diagnostic("error", f"duplicate signal name {name!r} in component {c.id}",
                           element=c.id)
            )
        if c.kind == SOFTWARE:
            if c.allocation is None:
                diags.append(
                    Diagnostic("error", f"software component {c.id} has no allocation",
                               element=c.id)
                )
            else:
                host = by_id.get(c.allocation)
                if host is None or host.kind != HARDWARE:
                    diags.append(
                        Diagnostic(
                            "error",
                            f"allocation of {c.id} does not reference a hardware component",
                            element=c.id,
                        )
                    )
        elif c.allocation is not None:
            diags.append(
                Diagnostic("error", f"hardware component {c.id} must not carry an allocation",
                           element=c.id)
            )

    seen_inputs: set[tuple[str, str]] = set()
    for conn in m.connections:
        src = by_id.get(conn.from_component)
        dst = by_id.get(conn.to_component)
        label = (
            f"{conn.from_component}.{conn.from_signal} -> {conn.to_component}.{conn.to_signal}"
        )
        if src is None or src.signal(conn.from_signal, "out") is None:
            diags.append(
                Diagnostic("error", f"connection source {conn.from_component}.{conn.from_signal} "
                           "does not exist", element=label)
            )
            continue
        if dst is None or dst.signal(conn.to_signal, "in") is None:
            diags.append(
                Diagnostic("error", f"connection target {conn.to_component}.{conn.to_signal} "
                           "does not exist", element=label)
            )
            continue
        if src.signal(conn.from_signal, "out").type != dst.signal(conn.to_signal, "in").type:
            diags.append(Diagnostic("error", f"signal types differ across {label}", element=label))
        key = (conn.to_component, conn.to_signal)
        if key in seen_inputs:
            diags.append(
                Diagnostic("error",
                           f"input {conn.to_component}.{conn.to_signal} has multiple incoming "
                           "connections", element=label)
            )
        seen_inputs.add(key)

    hazard_ids = {h.id for h in m.hazards}
    for h in m.hazards:
        if h.top_component not in by_id:
            diags.append(
                Diagnostic("error", f"hazard {h.id} top event references unknown component "
                           f"{h.top_component!r}", element=h.id)
            )

    for r in m.requirements:
        if r.hazard not in hazard_ids:
            diags.append(
                Diagnostic("error", f"requirement {r.id} references unknown hazard {r.hazard!r}",
                           element=r.id)
            )
        for cid in r.allocated_to:
            if cid not in by_id:
                diags.append(
                    Diagnostic("error", f"requirement {r.id} allocated to unknown component "
                               f"{cid!r}", element=r.id)
                )
        if r.kind == MAX_TOP_EVENT_PROBABILITY and not (
            r.bound is not None and 0.0 <= r.bound <= 1.0
        ):
            diags.append(
                Diagnostic("error", f"requirement {r.id} bound must lie in [0,1]", element=r.id)
            )
        if r.kind == MIN_CUT_SET_ORDER and (r.min_order is None or r.min_order < 1):
            diags.append(
                Diagnostic("error", f"requirement {r.id} min_order must be >= 1", element=r.id)
            )
        if r.kind == MITIGATION_REQUIRED and (
            r.detection_deadline is None or r.detection_deadline < 1
        ):
            diags.append(
                Diagnostic("error", f"requirement {r.id} detection_deadline must be >= 1",
                           element=r.id)
            )

    referenced: set[str] = set()
    for conn in m.connections:
        referenced.update((conn.from_component, conn.to_component))
    referenced.update(h.top_component for h in m.hazards)
    for r in m.requirements:
        referenced.update(r.allocated_to)
    for c in m.components:
        if c.allocation:
            referenced.add(c.allocation)
    for c in m.components:
        if c.id not in referenced:
            diags.append(
                Diagnostic("warning", f"component {c.id} is not referenced by any connection, "
                           "hazard, requirement or allocation", element=c.id)
            )
    return diags
