"""Deterministic synchronous simulator with data probes.

Behavior format (``#`` comments):

    machine VoterBeh {
      state Ok initial {
        out out = ok;
        out out_wrong = false;
        on a == invalid and b == invalid -> Suspect;
      }
      state Failed { out out = invalid; out out_wrong = true; }
    }

Machines are Moore machines: outputs depend on the current state only.
Per tick: (1) components produce outputs from their state, (2) override
probes on output signals replace produced values, (3) connections propagate,
(4) override probes on input signals replace propagated values, (5) monitor
probes record from the settled snapshot, (6) states advance on the settled
inputs. Monitors never write: monitor-only runs are bit-identical to
probe-free runs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .diagnostics import Diagnostic, ParseError, SafelineError
from .dsl import Parser
from .model import Component, SystemModel
from .testgen import TestSuite

MONITOR = "monitor"
OVERRIDE = "override"

PASS = "pass"
FAIL = "fail"
NOT_EXECUTABLE = "not_executable"

DEFAULT_HORIZON = 32


class SimError(SafelineError):
    """Simulator setup or execution failure."""


class NondeterministicMachineError(SimError):
    """Two guards of one state are simultaneously satisfiable."""


class StaleSuiteError(SimError):
    """The suite was generated for a different model fingerprint."""


# ---------------------------------------------------------------------------
# Guards


@dataclass(frozen=True)
class Guard:
    """Boolean expression AST over input signals and enum comparisons."""

    op: str  # "and" | "or" | "not" | "eq" | "ne" | "sig" | "lit"
    args: tuple = ()

    def eval(self, inputs: dict[str, object]) -> bool:
        if self.op == "and":
            return self.args[0].eval(inputs) and self.args[1].eval(inputs)
        if self.op == "or":
            return self.args[0].eval(inputs) or self.args[1].eval(inputs)
        if self.op == "not":
            return not self.args[0].eval(inputs)
        if self.op == "eq":
            return inputs[self.args[0]] == self.args[1]
        if self.op == "ne":
            return inputs[self.args[0]] != self.args[1]
        if self.op == "sig":
            return bool(inputs[self.args[0]])
        return self.args[0]  # lit

    def signals(self) -> set[str]:
        if self.op in ("and", "or", "not"):
            return set().union(*(a.signals() for a in self.args))
        if self.op in ("eq", "ne", "sig"):
            return {self.args[0]}
        return set()

    def __str__(self) -> str:
        fmt = lambda v: {True: "true", False: "false"}.get(v, str(v))
        if self.op in ("and", "or"):
            return f"({self.args[0]} {self.op} {self.args[1]})"
        if self.op == "not":
            return f"not {self.args[0]}"
        if self.op == "eq":
            return f"{self.args[0]} == {fmt(self.args[1])}"
        if self.op == "ne":
            return f"{self.args[0]} != {fmt(self.args[1])}"
        if self.op == "sig":
            return self.args[0]
        return fmt(self.args[0])


def _parse_guard(p: Parser) -> Guard:
    def atom() -> Guard:
        if p.accept("("):
            g = or_expr()
            p.expect(")")
            return g
        if p.accept("not"):
            return Guard("not", (atom(),))
        tok = p.ident("signal or literal")
        if tok.value in ("true", "false"):
            return Guard("lit", (tok.value == "true",))
        if p.accept("=="):
            return Guard("eq", (tok.value, _value(p)))
        if p.accept("!="):
            return Guard("ne", (tok.value, _value(p)))
        return Guard("sig", (tok.value,))

    def and_expr() -> Guard:
        g = atom()
        while p.accept("and"):
            g = Guard("and", (g, atom()))
        return g

    def or_expr() -> Guard:
        g = and_expr()
        while p.accept("or"):
            g = Guard("or", (g, and_expr()))
        return g

    return or_expr()


def _value(p: Parser):
    tok = p.ident("value")
    if tok.value == "true":
        return True
    if tok.value == "false":
        return False
    return tok.value


# ---------------------------------------------------------------------------
# State machines


@dataclass(frozen=True)
class State:
    name: str
    outputs: tuple[tuple[str, object], ...]  # (signal, value)
    transitions: tuple[tuple[Guard, str], ...]


@dataclass(frozen=True)
class StateMachine:
    id: str
    states: tuple[State, ...]
    initial: str

    def state(self, name: str) -> State:
        for s in self.states:
            if s.name == name:
                return s
        raise SimError(f"machine {self.id}: unknown state {name!r}")

    def to_canon(self):
        return {
            "id": self.id,
            "initial": self.initial,
            "states": sorted(
                (
                    {
                        "name": s.name,
                        "outputs": sorted([sig, val] for sig, val in s.outputs),
                        "transitions": [[str(g), target] for g, target in s.transitions],
                    }
                    for s in self.states
                ),
                key=lambda s: s["name"],
            ),
        }


def parse_behaviors(text: str) -> dict[str, StateMachine]:
    """Parse a behavior file into machines keyed by id."""
    p = Parser(text)
    machines: dict[str, StateMachine] = {}
    diags: list[Diagnostic] = []
    while not p.at_kind("eof"):
        p.expect("machine")
        mid = p.ident("machine id").value
        states: list[State] = []
        initial: str | None = None
        p.expect("{")
        while not p.accept("}"):
            p.expect("state")
            sname = p.ident("state name").value
            is_initial = p.accept("initial")
            outputs: list[tuple[str, object]] = []
            transitions: list[tuple[Guard, str]] = []
            p.expect("{")
            while not p.accept("}"):
                if p.accept("out"):
                    sig = p.ident("signal name").value
                    p.expect("=")
                    outputs.append((sig, _value(p)))
                elif p.accept("on"):
                    guard = _parse_guard(p)
                    p.expect("->")
                    transitions.append((guard, p.ident("state name").value))
                else:
                    raise p.fail("'out', 'on' or '}'")
                p.expect(";")
            if any(s.name == sname for s in states):
                diags.append(
                    Diagnostic("error", f"duplicate state {sname!r} in machine {mid}",
                               element=mid)
                )
            if is_initial:
                if initial is not None:
                    diags.append(
                        Diagnostic("error", f"machine {mid} has multiple initial states",
                                   element=mid)
                    )
                initial = sname
            states.append(State(sname, tuple(outputs), tuple(transitions)))
        if initial is None:
            diags.append(Diagnostic("error", f"machine {mid} has no initial state", element=mid))
            initial = states[0].name if states else ""
        for s in states:
            for _, target in s.transitions:
                if not any(st.name == target for st in states):
                    diags.append(
                        Diagnostic("error", f"machine {mid}: transition to unknown state "
                                   f"{target!r}", element=mid)
                    )
        if mid in machines:
            diags.append(Diagnostic("error", f"duplicate machine id {mid!r}", element=mid))
        machines[mid] = StateMachine(mid, tuple(states), initial)
    if diags:
        raise ParseError(diags)
    return machines


def print_behaviors(machines: dict[str, StateMachine]) -> str:
    out: list[str] = []
    fmt = lambda v: {True: "true", False: "false"}.get(v, str(v))
    for mid in sorted(machines):
        machine = machines[mid]
        out.append(f"machine {mid} {{")
        for s in machine.states:
            marker = " initial" if s.name == machine.initial else ""
            out.append(f"  state {s.name}{marker} {{")
            for sig, val in s.outputs:
                out.append(f"    out {sig} = {fmt(val)};")
            for guard, target in s.transitions:
                out.append(f"    on {guard} -> {target};")
            out.append("  }")
        out.append("}")
    return "\n".join(out) + "\n"


def check_binding(comp: Component, machine: StateMachine) -> None:
    """Validate a machine against its component's signal interface.

    Checks, exhaustively over the finite input space, that at most one guard
    per state is satisfiable for any input valuation, and that every state
    assigns every output signal.
    """
    input_types = {s.name: s.type for s in comp.inputs}
    output_types = {s.name: s.type for s in comp.outputs}
    for state in machine.states:
        assigned = {sig for sig, _ in state.outputs}
        missing = sorted(set(output_types) - assigned)
        if missing:
            raise SimError(
                f"machine {machine.id} state {state.name}: output signals {missing} "
                f"unassigned (component {comp.id})"
            )
        for sig, val in state.outputs:
            if sig not in output_types:
                raise SimError(
                    f"machine {machine.id} state {state.name}: unknown output signal {sig!r}"
                )
            if not output_types[sig].accepts(val):
                raise SimError(
                    f"machine {machine.id} state {state.name}: value {val!r} does not match "
                    f"type of {comp.id}.{sig}"
                )
        for guard, _ in state.transitions:
            for sig in sorted(guard.signals()):
                if sig not in input_types:
                    raise SimError(
                        f"machine {machine.id} state {state.name}: guard references unknown "
                        f"input signal {sig!r}"
                    )
        if len(state.transitions) > 1:
            names = sorted(input_types)
            domains = [input_types[n].domain() for n in names]
            for values in itertools.product(*domains):
                valuation = dict(zip(names, values))
                hits = [i for i, (g, _) in enumerate(state.transitions) if g.eval(valuation)]
                if len(hits) > 1:
                    raise NondeterministicMachineError(
                        f"machine {machine.id} state {state.name}: guards "
                        f"{hits} both fire for inputs {valuation}"
                    )


# ---------------------------------------------------------------------------
# Probes and traces


@dataclass(frozen=True)
class DataProbe:
    component: str
    signal: str
    mode: str  # MONITOR | OVERRIDE
    value: object = None  # override only
    window: tuple[int, int] = (0, 1 << 30)  # tick interval [start, end)

    def active(self, tick: int) -> bool:
        return self.window[0] <= tick < self.window[1]

    def target(self) -> str:
        return f"{self.component}.{self.signal}"


@dataclass(frozen=True)
class Trace:
    ticks: tuple[dict[str, object], ...]  # per tick: "comp.sig" -> value
    monitor_records: tuple[tuple[int, str, object], ...]  # (tick, target, value)

    def to_canon(self):
        return {
            "ticks": [
                {sig: val for sig, val in sorted(snapshot.items())} for snapshot in self.ticks
            ],
            "monitors": [[t, target, val] for t, target, val in self.monitor_records],
        }


@dataclass(frozen=True)
class TestRunResult:
    test: str
    verdict: str  # PASS | FAIL | NOT_EXECUTABLE
    trace: Trace | None
    detection_latency: int | None
    horizon: int

    def to_canon(self):
        return {
            "test": self.test,
            "verdict": self.verdict,
            "trace": self.trace.to_canon() if self.trace is not None else None,
            "detection_latency": self.detection_latency,
            "horizon": self.horizon,
        }


class Simulator:
    """Binds behaviors to a model's components and steps them synchronously."""

    def __init__(self, m: SystemModel, behaviors: dict[str, StateMachine]):
        self.model = m
        self.machines: dict[str, StateMachine] = {}
        for comp in m.components:
            if comp.behavior is None:
                continue
            machine = behaviors.get(comp.behavior)
            if machine is None:
                raise SimError(f"component {comp.id}: behavior {comp.behavior!r} not provided")
            check_binding(comp, machine)
            self.machines[comp.id] = machine

    def _check_probes(self, probes: list[DataProbe]) -> None:
        for probe in probes:
            comp = self.model.component(probe.component)
            sig = comp.signal(probe.signal) if comp else None
            if sig is None:
                raise SimError(f"probe targets unknown signal {probe.target()}")
            if probe.mode == OVERRIDE and not sig.type.accepts(probe.value):
                raise SimError(
                    f"override value {probe.value!r} does not match type of {probe.target()}"
                )

    def run(self, probes: list[DataProbe], horizon: int) -> Trace:
        """Deterministic synchronous run of ``horizon`` ticks."""
        self._check_probes(probes)
        comps = sorted(self.model.components, key=lambda c: c.id)
        state = {cid: machine.initial for cid, machine in self.machines.items()}
        # Inputs persist between ticks; unconnected inputs keep their default.
        inputs: dict[str, dict[str, object]] = {
            c.id: {s.name: s.type.default() for s in c.inputs} for c in comps
        }
        ticks: list[dict[str, object]] = []
        records: list[tuple[int, str, object]] = []

        for tick in range(horizon):
            outputs: dict[str, dict[str, object]] = {}
            for comp in comps:
                if comp.id in state:
                    produced = dict(self.machines[comp.id].state(state[comp.id]).outputs)
                else:
                    produced = {s.name: s.type.default() for s in comp.outputs}
                outputs[comp.id] = produced
            for probe in probes:
                if probe.mode == OVERRIDE and probe.active(tick):
                    if probe.signal in outputs.get(probe.component, {}):
                        outputs[probe.component][probe.signal] = probe.value
            for conn in self.model.connections:
                inputs[conn.to_component][conn.to_signal] = outputs[conn.from_component][
                    conn.from_signal
                ]
            for probe in probes:
                if probe.mode == OVERRIDE and probe.active(tick):
                    if probe.signal in inputs.get(probe.component, {}):
                        inputs[probe.component][probe.signal] = probe.value
            snapshot: dict[str, object] = {}
            for comp in comps:
                for sig, val in outputs[comp.id].items():
                    snapshot[f"{comp.id}.{sig}"] = val
                for sig, val in inputs[comp.id].items():
                    snapshot[f"{comp.id}.{sig}"] = val
            for probe in probes:
                if probe.mode == MONITOR and probe.active(tick):
                    records.append((tick, probe.target(), snapshot[probe.target()]))
            ticks.append(snapshot)
            for cid, machine in self.machines.items():
                for guard, target in machine.state(state[cid]).transitions:
                    if guard.eval(inputs[cid]):
                        state[cid] = target
                        break
        return Trace(tuple(ticks), tuple(records))


def run(
    m: SystemModel,
    behaviors: dict[str, StateMachine],
    probes: list[DataProbe],
    horizon: int,
) -> Trace:
    return Simulator(m, behaviors).run(probes, horizon)


def _fired(m: SystemModel, monitor: tuple[str, str], value: object) -> bool:
    comp = m.component(monitor[0])
    sig = comp.signal(monitor[1])
    return value != sig.type.default()


def execute_suite(
    m: SystemModel,
    behaviors: dict[str, StateMachine],
    suite: TestSuite,
    horizon: int,
    model_fingerprint: str,
) -> list[TestRunResult]:
    """Run every executable test of the suite and assign verdicts.

    Injections become override probes over the whole horizon; the hazard's
    top-event observation signal is monitored. Refuses to run a suite
    generated for a different model fingerprint.
    """
    if suite.model_fingerprint != model_fingerprint:
        raise StaleSuiteError(
            f"suite for hazard {suite.hazard} was generated for model fingerprint "
            f"{suite.model_fingerprint[:12]}..., current is {model_fingerprint[:12]}..."
        )
    simulator = Simulator(m, behaviors)
    results: list[TestRunResult] = []
    for test in sorted(suite.tests, key=lambda t: t.id):
        if not test.executable:
            results.append(TestRunResult(test.id, NOT_EXECUTABLE, None, None, horizon))
            continue
        probes = [
            DataProbe(i.component, i.signal, OVERRIDE, i.value, (0, horizon))
            for i in test.injections
        ]
        probes.append(DataProbe(suite.monitor[0], suite.monitor[1], MONITOR))
        trace = simulator.run(probes, horizon)
        latency = None
        for tick, target, value in trace.monitor_records:
            if _fired(m, suite.monitor, value):
                latency = tick
                break
        if test.expect_top_event:
            ok = latency is not None
            if ok and test.detection_deadline is not None:
                ok = latency <= test.detection_deadline
        else:
            ok = latency is None
        results.append(
            TestRunResult(test.id, PASS if ok else FAIL, trace, latency, horizon)
        )
    return results
