"""Shared oracles and random generators for the test suite.

The oracles deliberately avoid the algorithms under test: minimal cut sets
and probabilities are recovered by brute-force enumeration of every basic
event assignment, evaluating the tree's structure function directly.
"""

from __future__ import annotations

import random

from safeline.cft import AND, EVENT, OR, VOTE, CftElement, Node, SystemFaultTree, evaluate

# ---------------------------------------------------------------------------
# Brute-force oracles


def oracle_truth_table(t: SystemFaultTree) -> tuple[list[str], list[bool]]:
    """Structure function evaluated at every assignment (index = bitmask)."""
    events = t.events()
    table = []
    for bits in range(1 << len(events)):
        assign = {e: bool(bits >> i & 1) for i, e in enumerate(events)}
        table.append(evaluate(t, assign))
    return events, table


def oracle_mcs(t: SystemFaultTree) -> list[frozenset[str]]:
    """Minimal cut sets by full enumeration plus pairwise minimization."""
    events, table = oracle_truth_table(t)
    true_masks = sorted(
        (m for m in range(1 << len(events)) if table[m]),
        key=lambda m: (bin(m).count("1"), m),
    )
    minimal: list[int] = []
    for m in true_masks:
        if not any(kept & m == kept for kept in minimal):
            minimal.append(m)
    sets = [
        frozenset(e for i, e in enumerate(events) if m >> i & 1) for m in minimal
    ]
    return sorted(sets, key=lambda cs: (len(cs), tuple(sorted(cs))))


def oracle_probability(t: SystemFaultTree, probs: dict[str, float]) -> float:
    """Exact top-event probability by weighted full enumeration."""
    events, table = oracle_truth_table(t)
    total = 0.0
    for bits, top in enumerate(table):
        if not top:
            continue
        w = 1.0
        for i, e in enumerate(events):
            w *= probs[e] if bits >> i & 1 else 1.0 - probs[e]
        total += w
    return total


def rare_event_formula(mcs: list[frozenset[str]], probs: dict[str, float]) -> float:
    total = 0.0
    for cs in mcs:
        w = 1.0
        for e in sorted(cs):
            w *= probs[e]
        total += w
    return total


# ---------------------------------------------------------------------------
# Random fault trees (built directly as node DAGs)


def random_tree(rng: random.Random, max_events: int = 12) -> SystemFaultTree:
    """A random coherent tree with AND/OR/VOTE gates over <= max_events events."""
    n = rng.randint(1, max_events)
    nodes: dict[str, Node] = {}
    pool: list[str] = []
    for i in range(n):
        nid = f"e{i}"
        nodes[nid] = Node(nid, EVENT)
        pool.append(nid)
    n_gates = rng.randint(1, 6)
    top = pool[0]
    for gi in range(n_gates):
        arity = rng.randint(2, min(4, len(pool))) if len(pool) >= 2 else 1
        children = tuple(rng.sample(pool, arity))
        kind = rng.choice((AND, OR, VOTE))
        k = rng.randint(1, arity) if kind == VOTE else None
        gid = f"g{gi}"
        nodes[gid] = Node(gid, kind, children, k=k)
        pool.append(gid)
        top = gid
    return SystemFaultTree(hazard="H", top=top, nodes=nodes, trace={})


def random_probs(rng: random.Random, t: SystemFaultTree) -> dict[str, float]:
    return {e: rng.uniform(0.0, 0.5) for e in t.events()}


# ---------------------------------------------------------------------------
# Random two-component chains (model + CFT library DSL text)


def _random_gate_lines(
    rng: random.Random, atoms: list[str], prefix: str
) -> tuple[list[str], str]:
    """Random gate definitions over the atoms; returns (lines, root node name)."""
    pool = list(atoms)
    lines: list[str] = []
    for gi in range(rng.randint(1, 3)):
        arity = rng.randint(2, min(3, len(pool))) if len(pool) >= 2 else 1
        ops = rng.sample(pool, arity)
        kind = rng.choice(("AND", "OR", "VOTE"))
        gid = f"{prefix}g{gi}"
        if kind == "VOTE":
            k = rng.randint(1, arity)
            lines.append(f"  gate {gid} VOTE {k}({', '.join(ops)});")
        else:
            lines.append(f"  gate {gid} {kind}({', '.join(ops)});")
        pool.append(gid)
    return lines, pool[-1]


def random_chain(rng: random.Random) -> tuple[str, str]:
    """Model + library text for a two-component chain A -> B with one hazard."""
    n_links = rng.randint(1, 3)
    na = rng.randint(1, 4)
    nb = rng.randint(1, 4)

    model = ["model CHAIN version \"1\";"]
    model.append("component A kind=hardware {")
    for j in range(n_links):
        model.append(f"  out s{j}: bool;")
    model.append("  cft ACft;")
    model.append("}")
    model.append("component B kind=hardware {")
    for j in range(n_links):
        model.append(f"  in i{j}: bool;")
    model.append("  out top: bool;")
    model.append("  cft BCft;")
    model.append("}")
    for j in range(n_links):
        model.append(f"connect A.s{j} -> B.i{j};")
    model.append('hazard H top=B.top "chain failure";')

    lib = ["cft ACft {"]
    a_atoms = [f"a{i}" for i in range(na)]
    for j in range(n_links):
        lib.append(f"  outmode m{j} on s{j};")
    for i, eid in enumerate(a_atoms):
        prob = round(rng.uniform(0.01, 0.4), 4)
        lib.append(f"  event {eid} prob={prob} effect s{i % n_links}=true;")
    for j in range(n_links):
        lines, root = _random_gate_lines(rng, a_atoms, f"m{j}")
        lib.extend(lines)
        lib.append(f"  define m{j} = {root};")
    lib.append("}")

    lib.append("cft BCft {")
    b_atoms = [f"b{i}" for i in range(nb)]
    ports = [f"p{j}" for j in range(n_links)]
    for j in range(n_links):
        lib.append(f"  inport p{j} on i{j};")
    lib.append("  outmode top on top;")
    for eid in b_atoms:
        prob = round(rng.uniform(0.01, 0.4), 4)
        lib.append(f"  event {eid} prob={prob} effect top=true;")
    lines, root = _random_gate_lines(rng, b_atoms + ports, "t")
    lib.extend(lines)
    lib.append(f"  define top = {root};")
    lib.append("}")

    return "\n".join(model) + "\n", "\n".join(lib) + "\n"


def eval_element(
    elem: CftElement,
    mode: str,
    event_vals: dict[str, bool],
    inport_vals: dict[str, bool],
) -> bool:
    """Modular evaluation of one template's failure mode (oracle for compose)."""
    defines = dict(elem.defines)
    gates = {g.id: g for g in elem.gates}

    def rec(name: str) -> bool:
        kind = elem.node_kind(name)
        if kind == "event":
            return event_vals[name]
        if kind == "inport":
            return inport_vals[name]
        g = gates[name]
        vals = [rec(op) for op in g.operands]
        if g.kind == "AND":
            return all(vals)
        if g.kind == "OR":
            return any(vals)
        return sum(vals) >= g.k

    return rec(defines[mode])

# ---------------------------------------------------------------------------
# Random model/behavior pairs for the simulator


def random_sim_pair(rng: random.Random) -> tuple[str, str]:
    """Model + behavior text for a random chain of Moore machines."""
    n = rng.randint(2, 4)
    model = ["model SIM version \"1\";"]
    beh = []
    for i in range(n):
        lines = [f"component C{i} kind=hardware {{"]
        if i > 0:
            lines.append("  in x: bool;")
        lines.append("  out o: bool;")
        lines.append(f"  behavior M{i};")
        lines.append("}")
        model.extend(lines)
        if i == 0:
            v = rng.choice(("true", "false"))
            beh.append(f"machine M0 {{ state Run initial {{ out o = {v}; }} }}")
        elif rng.random() < 0.4:
            v = rng.choice(("true", "false"))
            beh.append(f"machine M{i} {{ state Run initial {{ out o = {v}; }} }}")
        else:
            trigger = rng.choice(("true", "false"))
            beh.append(
                f"machine M{i} {{\n"
                f"  state A initial {{ out o = false; on x == {trigger} -> B; }}\n"
                f"  state B {{ out o = true; on not (x == {trigger}) -> A; }}\n"
                f"}}"
            )
    for i in range(1, n):
        model.append(f"connect C{i - 1}.o -> C{i}.x;")
    return "\n".join(model) + "\n", "\n".join(beh) + "\n"


def random_monitor_probes(rng: random.Random, model) -> list:
    from safeline.sim import DataProbe

    probes = []
    for comp in model.components:
        for sig in comp.inputs + comp.outputs:
            if rng.random() < 0.5:
                start = rng.randint(0, 6)
                probes.append(
                    DataProbe(comp.id, sig.name, "monitor", None, (start, start + rng.randint(1, 8)))
                )
    return probes


# ---------------------------------------------------------------------------
# Random full bundles (model + library + behaviors) and single-edit mutations


def random_bundle(rng: random.Random) -> tuple[str, str, str]:
    """A validating software chain on one ECU, with hazards and requirements."""
    k = rng.randint(2, 4)
    model = ["model GEN version \"1\";"]
    model.append("component Ecu kind=hardware { out fail: bool; cft EcuCft; }")
    for i in range(k):
        lines = [f"component S{i} kind=software {{"]
        if i > 0:
            lines.append("  in x: enum(ok, bad);")
        lines.append("  out val: enum(ok, bad);")
        lines.append("  allocate Ecu;")
        lines.append(f"  behavior {'SrcBeh' if i == 0 else 'StageBeh'};")
        lines.append(f"  cft {'SrcCft' if i == 0 else 'StageCft'};")
        lines.append("}")
        model.extend(lines)
    for i in range(1, k):
        model.append(f"connect S{i - 1}.val -> S{i}.x;")
    hazards = ["H1"]
    model.append(f'hazard H1 top=S{k - 1}.fail "chain output corrupted";')
    if k >= 3 and rng.random() < 0.5:
        hazards.append("H2")
        model.append(f'hazard H2 top=S{k - 2}.fail "intermediate output corrupted";')
    rid = 1
    for h in hazards:
        if rng.random() < 0.8:
            bound = round(rng.uniform(0.05, 0.9), 3)
            model.append(
                f"requirement R{rid} MaxTopEventProbability({h}, bound={bound}, "
                f"mission_time=1) on [S0];"
            )
            rid += 1
        if rng.random() < 0.5:
            model.append(
                f"requirement R{rid} MinCutSetOrder({h}, min_order={rng.randint(1, 2)}) on [S0];"
            )
            rid += 1
        if rng.random() < 0.4:
            model.append(
                f"requirement R{rid} MitigationRequired({h}, "
                f"detection_deadline={rng.randint(2, 8)}) on [S0];"
            )
            rid += 1

    p_src = round(rng.uniform(0.01, 0.3), 4)
    p_stage = round(rng.uniform(0.01, 0.3), 4)
    p_ecu = round(rng.uniform(0.0, 0.05), 4)
    stage_gate = rng.choice(("OR", "AND"))
    lib = f"""cft EcuCft {{
  outmode hw_fail on fail;
  event hw_fail prob={p_ecu};
  define hw_fail = hw_fail;
  host_failure hw_fail;
}}
cft SrcCft {{
  outmode fail on val;
  event corrupt prob={p_src} effect val=bad;
  define fail = corrupt;
}}
cft StageCft {{
  inport up on x;
  outmode fail on val;
  event corrupt prob={p_stage} effect val=bad;
  gate any {stage_gate}(corrupt, up);
  define fail = any;
}}
"""
    beh = """machine SrcBeh {
  state Run initial { out val = ok; }
}
machine StageBeh {
  state Good initial { out val = ok; on x == bad -> Bad; }
  state Bad { out val = bad; on not (x == bad) -> Good; }
}
"""
    return "\n".join(model) + "\n", lib, beh


def mutate_bundle(
    rng: random.Random, texts: tuple[str, str, str]
) -> tuple[tuple[str, str, str], str] | None:
    """One random single edit; returns (new texts, description) or None."""
    from dataclasses import replace

    from safeline.cft import BasicEvent, Gate, parse_library, print_library
    from safeline.model import SafetyRequirement, parse_model, print_model
    from safeline.sim import parse_behaviors, print_behaviors

    model_text, lib_text, beh_text = texts
    kind = rng.choice(
        (
            "event_prob",
            "req_param",
            "req_add",
            "req_remove",
            "gate_flip",
            "behavior_output",
            "component_add",
            "hazard_description",
        )
    )

    if kind == "event_prob":
        lib = parse_library(lib_text)
        tpl = rng.choice(lib.templates)
        ev = rng.choice(tpl.events)
        new_ev = BasicEvent(ev.id, prob=round(rng.uniform(0.01, 0.9), 4), effect=ev.effect)
        tpl2 = replace(tpl, events=tuple(new_ev if e.id == ev.id else e for e in tpl.events))
        lib2 = replace(lib, templates=tuple(tpl2 if t.name == tpl.name else t for t in lib.templates))
        return (model_text, print_library(lib2), beh_text), f"event_prob {tpl.name}.{ev.id}"

    if kind == "gate_flip":
        lib = parse_library(lib_text)
        gated = [t for t in lib.templates if t.gates]
        if not gated:
            return None
        tpl = rng.choice(gated)
        g = rng.choice(tpl.gates)
        g2 = Gate(g.id, "AND" if g.kind == "OR" else "OR", g.operands)
        tpl2 = replace(tpl, gates=tuple(g2 if x.id == g.id else x for x in tpl.gates))
        lib2 = replace(lib, templates=tuple(tpl2 if t.name == tpl.name else t for t in lib.templates))
        return (model_text, print_library(lib2), beh_text), f"gate_flip {tpl.name}.{g.id}"

    m = parse_model(model_text)
    if kind == "req_param":
        if not m.requirements:
            return None
        r = rng.choice(m.requirements)
        if r.kind == "MaxTopEventProbability":
            r2 = replace(r, bound=round(rng.uniform(0.05, 0.95), 3))
        elif r.kind == "MinCutSetOrder":
            r2 = replace(r, min_order=r.min_order + 1)
        else:
            r2 = replace(r, detection_deadline=r.detection_deadline + 1)
        reqs = tuple(r2 if x.id == r.id else x for x in m.requirements)
        return (
            (print_model(replace(m, requirements=reqs)), lib_text, beh_text),
            f"req_param {r.id}",
        )

    if kind == "req_add":
        hazard = rng.choice(m.hazards).id
        r = SafetyRequirement(
            id="R90",
            kind="MaxTopEventProbability",
            hazard=hazard,
            bound=round(rng.uniform(0.05, 0.95), 3),
            mission_time=1.0,
        )
        m2 = replace(m, requirements=m.requirements + (r,))
        return (print_model(m2), lib_text, beh_text), "req_add R90"

    if kind == "req_remove":
        if not m.requirements:
            return None
        r = rng.choice(m.requirements)
        m2 = replace(m, requirements=tuple(x for x in m.requirements if x.id != r.id))
        return (print_model(m2), lib_text, beh_text), f"req_remove {r.id}"

    if kind == "component_add":
        extra = "component Spare kind=hardware { out o: bool; }"
        return (model_text + extra + "\n", lib_text, beh_text), "component_add Spare"

    if kind == "hazard_description":
        h = rng.choice(m.hazards)
        h2 = replace(h, description=h.description + " (reviewed)")
        m2 = replace(m, hazards=tuple(h2 if x.id == h.id else x for x in m.hazards))
        return (print_model(m2), lib_text, beh_text), f"hazard_description {h.id}"

    if kind == "behavior_output":
        machines = parse_behaviors(beh_text)
        beh2 = beh_text.replace(
            "state Good initial { out val = ok;",
            "state Good initial { out val = bad;",
            1,
        )
        if beh2 == beh_text:
            return None
        parse_behaviors(beh2)  # must stay well-formed
        assert machines
        return (model_text, lib_text, beh2), "behavior_output StageBeh"

    return None


# ---------------------------------------------------------------------------
# Desk-scale model: n_chains independent chains, one hazard at each tail


def big_bundle(n_chains: int = 5, chain_len: int = 20) -> tuple[str, str, str]:
    """n_chains independent chains; each chain's head is the hardware host."""
    model = ["model BIG version \"1\";"]
    hazard_lines = []
    req_lines = []
    for c in range(n_chains):
        for i in range(chain_len):
            cid = f"C{c}_{i}"
            if i == 0:
                model.extend(
                    [
                        f"component {cid} kind=hardware {{",
                        "  out val: enum(ok, bad);",
                        "  behavior SrcBeh;",
                        "  cft SrcCft;",
                        "}",
                    ]
                )
                continue
            lines = [f"component {cid} kind=software {{"]
            lines.append("  in x: enum(ok, bad);")
            lines.append("  out val: enum(ok, bad);")
            lines.append(f"  allocate C{c}_0;")
            lines.append("  behavior StageBeh;")
            lines.append("  cft StageCft;")
            lines.append("}")
            model.extend(lines)
        for i in range(1, chain_len):
            model.append(f"connect C{c}_{i - 1}.val -> C{c}_{i}.x;")
        tail = f"C{c}_{chain_len - 1}"
        hazard_lines.append(f'hazard H{c} top={tail}.fail "chain {c} corrupted";')
        req_lines.append(
            f"requirement R{c} MaxTopEventProbability(H{c}, bound=0.5, mission_time=1) on [{tail}];"
        )
    model.extend(hazard_lines)
    model.extend(req_lines)
    lib = """cft SrcCft {
  outmode fail on val;
  event corrupt prob=0.001 effect val=bad;
  define fail = corrupt;
  host_failure fail;
}
cft StageCft {
  inport up on x;
  outmode fail on val;
  event corrupt prob=0.001 effect val=bad;
  gate any OR(corrupt, up);
  define fail = any;
}
"""
    beh = """machine SrcBeh {
  state Run initial { out val = ok; }
}
machine StageBeh {
  state Good initial { out val = ok; on x == bad -> Bad; }
  state Bad { out val = bad; on not (x == bad) -> Good; }
}
"""
    return "\n".join(model) + "\n", lib, beh
