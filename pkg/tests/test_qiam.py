import random

import numpy as np
import pytest

from qmll import (MachineError, PreconditionError, StateVector, basis_state, normalize,
                  parse_proof, semantics_relative, zero_state)
from qmll.cutelim import compose_perms, find_redexes, step
from qmll.formulas import Context, depth, print_context
from qmll.matrices import approx_equal, gate_by_name
from qmll.qiam import (OccurrenceGraph, extract_gate_sequence, initial_state,
                       negative_entries, run, semantics_relative, step_machine)

from gen import random_corpus

FIG4 = ("(cut 2 1 (cut 2 1 (q 1 I1 (q 1 H (ax a))) (q 1 X (q 1 Z (ax a)))) "
        "(q 2 CNOT (ax a)))")

H = gate_by_name("H").data
Z = gate_by_name("Z").data
X = gate_by_name("X").data
CNOT = gate_by_name("CNOT").data
FIG4_ORACLE = CNOT @ np.kron(Z, X) @ np.kron(H, np.eye(2))


def entry_of(p):
    entries = negative_entries(p)
    assert len(entries) == 1
    return entries[0]


def rand_register(rng, n):
    rs = np.random.RandomState(rng.randrange(2**31))
    v = rs.normal(size=2**n) + 1j * rs.normal(size=2**n)
    return StateVector(n, v / np.linalg.norm(v))


def test_axiom_turnaround():
    p = parse_proof("(ax a)")
    graph = OccurrenceGraph(p)
    start = initial_state(graph, 1, Context(()))
    res = run(graph, start)
    assert res.final.pos == 2 and res.final.positive and res.final.stack == ()
    assert res.events == () and res.steps == 1


def test_single_quantum_rule_flow():
    # entry pushes a diamond, axiom turns around, exit applies H at offset 0
    p = parse_proof("(q 1 H (ax a))")
    k, ctx = entry_of(p)
    res = semantics_relative(p, k, ctx)
    assert approx_equal(res.unitary.data, H, 1e-12)
    assert len(res.events) == 1
    ev = res.events[0]
    assert ev.offset == 0 and ev.forward


def test_identity_proof_preserves_any_register():
    p = parse_proof("(q 3 I3 (ax a))")
    graph = OccurrenceGraph(p)
    k, ctx = entry_of(p)
    rng = random.Random(1)
    for _ in range(5):
        reg = rand_register(rng, 3)
        res = run(graph, initial_state(graph, k, ctx, reg))
        assert np.max(np.abs(res.final.register.amplitudes - reg.amplitudes)) <= 1e-12


def test_hadamard_on_second_qubit():
    p = parse_proof("(q 1 I1 (q 1 H (q 1 I1 (ax a))))")
    graph = OccurrenceGraph(p)
    k, ctx = entry_of(p)
    res = run(graph, initial_state(graph, k, ctx, basis_state("000")))
    want = np.zeros(8, dtype=complex)
    want[0b000] = want[0b010] = 1 / np.sqrt(2)
    assert np.max(np.abs(res.final.register.amplitudes - want)) <= 1e-12


def test_hadamard_then_cnot():
    p = parse_proof("(q 2 CNOT (q 1 H (ax a)))")
    graph = OccurrenceGraph(p)
    k, ctx = entry_of(p)
    res = run(graph, initial_state(graph, k, ctx, basis_state("000")))
    # H on qubit 1, then CNOT on qubits 2,3 with control qubit 2 still |0>
    want = np.zeros(8, dtype=complex)
    want[0b000] = want[0b100] = 1 / np.sqrt(2)
    assert np.max(np.abs(res.final.register.amplitudes - want)) <= 1e-12


def test_fig4_semantics_matches_oracle():
    p = parse_proof(FIG4)
    k, ctx = entry_of(p)
    res = semantics_relative(p, k, ctx)
    assert approx_equal(res.unitary.data, FIG4_ORACLE, 1e-8)
    assert res.exit_pos == 2
    assert print_context(res.exit_ctx) == "[] [] [.]"


def test_identity_semantics():
    p = parse_proof("(q 3 I3 (ax a))")
    k, ctx = entry_of(p)
    res = semantics_relative(p, k, ctx)
    assert approx_equal(res.unitary.data, np.eye(8), 1e-12)


def test_extract_gate_sequence_examples():
    p = parse_proof("(q 1 I1 (q 1 H (q 1 I1 (ax a))))")
    k, ctx = entry_of(p)
    seq = extract_gate_sequence(p, k, ctx)
    non_identity = [(u, off) for u, off in seq
                    if not approx_equal(u.data, np.eye(2 ** u.dim_qubits), 1e-12)]
    assert len(non_identity) == 1
    u, off = non_identity[0]
    assert off == 1 and approx_equal(u.data, H, 1e-12)

    p4 = parse_proof(FIG4)
    k4, ctx4 = entry_of(p4)
    seq4 = extract_gate_sequence(p4, k4, ctx4)
    names = [(u.name, off) for u, off in seq4]
    assert names == [("H", 0), ("I1", 1), ("Z", 0), ("X", 1), ("CNOT", 0)]


def test_entry_must_be_negative():
    p = parse_proof("(q 1 H (ax a))")
    graph = OccurrenceGraph(p)
    pos_ctx = Context((("box", None),))  # hole at the positive atom of [] a
    with pytest.raises(PreconditionError):
        initial_state(graph, 2, pos_ctx)


def test_register_must_match_context_depth():
    p = parse_proof("(q 1 H (ax a))")
    graph = OccurrenceGraph(p)
    k, ctx = entry_of(p)
    with pytest.raises(PreconditionError):
        initial_state(graph, k, ctx, zero_state(2))


def test_norm_preserved_along_runs():
    rng = random.Random(8)
    for p in random_corpus(51, 60):
        graph = OccurrenceGraph(p)
        for k, ctx in negative_entries(p):
            reg = rand_register(rng, depth(ctx))
            res = run(graph, initial_state(graph, k, ctx, reg))
            assert abs(res.final.register.norm() - 1.0) <= 1e-8


def test_totality_all_entries():
    for p in random_corpus(52, 80):
        graph = OccurrenceGraph(p)
        for k, ctx in negative_entries(p):
            res = run(graph, initial_state(graph, k, ctx))
            assert res.final.positive and res.final.stack == ()
            assert res.steps <= graph.legal_state_bound()


def test_step_machine_deterministic_and_injective():
    from qmll.qiam import Next
    seen: dict = {}
    graphs = []  # keep alive so id() keys stay unique
    for p in random_corpus(53, 50):
        graph = OccurrenceGraph(p)
        graphs.append(graph)
        for k, ctx in negative_entries(p):
            cur = initial_state(graph, k, ctx)
            while True:
                res = step_machine(graph, cur)
                if not isinstance(res, Next):
                    break
                key = (id(graph), res.state.path, res.state.pos, res.state.ctx,
                       res.state.positive, res.state.stack)
                src = (cur.path, cur.pos, cur.ctx, cur.positive, cur.stack)
                if key in seen:
                    assert seen[key] == src, "two states map to the same successor"
                seen[key] = src
                cur = res.state


def test_uniformity_register_independent_routing():
    rng = random.Random(9)
    for p in random_corpus(54, 25):
        entries = negative_entries(p)
        if not entries:
            continue
        k, ctx = entries[0]
        graph = OccurrenceGraph(p)
        sem = semantics_relative(p, k, ctx)
        base_trace = None
        for _ in range(3):
            reg = rand_register(rng, depth(ctx))
            res = run(graph, initial_state(graph, k, ctx, reg), collect_trace=True)
            routing = tuple(res.trace)
            if base_trace is None:
                base_trace = routing
            else:
                assert routing == base_trace
            want = sem.unitary.data @ reg.amplitudes
            assert np.max(np.abs(res.final.register.amplitudes - want)) <= 1e-8


def test_semantics_invariant_under_reduction_steps():
    corpus = [p for p in random_corpus(55, 120)
              if len(p.conclusion) == 2 and negative_entries(p)]
    checked = 0
    for p in corpus[:40]:
        cur = p
        while True:
            rs = find_redexes(cur)
            if not rs:
                break
            new, sigma = step(cur, rs[0])
            for k, ctx in negative_entries(cur):
                before = semantics_relative(cur, k, ctx)
                after = semantics_relative(new, sigma[k - 1], ctx)
                assert approx_equal(before.unitary.data, after.unitary.data, 1e-8)
                checked += 1
            cur = new
    assert checked > 0


def test_semantics_agrees_with_normal_form():
    for p in random_corpus(56, 40):
        entries = negative_entries(p)
        if not entries:
            continue
        tr = normalize(p)
        sigma = compose_perms(tr.perms, len(p.conclusion))
        for k, ctx in entries:
            before = semantics_relative(p, k, ctx)
            after = semantics_relative(tr.final, sigma[k - 1], ctx)
            assert approx_equal(before.unitary.data, after.unitary.data, 1e-8)


def test_reverse_composition_gives_identity():
    # cutting a proof against the encoding of its inverse circuit composes
    # the unitary with its adjoint
    from qmll import CutRule, adjoint, encode, extract
    for text in ["(q 1 H (ax a))", "(q 2 CNOT (q 1 H (ax a)))", FIG4]:
        p = parse_proof(text)
        k, ctx = entry_of(p)
        circ = extract(p, k, ctx)
        inverse = type(circ)(circ.n_qubits,
                             tuple((adjoint(u), t) for u, t in reversed(circ.gates)))
        composed = CutRule(2, 1, p, encode(inverse))
        res = semantics_relative(composed, 1, ctx)
        assert approx_equal(res.unitary.data, np.eye(2 ** depth(ctx)), 1e-8)


def test_illegal_stack_never_reached_but_guarded():
    p = parse_proof("(q 1 H (ax a))")
    graph = OccurrenceGraph(p)
    k, ctx = entry_of(p)
    from qmll.qiam import MachineState
    bad = MachineState((0,), 1, Context(()), False, ())  # stack too short
    with pytest.raises(MachineError):
        run(graph, bad)
