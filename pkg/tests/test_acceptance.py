"""Acceptance suite: one test per criterion, printing a pass line with timing.

Run with `pytest tests/test_acceptance.py -s` to see the per-criterion lines.
"""

import io
import json
import random
import time
from contextlib import redirect_stdout

import numpy as np
import pytest

from qmll import (CutRule, QRule, StateVector, check, circuit_from_json, circuit_unitary,
                  encode, extract, find_redexes, normalize, parse_proof, print_proof, step,
                  weight)
from qmll.cli import main
from qmll.cutelim import canonical_form, compose_perms
from qmll.formulas import depth, leading_run
from qmll.matrices import approx_equal
from qmll.proofs import AxiomRule, iter_nodes, proofs_equal, rule_count
from qmll.qiam import OccurrenceGraph, initial_state, negative_entries, run, semantics_relative

from gen import random_corpus

CORPUS_SEED = 20260811
CORPUS_SIZE = 1000

FIG4_JSON = ('{"qubits": 2, "gates": ['
             '{"gate": "H", "targets": [1]}, {"gate": "Z", "targets": [1]},'
             '{"gate": "X", "targets": [2]}, {"gate": "CNOT", "targets": [1, 2]}]}')

GOLDEN_ENCODINGS = [
    ('{"qubits": 3, "gates": []}',
     "(q 3 I3 (ax a))"),
    ('{"qubits": 3, "gates": [{"gate": "H", "targets": [2]}]}',
     "(q 1 I1 (q 1 H (q 1 I1 (ax a))))"),
    ('{"qubits": 3, "gates": [{"gate": "H", "targets": [1]}, '
     '{"gate": "CNOT", "targets": [2, 3]}]}',
     "(q 2 CNOT (q 1 H (ax a)))"),
    (FIG4_JSON,
     "(cut 2 1 (cut 2 1 (q 1 I1 (q 1 H (ax a))) (q 1 X (q 1 Z (ax a)))) "
     "(q 2 CNOT (ax a)))"),
]


@pytest.fixture(scope="module")
def corpus():
    return random_corpus(CORPUS_SEED, CORPUS_SIZE)


_BUILD_SECONDS = {}


@pytest.fixture(scope="module")
def traces(corpus):
    t0 = time.perf_counter()
    out = [normalize(p) for p in corpus]
    _BUILD_SECONDS["traces"] = time.perf_counter() - t0
    return out


def report(num, desc, t0):
    print(f"\n[acceptance] criterion {num}: PASS ({time.perf_counter() - t0:.2f}s) {desc}")


def cli(args):
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = main(args)
    return code, buf.getvalue()


def rand_register(rng, n):
    rs = np.random.RandomState(rng.randrange(2**31))
    v = rs.normal(size=2**n) + 1j * rs.normal(size=2**n)
    return StateVector(n, v / np.linalg.norm(v))


def test_criterion_1_axiom_link_matrices(tmp_path):
    t0 = time.perf_counter()
    pi = "(par 2 1 (par 1 2 (tensor 2 2 (ax a) (ax a))))"
    rho = "(par 2 1 (par 2 1 (tensor 2 2 (ax a) (ax a))))"
    m_expected = [[0, 0, 1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, 1, 0, 0]]
    n_expected = [[0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0], [1, 0, 0, 0]]
    for text, expected in ((pi, m_expected), (rho, n_expected)):
        f = tmp_path / "p.proof"
        f.write_text(text)
        code, out = cli(["mll-matrix", str(f)])
        assert code == 0
        assert json.loads(out)["matrix"] == expected
    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0
    report(1, "axiom-link matrices of the two proofs of B are integer-exact", t0)


def test_criterion_2_golden_encodings(tmp_path):
    t0 = time.perf_counter()
    for idx, (circuit_json, golden) in enumerate(GOLDEN_ENCODINGS):
        f = tmp_path / f"c{idx}.json"
        f.write_text(circuit_json)
        code, out = cli(["encode", str(f)])
        assert code == 0
        assert out.strip() == golden, f"encoding {idx} differs"
        pf = tmp_path / f"c{idx}.proof"
        pf.write_text(out.strip())
        code, _ = cli(["check", str(pf)])
        assert code == 0
    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0
    report(2, "four worked encodings reproduced byte-for-byte and check", t0)


def test_criterion_3_fig4_end_to_end():
    t0 = time.perf_counter()
    circuit = circuit_from_json(FIG4_JSON)
    proof = encode(circuit)
    (k, ctx), = negative_entries(proof)
    got = semantics_relative(proof, k, ctx).unitary.data
    oracle = circuit_unitary(circuit).data  # independent simulate path
    assert np.max(np.abs(got - oracle)) <= 1e-8
    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0
    report(3, "Fig-4 machine semantics equals the simulate-path oracle", t0)


def test_criterion_4_normal_means_cut_free(corpus, traces):
    t0 = time.perf_counter()
    assert len(corpus) >= 1000
    for p, tr in zip(corpus, traces):
        assert len(tr.steps) <= 2 ** rule_count(p)
        nf = tr.final
        assert find_redexes(nf) == []
        for _, node in iter_nodes(nf):
            assert not isinstance(node, CutRule), "cut survived normalization"
            if isinstance(node, QRule) and not node.flip:
                assert not isinstance(node.sub, QRule), "contractible pair survived"
            if isinstance(node, AxiomRule):
                assert leading_run(node.formula)[1] == 0, "modal axiom survived"
    elapsed = time.perf_counter() - t0 + _BUILD_SECONDS["traces"]
    assert elapsed < 60.0
    report(4, f"{len(corpus)} normalizations ({_BUILD_SECONDS['traces']:.2f}s) "
              "end cut-free with no residual redexes", t0)


def test_criterion_5_confluence(corpus):
    t0 = time.perf_counter()
    canon_cache = {}
    for idx, p in enumerate(corpus):
        base = canonical_form(normalize(p).final)
        canon_cache[idx] = base
        for seed in range(20):
            alt = normalize(p, strategy="random", seed=seed).final
            assert proofs_equal(base, canonical_form(alt)), f"strategy divergence at {idx}"

    def descendants(q, radius):
        frontier, out = [q], [q]
        for _ in range(radius):
            nxt = []
            for x in frontier:
                for r in find_redexes(x):
                    nxt.append(step(x, r)[0])
            frontier = nxt
            out.extend(nxt)
        return out

    pairs = 0
    for idx, p in enumerate(corpus):
        rs = find_redexes(p)
        if len(rs) < 2:
            continue
        reducts = [step(p, r)[0] for r in rs]
        for a in range(len(reducts)):
            d1 = [canonical_form(x) for x in descendants(reducts[a], 2)]
            for b in range(a + 1, len(reducts)):
                pairs += 1
                d2 = [canonical_form(x) for x in descendants(reducts[b], 2)]
                assert any(proofs_equal(x, y) for x in d1 for y in d2), \
                    f"reducts of {print_proof(p)} fail to rejoin within 2 steps"
    elapsed = time.perf_counter() - t0
    assert elapsed < 120.0
    report(5, f"identical normal forms over 21 strategies; {pairs} divergent pairs rejoin", t0)


def test_criterion_6_weight_strictly_decreases(corpus, traces):
    t0 = time.perf_counter()
    violations = 0
    total = 0
    for p, tr in zip(corpus, traces):
        weights = [s.weight_before for s in tr.steps] + [tr.final_weight]
        # independent recomputation of the first and last points
        assert weights[0] == weight(p) and weights[-1] == weight(tr.final)
        for before, after in zip(weights, weights[1:]):
            total += 1
            if after >= before:
                violations += 1
    assert violations == 0
    report(6, f"weight decreased at every one of {total} steps (0 violations)", t0)


def test_criterion_7_semantic_invariance(corpus):
    t0 = time.perf_counter()
    checked = 0
    for p in corpus:
        if len(p.conclusion) != 2 or not all(leading_run(f)[1] for f in p.conclusion):
            continue
        entries = negative_entries(p)
        if not entries:
            continue
        cur = p
        while True:
            rs = find_redexes(cur)
            if not rs:
                break
            new, sigma = step(cur, rs[0])
            for k, ctx in negative_entries(cur):
                before = semantics_relative(cur, k, ctx).unitary.data
                after = semantics_relative(new, sigma[k - 1], ctx).unitary.data
                assert np.max(np.abs(before - after)) <= 1e-8
                checked += 1
            cur = new
    assert checked > 0
    report(7, f"semantics preserved across {checked} reduction-step comparisons", t0)


def test_criterion_8_unitarity_and_extraction(corpus):
    t0 = time.perf_counter()
    checked = 0
    for p in corpus:
        for k, ctx in negative_entries(p):
            if depth(ctx) == 0:
                continue
            sem = semantics_relative(p, k, ctx)
            s = sem.unitary.data
            frob = np.linalg.norm(s.conj().T @ s - np.eye(s.shape[0]))
            assert frob <= 1e-8
            circ = extract(p, k, ctx)
            assert np.max(np.abs(circuit_unitary(circ).data - s)) <= 1e-8
            checked += 1
    assert checked > 0
    report(8, f"{checked} denoted unitaries pass the Frobenius check and extraction", t0)


def test_criterion_9_totality(corpus):
    t0 = time.perf_counter()
    rng = random.Random(99)
    runs = 0
    for p in corpus:
        graph = OccurrenceGraph(p)
        for k, ctx in negative_entries(p):
            res = run(graph, initial_state(graph, k, ctx))
            assert res.steps <= graph.legal_state_bound()
            reg = rand_register(rng, depth(ctx))
            res2 = run(graph, initial_state(graph, k, ctx, reg))
            assert abs(res2.final.register.norm() - 1.0) <= 1e-8
            runs += 1
    assert runs > 0
    report(9, f"{runs} machine runs all reached final states within the bound", t0)


def test_criterion_10_uniformity(corpus):
    t0 = time.perf_counter()
    rng = random.Random(7)
    eligible = [p for p in corpus if negative_entries(p)][:100]
    assert len(eligible) == 100
    for p in eligible:
        graph = OccurrenceGraph(p)
        k, ctx = negative_entries(p)[0]
        sem = semantics_relative(p, k, ctx)
        base = None
        for _ in range(5):
            reg = rand_register(rng, depth(ctx))
            res = run(graph, initial_state(graph, k, ctx, reg), collect_trace=True)
            if base is None:
                base = res.trace
            else:
                assert res.trace == base, "routing depended on the register"
            want = sem.unitary.data @ reg.amplitudes
            assert np.max(np.abs(res.final.register.amplitudes - want)) <= 1e-8
    report(10, "100 proofs x 5 registers: identical traces, one fixed unitary", t0)
