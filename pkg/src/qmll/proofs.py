"""Proof trees over one-sided sequents, their checker, and serialization.

Sequents are ordered tuples of formulas; rules carry explicit 1-based
positions instead of an exchange rule. The six rules:

    ax      |- ~A, A
    cut     |- G, A    |- D, ~A   =>  |- G, D
    par     |- G, A, B            =>  |- G, (A % B)
    tensor  |- G, A    |- D, B    =>  |- G, D, (A * B)
    q_n     |- A, B  with U on n qubits  =>  |- <>^n A, []^n B

A quantum rule requires its two premise formulas to be both modal or both
non-modal. Its conclusion always lists the diamond formula first; the
`flip` flag says which premise position the diamonds landed on (normally
the first). Flipped instances only arise from cut elimination.

File format:

    P ::= (ax F) | (cut i j P P) | (par i j P) | (tensor i j P P)
        | (q n GATE P) | (qflip n GATE P)
    GATE ::= I{n} | H | X | Y | Z | S | T | CNOT | SWAP | (mat ROW ...)

where ROW is a bracket list of [re,im] pairs, row-major.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tokens as tk
from .errors import CheckFailure, PreconditionError, ProofError, ProofSyntaxError, QmllError
from .formulas import (Atom, Box, Diamond, Formula, dual, is_modal, parse_formula_stream,
                       print_formula, wrap_modal)
from .matrices import UnitaryMatrix, f17, gate_by_name

Sequent = tuple[Formula, ...]
Path = tuple[int, ...]
OccurrenceId = tuple[Path, int]  # (node path from root, 1-based position)


def print_sequent(s: Sequent) -> str:
    return ", ".join(print_formula(f) for f in s)


def path_str(p: Path) -> str:
    return ".".join(str(i) for i in p) if p else "root"


def _minus(seq: Sequent, *positions: int) -> Sequent:
    drop = set(positions)
    return tuple(f for k, f in enumerate(seq, start=1) if k not in drop)


# ---------------------------------------------------------------------------
# rule nodes


@dataclass(frozen=True, eq=False)
class AxiomRule:
    formula: Formula
    conclusion: Sequent = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "conclusion", (dual(self.formula), self.formula))


@dataclass(frozen=True, eq=False)
class CutRule:
    i: int
    j: int
    left: "Proof"
    right: "Proof"
    conclusion: Sequent = field(init=False)

    def __post_init__(self):
        msgs = _cut_violations(self.i, self.j, self.left.conclusion, self.right.conclusion)
        if msgs:
            raise ProofError("; ".join(msgs))
        concl = _minus(self.left.conclusion, self.i) + _minus(self.right.conclusion, self.j)
        object.__setattr__(self, "conclusion", concl)

    @property
    def cut_formula(self) -> Formula:
        return self.left.conclusion[self.i - 1]


@dataclass(frozen=True, eq=False)
class ParRule:
    i: int
    j: int
    sub: "Proof"
    conclusion: Sequent = field(init=False)

    def __post_init__(self):
        msgs = _par_violations(self.i, self.j, self.sub.conclusion)
        if msgs:
            raise ProofError("; ".join(msgs))
        prem = self.sub.conclusion
        from .formulas import Par as ParF
        concl = _minus(prem, self.i, self.j) + (ParF(prem[self.i - 1], prem[self.j - 1]),)
        object.__setattr__(self, "conclusion", concl)


@dataclass(frozen=True, eq=False)
class TensorRule:
    i: int
    j: int
    left: "Proof"
    right: "Proof"
    conclusion: Sequent = field(init=False)

    def __post_init__(self):
        msgs = _tensor_violations(self.i, self.j, self.left.conclusion, self.right.conclusion)
        if msgs:
            raise ProofError("; ".join(msgs))
        from .formulas import Tensor as TensorF
        principal = TensorF(self.left.conclusion[self.i - 1], self.right.conclusion[self.j - 1])
        concl = (_minus(self.left.conclusion, self.i)
                 + _minus(self.right.conclusion, self.j) + (principal,))
        object.__setattr__(self, "conclusion", concl)


@dataclass(frozen=True, eq=False)
class QRule:
    arity: int
    gate: UnitaryMatrix
    sub: "Proof"
    flip: bool = False
    conclusion: Sequent = field(init=False)

    def __post_init__(self):
        msgs = _qrule_violations(self.arity, self.gate, self.sub.conclusion)
        if msgs:
            raise ProofError("; ".join(msgs))
        a, b = self.sub.conclusion
        d_src, b_src = (b, a) if self.flip else (a, b)
        concl = (wrap_modal("dia", self.arity, d_src), wrap_modal("box", self.arity, b_src))
        object.__setattr__(self, "conclusion", concl)

    @property
    def diamond_source(self) -> int:
        """Premise position whose formula receives the diamonds."""
        return 2 if self.flip else 1

    @property
    def box_source(self) -> int:
        return 1 if self.flip else 2


Proof = AxiomRule | CutRule | ParRule | TensorRule | QRule


def _cut_violations(i: int, j: int, lc: Sequent, rc: Sequent) -> list[str]:
    out = []
    if not 1 <= i <= len(lc):
        out.append(f"cut position {i} out of range for left premise of length {len(lc)}")
    if not 1 <= j <= len(rc):
        out.append(f"cut position {j} out of range for right premise of length {len(rc)}")
    if not out and dual(lc[i - 1]) != rc[j - 1]:
        out.append(f"cut formulas are not dual: {print_formula(lc[i - 1])}"
                   f" vs {print_formula(rc[j - 1])}")
    if not out and len(lc) + len(rc) == 2:
        out.append("cut would conclude the empty sequent")
    return out


def _par_violations(i: int, j: int, prem: Sequent) -> list[str]:
    out = []
    for pos in (i, j):
        if not 1 <= pos <= len(prem):
            out.append(f"par position {pos} out of range for premise of length {len(prem)}")
    if i == j:
        out.append("par positions must be distinct")
    return out


def _tensor_violations(i: int, j: int, lc: Sequent, rc: Sequent) -> list[str]:
    out = []
    if not 1 <= i <= len(lc):
        out.append(f"tensor position {i} out of range for left premise of length {len(lc)}")
    if not 1 <= j <= len(rc):
        out.append(f"tensor position {j} out of range for right premise of length {len(rc)}")
    return out


def _qrule_violations(arity: int, gate: UnitaryMatrix, prem: Sequent) -> list[str]:
    out = []
    if arity < 1:
        out.append(f"quantum rule arity must be positive, got {arity}")
    if len(prem) != 2:
        out.append(f"quantum rule premise must have exactly 2 formulas, got {len(prem)}")
        return out
    if gate.dim_qubits != arity:
        out.append(f"gate acts on {gate.dim_qubits} qubits but the declared arity is {arity}")
    a, b = prem
    if is_modal(a) != is_modal(b):
        out.append("quantum rule premise mixes a modal and a non-modal formula: "
                   f"{print_formula(a)}, {print_formula(b)}")
    return out


# ---------------------------------------------------------------------------
# traversal helpers


def children(p: Proof) -> tuple[Proof, ...]:
    match p:
        case AxiomRule():
            return ()
        case CutRule(_, _, l, r) | TensorRule(_, _, l, r):
            return (l, r)
        case ParRule(_, _, s) | QRule(_, _, s):
            return (s,)
    raise QmllError(f"not a proof node: {p!r}")


def node_at(p: Proof, path: Path) -> Proof:
    cur = p
    for k in path:
        kids = children(cur)
        if k >= len(kids):
            raise PreconditionError(f"no node at path {path_str(path)}")
        cur = kids[k]
    return cur


def iter_nodes(p: Proof, path: Path = ()) -> list[tuple[Path, Proof]]:
    """Post-order (children first, left to right)."""
    out: list[tuple[Path, Proof]] = []
    for k, c in enumerate(children(p)):
        out.extend(iter_nodes(c, path + (k,)))
    out.append((path, p))
    return out


def rule_count(p: Proof) -> int:
    return 1 + sum(rule_count(c) for c in children(p))


def proofs_equal(p: Proof, q: Proof, gate_tol: float = 1e-9) -> bool:
    """Structural equality; gate matrices compared entry-wise within gate_tol."""
    if type(p) is not type(q):
        return False
    match p:
        case AxiomRule(f):
            return f == q.formula
        case CutRule(i, j, l, r):
            return (i, j) == (q.i, q.j) and proofs_equal(l, q.left, gate_tol) \
                and proofs_equal(r, q.right, gate_tol)
        case ParRule(i, j, s):
            return (i, j) == (q.i, q.j) and proofs_equal(s, q.sub, gate_tol)
        case TensorRule(i, j, l, r):
            return (i, j) == (q.i, q.j) and proofs_equal(l, q.left, gate_tol) \
                and proofs_equal(r, q.right, gate_tol)
        case QRule(n, g, s, fl):
            if n != q.arity or fl != q.flip or g.data.shape != q.gate.data.shape:
                return False
            if np.max(np.abs(g.data - q.gate.data)) > gate_tol:
                return False
            return proofs_equal(s, q.sub, gate_tol)
    return False


# ---------------------------------------------------------------------------
# occurrence linkage: where each conclusion occurrence comes from


def premise_source(p: Proof, pos: int) -> tuple[int, int] | None:
    """Map a non-principal conclusion position to (child index, premise position).

    Returns None for principal occurrences (introduced by the rule itself).
    """
    match p:
        case AxiomRule():
            return None
        case CutRule(i, j, l, _):
            nl = len(l.conclusion) - 1
            if pos <= nl:
                prem = pos if pos < i else pos + 1
                return (0, prem)
            pos -= nl
            prem = pos if pos < j else pos + 1
            return (1, prem)
        case ParRule(i, j, s):
            if pos == len(p.conclusion):
                return None
            lo, hi = min(i, j), max(i, j)
            prem = pos
            if prem >= lo:
                prem += 1
            if prem >= hi:
                prem += 1
            return (0, prem)
        case TensorRule(i, j, l, _):
            if pos == len(p.conclusion):
                return None
            nl = len(l.conclusion) - 1
            if pos <= nl:
                prem = pos if pos < i else pos + 1
                return (0, prem)
            pos -= nl
            prem = pos if pos < j else pos + 1
            return (1, prem)
        case QRule():
            return None
    raise QmllError(f"not a proof node: {p!r}")


def principal_positions(p: Proof) -> tuple[int, ...]:
    match p:
        case AxiomRule() | QRule():
            return (1, 2)
        case CutRule():
            return ()
        case ParRule() | TensorRule():
            return (len(p.conclusion),)
    raise QmllError(f"not a proof node: {p!r}")


def principal_formulas(p: Proof, path: Path) -> set[OccurrenceId]:
    """Occurrences introduced (or cut) by the rule at `path`."""
    node = node_at(p, path)
    if isinstance(node, CutRule):
        return {(path + (0,), node.i), (path + (1,), node.j)}
    return {(path, pos) for pos in principal_positions(node)}


# ---------------------------------------------------------------------------
# checker


@dataclass(frozen=True)
class CheckReport:
    ok: bool
    violations: tuple[tuple[str, str], ...] = ()  # (node path, message)

    def __str__(self) -> str:
        if self.ok:
            return "ok"
        return "; ".join(f"at {p}: {m}" for p, m in self.violations)


def check(p: Proof) -> CheckReport:
    """Re-validate every rule instance; reports the first violation found."""
    for path, node in iter_nodes(p):
        msgs: list[str] = []
        match node:
            case AxiomRule():
                if node.conclusion != (dual(node.formula), node.formula):
                    msgs.append("axiom conclusion is not (dual, formula)")
            case CutRule(i, j, l, r):
                msgs = _cut_violations(i, j, l.conclusion, r.conclusion)
            case ParRule(i, j, s):
                msgs = _par_violations(i, j, s.conclusion)
            case TensorRule(i, j, l, r):
                msgs = _tensor_violations(i, j, l.conclusion, r.conclusion)
            case QRule(n, g, s, _):
                msgs = _qrule_violations(n, g, s.conclusion)
        if not msgs and not node.conclusion:
            msgs.append("empty conclusion")
        if msgs:
            return CheckReport(False, ((path_str(path), msgs[0]),))
    return CheckReport(True)


# ---------------------------------------------------------------------------
# the permutation-matrix reading of cut-free multiplicative proofs


def mll_axiom_link_matrix(p: Proof) -> np.ndarray:
    """Adjacency matrix of the axiom links over the conclusion's atoms.

    Requires a cut-free, quantum-rule-free proof with atomic axioms. Atom
    occurrences are numbered left to right across the conclusion sequent.
    """
    next_link = 0

    def go(node: Proof) -> list[list[int]]:
        nonlocal next_link
        match node:
            case AxiomRule(f):
                if not isinstance(f, Atom):
                    raise PreconditionError(
                        f"non-atomic axiom on {print_formula(f)}")
                link = next_link
                next_link += 1
                return [[link], [link]]
            case CutRule():
                raise PreconditionError("proof contains a cut")
            case QRule():
                raise PreconditionError("proof contains a quantum rule")
            case ParRule(i, j, s):
                leaves = go(s)
                merged = leaves[i - 1] + leaves[j - 1]
                rest = [lv for k, lv in enumerate(leaves, start=1) if k not in (i, j)]
                return rest + [merged]
            case TensorRule(i, j, l, r):
                ll, rl = go(l), go(r)
                merged = ll[i - 1] + rl[j - 1]
                rest = [lv for k, lv in enumerate(ll, start=1) if k != i]
                rest += [lv for k, lv in enumerate(rl, start=1) if k != j]
                return rest + [merged]
        raise QmllError(f"not a proof node: {node!r}")

    per_formula = go(p)
    flat: list[int] = [link for leaves in per_formula for link in leaves]
    n = len(flat)
    m = np.zeros((n, n), dtype=int)
    by_link: dict[int, list[int]] = {}
    for idx, link in enumerate(flat):
        by_link.setdefault(link, []).append(idx)
    for pair in by_link.values():
        a, b = pair
        m[a, b] = m[b, a] = 1
    return m


# ---------------------------------------------------------------------------
# parsing / printing


def _parse_gate(ts: tk.TokenStream) -> UnitaryMatrix:
    t = ts.peek()
    if t.kind == tk.IDENT:
        ts.next()
        try:
            return gate_by_name(t.text)
        except QmllError as e:
            raise ProofSyntaxError(str(e), t.pos) from e
    if t.kind == tk.LP:
        ts.next()
        kw = ts.expect(tk.IDENT, ProofSyntaxError)
        if kw.text != "mat":
            raise ProofSyntaxError(f"expected 'mat', found {kw.text!r}", kw.pos)
        rows = []
        while ts.peek().kind == tk.LB:
            rows.append(_parse_row(ts))
        ts.expect(tk.RP, ProofSyntaxError)
        if not rows:
            raise ProofSyntaxError("empty matrix literal", t.pos)
        try:
            return UnitaryMatrix(np.array(rows, dtype=complex))
        except QmllError as e:
            raise ProofSyntaxError(f"bad matrix literal: {e}", t.pos) from e
    raise ProofSyntaxError(f"expected a gate, found {t.text!r}", t.pos)


def _parse_row(ts: tk.TokenStream) -> list[complex]:
    ts.expect(tk.LB, ProofSyntaxError)
    row: list[complex] = []
    while True:
        row.append(_parse_entry(ts))
        t = ts.next()
        if t.kind == tk.RB:
            return row
        if t.kind != tk.COMMA:
            raise ProofSyntaxError(f"expected ',' or ']', found {t.text!r}", t.pos)


def _parse_entry(ts: tk.TokenStream) -> complex:
    ts.expect(tk.LB, ProofSyntaxError)
    re = float(ts.expect(tk.NUMBER, ProofSyntaxError).text)
    ts.expect(tk.COMMA, ProofSyntaxError)
    im = float(ts.expect(tk.NUMBER, ProofSyntaxError).text)
    ts.expect(tk.RB, ProofSyntaxError)
    return complex(re, im)


def _parse_position(ts: tk.TokenStream) -> int:
    t = ts.expect(tk.NUMBER, ProofSyntaxError)
    try:
        val = int(t.text)
    except ValueError:
        raise ProofSyntaxError(f"expected an integer position, found {t.text!r}", t.pos)
    return val


RawNode = tuple  # (keyword, args..., position)


def _parse_raw(ts: tk.TokenStream) -> RawNode:
    start = ts.expect(tk.LP, ProofSyntaxError)
    kw = ts.expect(tk.IDENT, ProofSyntaxError)
    if kw.text == "ax":
        f = parse_formula_stream(ts)
        ts.expect(tk.RP, ProofSyntaxError)
        return ("ax", f, start.pos)
    if kw.text in ("cut", "tensor"):
        i, j = _parse_position(ts), _parse_position(ts)
        l, r = _parse_raw(ts), _parse_raw(ts)
        ts.expect(tk.RP, ProofSyntaxError)
        return (kw.text, i, j, l, r, start.pos)
    if kw.text == "par":
        i, j = _parse_position(ts), _parse_position(ts)
        s = _parse_raw(ts)
        ts.expect(tk.RP, ProofSyntaxError)
        return ("par", i, j, s, start.pos)
    if kw.text in ("q", "qflip"):
        n = _parse_position(ts)
        gate = _parse_gate(ts)
        s = _parse_raw(ts)
        ts.expect(tk.RP, ProofSyntaxError)
        return (kw.text, n, gate, s, start.pos)
    raise ProofSyntaxError(f"unknown rule {kw.text!r}", kw.pos)


def _build(raw: RawNode, path: Path, violations: list[tuple[str, str]]) -> Proof | None:
    def attempt(ctor, *args):
        try:
            return ctor(*args)
        except ProofError as e:
            violations.append((path_str(path), str(e)))
            return None

    kind = raw[0]
    if kind == "ax":
        return attempt(AxiomRule, raw[1])
    if kind == "cut":
        l = _build(raw[3], path + (0,), violations)
        r = _build(raw[4], path + (1,), violations)
        return attempt(CutRule, raw[1], raw[2], l, r) if l and r else None
    if kind == "par":
        s = _build(raw[3], path + (0,), violations)
        return attempt(ParRule, raw[1], raw[2], s) if s else None
    if kind == "tensor":
        l = _build(raw[3], path + (0,), violations)
        r = _build(raw[4], path + (1,), violations)
        return attempt(TensorRule, raw[1], raw[2], l, r) if l and r else None
    # q / qflip
    s = _build(raw[3], path + (0,), violations)
    return attempt(QRule, raw[1], raw[2], s, kind == "qflip") if s else None


def parse_proof(text: str) -> Proof:
    """Parse and check a proof; raises on syntax errors or rule violations."""
    ts = tk.TokenStream(tk.tokenize(text))
    raw = _parse_raw(ts)
    end = ts.peek()
    if end.kind != tk.EOF:
        raise ProofSyntaxError(f"trailing input {end.text!r}", end.pos)
    violations: list[tuple[str, str]] = []
    p = _build(raw, (), violations)
    if violations or p is None:
        raise CheckFailure(CheckReport(False, tuple(violations)))
    return p


def print_gate(g: UnitaryMatrix) -> str:
    if g.name is not None:
        return g.name
    rows = []
    for row in g.data:
        rows.append("[" + ",".join(f"[{f17(z.real)},{f17(z.imag)}]" for z in row) + "]")
    return "(mat " + " ".join(rows) + ")"


def print_proof(p: Proof) -> str:
    match p:
        case AxiomRule(f):
            return f"(ax {print_formula(f)})"
        case CutRule(i, j, l, r):
            return f"(cut {i} {j} {print_proof(l)} {print_proof(r)})"
        case ParRule(i, j, s):
            return f"(par {i} {j} {print_proof(s)})"
        case TensorRule(i, j, l, r):
            return f"(tensor {i} {j} {print_proof(l)} {print_proof(r)})"
        case QRule(n, g, s, fl):
            kw = "qflip" if fl else "q"
            return f"({kw} {n} {print_gate(g)} {print_proof(s)})"
    raise QmllError(f"not a proof node: {p!r}")
