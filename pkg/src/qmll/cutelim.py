"""The reduction relation on proofs: redexes, rewrite steps, normalization.

Seven schemas: axiom reduction, multiplicative principal reduction, quantum
principal reduction, eta expansion of modal axioms, contraction of nested
quantum rules, and the three commuting reductions (par, tensor-left,
tensor-right), each usable on either cut premise.

Sequents are ordered, so a step may permute the rewritten node's conclusion
(the multiset never changes). `step` returns the permutation of the root
conclusion; ancestors absorb child permutations by remapping their position
arguments, and a quantum rule absorbs a swapped premise by toggling its
`flip` orientation, which leaves its own conclusion untouched.

Redex enumeration is deliberately narrow where overlapping choices would
break one-step confluence. Redexes are grouped into families with a fixed
priority (eta expansion, axiom reduction, contraction, multiplicative
principal, quantum principal, commuting) and only the highest nonempty
family is offered, so families never race. Eta, axiom reduction, and
contraction may offer several disjoint instances at once; firing one never
suspends another, so divergent picks rejoin in one step. The remaining
families can spawn higher-priority work when they fire, so they are
offered one instance at a time.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .errors import MachineError, ProofError, StaleRedexError
from .formulas import dual, leading_run, modal_chain, size
from .matrices import identity_gate, matmul, tensor
from .proofs import (AxiomRule, CutRule, ParRule, Path, Proof, QRule, Sequent, TensorRule,
                     children, path_str, rule_count)

Perm = tuple[int, ...]  # perm[old_pos - 1] = new_pos, 1-based


def _identity(n: int) -> Perm:
    return tuple(range(1, n + 1))


def _skip(p: int, removed: int) -> int:
    """Slot of premise position p once `removed` is deleted (p != removed)."""
    return p - 1 if p > removed else p


def _unskip(t: int, removed: int) -> int:
    """Premise position of slot t in the list with `removed` deleted."""
    return t + 1 if t >= removed else t


def _skip2(p: int, r1: int, r2: int) -> int:
    return p - (p > r1) - (p > r2)


def _unskip2(t: int, r1: int, r2: int) -> int:
    lo, hi = min(r1, r2), max(r1, r2)
    p = t
    if p >= lo:
        p += 1
    if p >= hi:
        p += 1
    return p


@dataclass(frozen=True)
class Redex:
    kind: str
    path: Path
    data: tuple = ()

    def __str__(self) -> str:
        return f"{self.kind}@{path_str(self.path)}{self.data if self.data else ''}"


@dataclass(frozen=True)
class TraceStep:
    redex: Redex
    size_before: int
    weight_before: int


@dataclass
class ReductionTrace:
    steps: list[TraceStep]
    final: Proof
    final_weight: int
    perms: list[Perm] = field(default_factory=list)


# ---------------------------------------------------------------------------
# redex enumeration


def _root_contractible(p: Proof) -> bool:
    return isinstance(p, QRule) and not p.flip and isinstance(p.sub, QRule)


def _axiom_elim_perm(node: CutRule, side: str) -> Perm:
    total = len(node.conclusion)
    if side == "right":
        nl = len(node.left.conclusion) - 1
        return tuple(_unskip(t, node.i) for t in range(1, nl + 1)) + (node.i,)
    nr = len(node.right.conclusion) - 1
    return (node.j,) + tuple(_unskip(t, node.j) for t in range(1, nr + 1))


def _cut_redex(node: CutRule, path: Path) -> Redex | None:
    L, R, i, j = node.left, node.right, node.i, node.j
    sides = [s for s, prem in (("right", R), ("left", L)) if isinstance(prem, AxiomRule)]
    if sides:
        for s in sides:
            if _axiom_elim_perm(node, s) == _identity(len(node.conclusion)):
                return Redex("AxiomRed", path, (s,))
        return Redex("AxiomRed", path, (sides[0],))
    li, lj = len(L.conclusion), len(R.conclusion)
    if isinstance(L, TensorRule) and i == li and isinstance(R, ParRule) and j == lj:
        return Redex("MultPrincipal", path, ("tensor_left",))
    if isinstance(L, ParRule) and i == li and isinstance(R, TensorRule) and j == lj:
        return Redex("MultPrincipal", path, ("par_left",))
    if isinstance(L, QRule) and isinstance(R, QRule):
        if L.arity == R.arity:
            case = "A" if (i, j) == (2, 1) else "B"
            return Redex("QuantumPrincipal", path, (case,))
        return None
    if isinstance(R, ParRule) and j != lj:
        return Redex("CommutePar", path, ("R",))
    if isinstance(R, TensorRule) and j != lj:
        part = "CommuteTensorLeft" if j <= len(R.left.conclusion) - 1 else "CommuteTensorRight"
        return Redex(part, path, ("R",))
    if isinstance(L, ParRule) and i != li:
        return Redex("CommutePar", path, ("L",))
    if isinstance(L, TensorRule) and i != li:
        part = "CommuteTensorLeft" if i <= len(L.left.conclusion) - 1 else "CommuteTensorRight"
        return Redex(part, path, ("L",))
    return None


_FAMILY = {"EtaExpand": 0, "AxiomRed": 1, "QContract": 2, "MultPrincipal": 3,
           "QuantumPrincipal": 4, "CommutePar": 5, "CommuteTensorLeft": 5,
           "CommuteTensorRight": 5}
_SINGLE = {3, 4, 5}  # families whose firing can spawn higher-priority redexes


def find_redexes(p: Proof) -> list[Redex]:
    """Offered redexes of the highest-priority nonempty family, in post-order."""
    families: list[list[Redex]] = [[] for _ in range(6)]

    def walk(node: Proof, path: Path):
        for k, c in enumerate(children(node)):
            walk(c, path + (k,))
        if isinstance(node, AxiomRule):
            kind, n, _ = leading_run(node.formula)
            if n >= 1:
                families[0].append(Redex("EtaExpand", path, (kind, n)))
        elif _root_contractible(node):
            families[2].append(Redex("QContract", path))
        elif isinstance(node, CutRule):
            r = _cut_redex(node, path)
            if r is not None:
                families[_FAMILY[r.kind]].append(r)

    walk(p, ())
    for idx, fam in enumerate(families):
        if fam:
            return fam[:1] if idx in _SINGLE else fam
    return []


# ---------------------------------------------------------------------------
# firing a redex at its node


def _stale(msg: str):
    raise StaleRedexError(f"redex does not match the proof: {msg}")


def _fire(node: Proof, redex: Redex) -> tuple[Proof, Perm]:
    kind = redex.kind
    if kind == "AxiomRed":
        if not isinstance(node, CutRule):
            _stale("expected a cut")
        (side,) = redex.data
        axiom = node.right if side == "right" else node.left
        if not isinstance(axiom, AxiomRule):
            _stale("expected an axiom premise")
        survivor = node.left if side == "right" else node.right
        return survivor, _axiom_elim_perm(node, side)

    if kind == "MultPrincipal":
        if not isinstance(node, CutRule):
            _stale("expected a cut")
        (orient,) = redex.data
        if orient == "tensor_left":
            L, R = node.left, node.right
            if not (isinstance(L, TensorRule) and isinstance(R, ParRule)):
                _stale("expected tensor against par")
            a, b, c, d = L.i, L.j, R.i, R.j
            inner = CutRule(b, d, L.right, R.sub)
            outer = CutRule(a, (len(L.right.conclusion) - 1) + _skip(c, d), L.left, inner)
            return outer, _identity(len(node.conclusion))
        L, R = node.left, node.right
        if not (isinstance(L, ParRule) and isinstance(R, TensorRule)):
            _stale("expected par against tensor")
        c, d, a, b = L.i, L.j, R.i, R.j
        inner = CutRule(c, a, L.sub, R.left)
        outer = CutRule(_skip(d, c), b, inner, R.right)
        return outer, _identity(len(node.conclusion))

    if kind == "QuantumPrincipal":
        if not isinstance(node, CutRule):
            _stale("expected a cut")
        L, R = node.left, node.right
        if not (isinstance(L, QRule) and isinstance(R, QRule) and L.arity == R.arity):
            _stale("expected quantum rules of equal arity")
        (case,) = redex.data
        if case == "A":
            # left rule contributes the boxed cut formula; its gate fires first
            inner = CutRule(L.box_source, R.diamond_source, L.sub, R.sub)
            return QRule(L.arity, matmul(R.gate, L.gate), inner), _identity(2)
        inner = CutRule(L.diamond_source, R.box_source, L.sub, R.sub)
        return QRule(L.arity, matmul(L.gate, R.gate), inner, flip=True), (2, 1)

    if kind == "EtaExpand":
        if not isinstance(node, AxiomRule):
            _stale("expected an axiom")
        run_kind, n = redex.data
        got_kind, got_n, core = leading_run(node.formula)
        if (got_kind, got_n) != (run_kind, n):
            _stale("axiom prefix changed")
        if run_kind == "box":
            return QRule(n, identity_gate(n), AxiomRule(core)), _identity(2)
        return QRule(n, identity_gate(n), AxiomRule(dual(core))), (2, 1)

    if kind == "QContract":
        if not (_root_contractible(node) and isinstance(node, QRule)):
            _stale("expected a contractible quantum pair")
        inner = node.sub
        merged = QRule(inner.arity + node.arity, tensor(inner.gate, node.gate),
                       inner.sub, flip=inner.flip)
        return merged, _identity(2)

    if kind in ("CommutePar", "CommuteTensorLeft", "CommuteTensorRight"):
        return _fire_commute(node, redex)

    _stale(f"unknown redex kind {kind!r}")


def _fire_commute(node: Proof, redex: Redex) -> tuple[Proof, Perm]:
    if not isinstance(node, CutRule):
        _stale("expected a cut")
    (side,) = redex.data
    L, R, i, j = node.left, node.right, node.i, node.j
    total = len(node.conclusion)
    nl = len(L.conclusion) - 1

    if redex.kind == "CommutePar":
        if side == "R":
            if not isinstance(R, ParRule) or j == len(R.conclusion):
                _stale("expected a commutable par on the right")
            c, d = R.i, R.j
            j2 = _unskip2(j, c, d)
            inner = CutRule(i, j2, L, R.sub)
            repl = ParRule(nl + _skip(c, j2), nl + _skip(d, j2), inner)
            return repl, _identity(total)
        if not isinstance(L, ParRule) or i == len(L.conclusion):
            _stale("expected a commutable par on the left")
        c, d = L.i, L.j
        i2 = _unskip2(i, c, d)
        inner = CutRule(i2, j, L.sub, R)
        repl = ParRule(_skip(c, i2), _skip(d, i2), inner)
        # old: passengers, principal, right block; new: principal moves last
        ntheta = len(L.conclusion) - 1 - 1  # par passengers minus the cut slot
        nr = len(R.conclusion) - 1
        perm = []
        for t in range(1, total + 1):
            if t <= ntheta:
                perm.append(t)
            elif t == ntheta + 1:
                perm.append(ntheta + nr + 1)
            else:
                perm.append(t - 1)
        return repl, tuple(perm)

    if redex.kind == "CommuteTensorLeft":
        if side == "R":
            if not isinstance(R, TensorRule):
                _stale("expected a tensor on the right")
            a, b = R.i, R.j
            p1 = _unskip(j, a)
            inner = CutRule(i, p1, L, R.left)
            repl = TensorRule(nl + _skip(a, p1), b, inner, R.right)
            return repl, _identity(total)
        if not isinstance(L, TensorRule):
            _stale("expected a tensor on the left")
        a, b = L.i, L.j
        p1 = _unskip(i, a)
        inner = CutRule(p1, j, L.left, R)
        repl = TensorRule(_skip(a, p1), b, inner, L.right)
        m1 = len(L.left.conclusion) - 2
        m2 = len(L.right.conclusion) - 1
        nr = len(R.conclusion) - 1
        perm = []
        for t in range(1, total + 1):
            if t <= m1:
                perm.append(t)
            elif t <= m1 + m2:
                perm.append(t + nr)
            elif t == m1 + m2 + 1:
                perm.append(m1 + nr + m2 + 1)
            else:
                perm.append(t - m2 - 1)
        return repl, tuple(perm)

    # CommuteTensorRight
    if side == "R":
        if not isinstance(R, TensorRule):
            _stale("expected a tensor on the right")
        a, b = R.i, R.j
        n1 = len(R.left.conclusion) - 1
        p2 = _unskip(j - n1, b)
        inner = CutRule(i, p2, L, R.right)
        repl = TensorRule(a, nl + _skip(b, p2), R.left, inner)
        perm = []
        for t in range(1, total + 1):
            if t <= nl:
                perm.append(t + n1)
            elif t <= nl + n1:
                perm.append(t - nl)
            else:
                perm.append(t)
        return repl, tuple(perm)
    if not isinstance(L, TensorRule):
        _stale("expected a tensor on the left")
    a, b = L.i, L.j
    n1 = len(L.left.conclusion) - 1
    p2 = _unskip(i - n1, b)
    inner = CutRule(p2, j, L.right, R)
    repl = TensorRule(a, _skip(b, p2), L.left, inner)
    m1 = n1
    m2 = len(L.right.conclusion) - 2
    nr = len(R.conclusion) - 1
    perm = []
    for t in range(1, total + 1):
        if t <= m1 + m2:
            perm.append(t)
        elif t == m1 + m2 + 1:
            perm.append(m1 + m2 + nr + 1)
        else:
            perm.append(t - 1)
    return repl, tuple(perm)


# ---------------------------------------------------------------------------
# rebuilding the spine above a fired redex


def _rebuild(node: Proof, k: int, new_child: Proof, sig: Perm) -> tuple[Proof, Perm]:
    total = len(node.conclusion)
    if sig == _identity(len(sig)):
        kids = list(children(node))
        kids[k] = new_child
        return _replace_children(node, kids), _identity(total)

    if isinstance(node, CutRule):
        nl = len(node.left.conclusion) - 1
        if k == 0:
            i2 = sig[node.i - 1]
            repl = CutRule(i2, node.j, new_child, node.right)
            perm = []
            for t in range(1, total + 1):
                if t <= nl:
                    p2 = sig[_unskip(t, node.i) - 1]
                    perm.append(_skip(p2, i2))
                else:
                    perm.append(t)
            return repl, tuple(perm)
        j2 = sig[node.j - 1]
        repl = CutRule(node.i, j2, node.left, new_child)
        perm = []
        for t in range(1, total + 1):
            if t <= nl:
                perm.append(t)
            else:
                p2 = sig[_unskip(t - nl, node.j) - 1]
                perm.append(nl + _skip(p2, j2))
        return repl, tuple(perm)

    if isinstance(node, ParRule):
        i2, j2 = sig[node.i - 1], sig[node.j - 1]
        repl = ParRule(i2, j2, new_child)
        perm = []
        for t in range(1, total + 1):
            if t == total:
                perm.append(t)
            else:
                p2 = sig[_unskip2(t, node.i, node.j) - 1]
                perm.append(_skip2(p2, i2, j2))
        return repl, tuple(perm)

    if isinstance(node, TensorRule):
        nl = len(node.left.conclusion) - 1
        if k == 0:
            i2 = sig[node.i - 1]
            repl = TensorRule(i2, node.j, new_child, node.right)
            perm = []
            for t in range(1, total + 1):
                if t <= nl:
                    p2 = sig[_unskip(t, node.i) - 1]
                    perm.append(_skip(p2, i2))
                else:
                    perm.append(t)
            return repl, tuple(perm)
        j2 = sig[node.j - 1]
        repl = TensorRule(node.i, j2, node.left, new_child)
        perm = []
        for t in range(1, total + 1):
            if nl < t < total:
                p2 = sig[_unskip(t - nl, node.j) - 1]
                perm.append(nl + _skip(p2, j2))
            else:
                perm.append(t)
        return repl, tuple(perm)

    if isinstance(node, QRule):
        if len(sig) != 2:
            raise ProofError("quantum rule premise must keep two formulas")
        # a swapped premise is absorbed by flipping the modal orientation,
        # which reproduces the identical conclusion
        repl = QRule(node.arity, node.gate, new_child, flip=not node.flip)
        return repl, _identity(total)

    raise ProofError(f"cannot rebuild above {type(node).__name__}")


def _replace_children(node: Proof, kids: list[Proof]) -> Proof:
    match node:
        case CutRule(i, j, _, _):
            return CutRule(i, j, kids[0], kids[1])
        case ParRule(i, j, _):
            return ParRule(i, j, kids[0])
        case TensorRule(i, j, _, _):
            return TensorRule(i, j, kids[0], kids[1])
        case QRule(n, g, _, fl):
            return QRule(n, g, kids[0], flip=fl)
    raise ProofError(f"node has no children: {node!r}")


def step(proof: Proof, redex: Redex) -> tuple[Proof, Perm]:
    """Fire `redex`; returns the new proof and the root conclusion permutation."""

    def rewrite(node: Proof, d: int) -> tuple[Proof, Perm]:
        if d == len(redex.path):
            return _fire(node, redex)
        k = redex.path[d]
        kids = children(node)
        if k >= len(kids):
            _stale(f"no child {k} at {path_str(redex.path[:d])}")
        child2, sig = rewrite(kids[k], d + 1)
        return _rebuild(node, k, child2, sig)

    return rewrite(proof, 0)


# ---------------------------------------------------------------------------
# termination measure


def weight(p: Proof) -> int:
    """Strictly decreases under every reduction step.

    Axioms weigh by their modal prefix (eta expansion peels it), quantum and
    multiplicative rules weigh one, and each cut weighs an exponential in its
    cut formula's size scaled by the multiplicative rules above it (commuting
    steps pull one of those below the cut).
    """

    def go(node: Proof) -> tuple[int, int]:
        match node:
            case AxiomRule(f):
                return 2 * modal_chain(f) + 1, 0
            case ParRule(_, _, s):
                w, m = go(s)
                return w + 1, m + 1
            case TensorRule(_, _, l, r):
                wl, ml = go(l)
                wr, mr = go(r)
                return wl + wr + 1, ml + mr + 1
            case QRule(_, _, s, _):
                w, m = go(s)
                return w + 1, m
            case CutRule(_, _, l, r):
                wl, ml = go(l)
                wr, mr = go(r)
                f = node.cut_formula
                return wl + wr + 3 ** size(f) * (1 + ml + mr), ml + mr
        raise ProofError(f"not a proof node: {node!r}")

    return go(p)[0]


def normalize(p: Proof, strategy: str = "leftmost-innermost", seed: int = 0,
              bound: int | None = None) -> ReductionTrace:
    """Reduce to normal form; the result is cut-free and strategy-independent."""
    if strategy not in ("leftmost-innermost", "random"):
        raise ValueError(f"unknown strategy {strategy!r}")
    rng = random.Random(seed)
    limit = bound if bound is not None else 2 ** rule_count(p)
    cur = p
    w_cur = weight(cur)
    steps: list[TraceStep] = []
    perms: list[Perm] = []
    while True:
        redexes = find_redexes(cur)
        if not redexes:
            return ReductionTrace(steps, cur, w_cur, perms)
        r = redexes[0] if strategy == "leftmost-innermost" else rng.choice(redexes)
        nxt, sigma = step(cur, r)
        w_nxt = weight(nxt)
        if w_nxt >= w_cur:
            raise MachineError(f"weight failed to decrease on {r}: {w_cur} -> {w_nxt}")
        steps.append(TraceStep(r, rule_count(cur), w_cur))
        perms.append(sigma)
        cur, w_cur = nxt, w_nxt
        if len(steps) > limit:
            raise MachineError("normalization exceeded its step bound")


def canonical_form(p: Proof) -> Proof:
    """Normalize the representation freedoms of a proof, for equality checks.

    An axiom on f and an axiom on dual(f) are the same rule instance written
    in the two possible conclusion orders; likewise a flipped quantum rule
    over a swapped premise matches its unflipped mirror. This picks the
    lexicographically smaller axiom formula everywhere and lets the usual
    rebuild machinery absorb the induced position swaps.
    """
    from .formulas import print_formula

    def go(node: Proof) -> tuple[Proof, Perm]:
        if isinstance(node, AxiomRule):
            other = dual(node.formula)
            if print_formula(other) < print_formula(node.formula):
                return AxiomRule(other), (2, 1)
            return node, (1, 2)
        cur = node
        sigma = _identity(len(node.conclusion))
        for k in range(len(children(node))):
            child2, sig = go(children(cur)[k])
            cur, sig_out = _rebuild(cur, k, child2, sig)
            sigma = tuple(sig_out[x - 1] for x in sigma)
        return cur, sigma

    return go(p)[0]


def equal_modulo_representation(p: Proof, q: Proof, gate_tol: float = 1e-9) -> bool:
    from .proofs import proofs_equal
    return proofs_equal(canonical_form(p), canonical_form(q), gate_tol)


def compose_perms(perms: list[Perm], n: int) -> Perm:
    """Overall root-position mapping across a trace (old position -> new)."""
    cur = list(range(1, n + 1))
    for sigma in perms:
        cur = [sigma[x - 1] for x in cur]
    return tuple(cur)


def trace_lines(trace: ReductionTrace) -> list[str]:
    lines = []
    weights = [s.weight_before for s in trace.steps] + [trace.final_weight]
    for idx, s in enumerate(trace.steps):
        lines.append(f"{idx} {s.redex.kind} {path_str(s.redex.path)} "
                     f"{weights[idx]} -> {weights[idx + 1]}")
    return lines
