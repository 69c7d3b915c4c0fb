"""Token machine interpreting proofs as unitary actions on a register.

A machine state is (occurrence, context, stack, register). The token walks
the proof: with a negative context it climbs from a conclusion occurrence
into the rule above, with a positive context it descends through the rule
below; axioms and cut formulas bounce it to the dual occurrence. Crossing a
quantum rule moves modal steps between context and stack; the register is
touched only when the token exits through the port opposite to the one it
entered, applying the rule's gate (forward) or its adjoint (backward) on
the qubit block between the context and stack qubits.

Register layout: qubit 1 (most significant) is the modality nearest the
hole atom; context qubits come first, innermost outward, then the stack,
top first. depth(context) + len(stack) is invariant along a run.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import MachineError, PreconditionError
from .formulas import (BOX_S, DIA_S, PAR_L, PAR_R, TENS_L, TENS_R, Context, Formula,
                       atoms, contexts_for, depth, dual_context, hole_atom, print_context)
from .matrices import (StateVector, UnitaryMatrix, adjoint, apply_at, max_qubits)
from .proofs import (AxiomRule, CutRule, ParRule, Path, Proof, QRule, TensorRule, children,
                     iter_nodes)
from .cutelim import _skip, _skip2, _unskip, _unskip2


@dataclass(frozen=True)
class GateEvent:
    gate: UnitaryMatrix
    offset: int
    forward: bool

    def applied(self) -> UnitaryMatrix:
        return self.gate if self.forward else adjoint(self.gate)


@dataclass(frozen=True)
class MachineState:
    path: Path
    pos: int
    ctx: Context
    positive: bool
    stack: tuple[str, ...]  # 'd' / 'b', rightmost is the top
    register: StateVector | None = None

    def stack_str(self) -> str:
        return "".join("<>" if s == "d" else "[]" for s in self.stack)


@dataclass(frozen=True)
class Next:
    state: MachineState
    event: GateEvent | None = None


@dataclass(frozen=True)
class Final:
    state: MachineState


@dataclass(frozen=True)
class Stuck:
    state: MachineState
    reason: str


class OccurrenceGraph:
    """Immutable routing data for a checked proof."""

    def __init__(self, proof: Proof):
        self.proof = proof
        self.nodes: dict[Path, Proof] = {path: node for path, node in iter_nodes(proof)}
        self.nesting: dict[Path, int] = {}
        for path in self.nodes:
            # modal symbols pushed by the enclosing boxes: one per arity unit
            self.nesting[path] = sum(
                node.arity for node in (self.nodes[path[:k]] for k in range(len(path)))
                if isinstance(node, QRule))

    def node(self, path: Path) -> Proof:
        return self.nodes[path]

    def formula(self, path: Path, pos: int) -> Formula:
        return self.nodes[path].conclusion[pos - 1]

    def expected_stack_length(self, path: Path) -> int:
        """Stack length a legal state at this occurrence must carry."""
        return self.nesting[path]

    def legal_state_bound(self) -> int:
        total = 0
        for path, node in self.nodes.items():
            for f in node.conclusion:
                total += len(atoms(f)) * (2 ** self.nesting[path])
        return total


def _pop_uniform(stack: tuple[str, ...], m: int) -> tuple[str | None, tuple[str, ...]]:
    if len(stack) < m:
        return None, stack
    top, rest = stack[-m:], stack[:-m]
    if all(s == top[0] for s in top):
        return top[0], rest
    return None, stack


def step_machine(graph: OccurrenceGraph, s: MachineState) -> Next | Final | Stuck:
    if s.positive and s.path == ():
        if not s.stack:
            return Final(s)
        return Stuck(s, "positive at the conclusion with a nonempty stack")

    if not s.positive:
        node = graph.node(s.path)
        if isinstance(node, AxiomRule):
            other = 2 if s.pos == 1 else 1
            return Next(replace(s, pos=other, ctx=dual_context(s.ctx), positive=True))
        if isinstance(node, CutRule):
            nl = len(node.left.conclusion) - 1
            if s.pos <= nl:
                return Next(replace(s, path=s.path + (0,), pos=_unskip(s.pos, node.i)))
            return Next(replace(s, path=s.path + (1,), pos=_unskip(s.pos - nl, node.j)))
        if isinstance(node, ParRule):
            if s.pos < len(node.conclusion):
                prem = _unskip2(s.pos, node.i, node.j)
                return Next(replace(s, path=s.path + (0,), pos=prem))
            if not s.ctx.steps:
                return Stuck(s, "empty context at a par principal formula")
            kind, _ = s.ctx.steps[0]
            inner = Context(s.ctx.steps[1:])
            if kind == PAR_L:
                return Next(replace(s, path=s.path + (0,), pos=node.i, ctx=inner))
            if kind == PAR_R:
                return Next(replace(s, path=s.path + (0,), pos=node.j, ctx=inner))
            return Stuck(s, "context does not enter the par formula")
        if isinstance(node, TensorRule):
            nl = len(node.left.conclusion) - 1
            if s.pos < len(node.conclusion):
                if s.pos <= nl:
                    return Next(replace(s, path=s.path + (0,), pos=_unskip(s.pos, node.i)))
                return Next(replace(s, path=s.path + (1,), pos=_unskip(s.pos - nl, node.j)))
            if not s.ctx.steps:
                return Stuck(s, "empty context at a tensor principal formula")
            kind, _ = s.ctx.steps[0]
            inner = Context(s.ctx.steps[1:])
            if kind == TENS_L:
                return Next(replace(s, path=s.path + (0,), pos=node.i, ctx=inner))
            if kind == TENS_R:
                return Next(replace(s, path=s.path + (1,), pos=node.j, ctx=inner))
            return Stuck(s, "context does not enter the tensor formula")
        # QRule: enter the box, moving modal steps from context to stack
        m = node.arity
        want = DIA_S if s.pos == 1 else BOX_S
        head = s.ctx.steps[:m]
        if len(head) < m or any(k != want for k, _ in head):
            return Stuck(s, "context does not carry the modal prefix of the formula")
        sym = "d" if s.pos == 1 else "b"
        prem = node.diamond_source if s.pos == 1 else node.box_source
        return Next(replace(s, path=s.path + (0,), pos=prem,
                            ctx=Context(s.ctx.steps[m:]), stack=s.stack + (sym,) * m))

    # positive: descend through the rule below
    parent_path, k = s.path[:-1], s.path[-1]
    q = graph.node(parent_path)
    if isinstance(q, CutRule):
        nl = len(q.left.conclusion) - 1
        if k == 0:
            if s.pos == q.i:
                return Next(replace(s, path=parent_path + (1,), pos=q.j,
                                    ctx=dual_context(s.ctx), positive=False))
            return Next(replace(s, path=parent_path, pos=_skip(s.pos, q.i)))
        if s.pos == q.j:
            return Next(replace(s, path=parent_path + (0,), pos=q.i,
                                ctx=dual_context(s.ctx), positive=False))
        return Next(replace(s, path=parent_path, pos=nl + _skip(s.pos, q.j)))
    if isinstance(q, ParRule):
        last = len(q.conclusion)
        prem = q.sub.conclusion
        if s.pos == q.i:
            ctx = Context(((PAR_L, prem[q.j - 1]),) + s.ctx.steps)
            return Next(replace(s, path=parent_path, pos=last, ctx=ctx))
        if s.pos == q.j:
            ctx = Context(((PAR_R, prem[q.i - 1]),) + s.ctx.steps)
            return Next(replace(s, path=parent_path, pos=last, ctx=ctx))
        return Next(replace(s, path=parent_path, pos=_skip2(s.pos, q.i, q.j)))
    if isinstance(q, TensorRule):
        last = len(q.conclusion)
        nl = len(q.left.conclusion) - 1
        if k == 0:
            if s.pos == q.i:
                ctx = Context(((TENS_L, q.right.conclusion[q.j - 1]),) + s.ctx.steps)
                return Next(replace(s, path=parent_path, pos=last, ctx=ctx))
            return Next(replace(s, path=parent_path, pos=_skip(s.pos, q.i)))
        if s.pos == q.j:
            ctx = Context(((TENS_R, q.left.conclusion[q.i - 1]),) + s.ctx.steps)
            return Next(replace(s, path=parent_path, pos=last, ctx=ctx))
        return Next(replace(s, path=parent_path, pos=nl + _skip(s.pos, q.j)))
    if isinstance(q, QRule):
        m = q.arity
        sym, rest = _pop_uniform(s.stack, m)
        if sym is None:
            return Stuck(s, "stack does not carry a uniform block for the box exit")
        offset = depth(s.ctx)
        event: GateEvent | None = None
        if s.pos == q.diamond_source:
            ctx = Context(((DIA_S, None),) * m + s.ctx.steps)
            if sym == "b":
                event = GateEvent(q.gate, offset, forward=False)
            nxt = replace(s, path=parent_path, pos=1, ctx=ctx, stack=rest)
        elif s.pos == q.box_source:
            ctx = Context(((BOX_S, None),) * m + s.ctx.steps)
            if sym == "d":
                event = GateEvent(q.gate, offset, forward=True)
            nxt = replace(s, path=parent_path, pos=2, ctx=ctx, stack=rest)
        else:
            return Stuck(s, "box exit from an unknown premise position")
        if event is not None and nxt.register is not None:
            nxt = replace(nxt, register=apply_at(event.applied(), nxt.register, event.offset))
        return Next(nxt, event)
    raise MachineError(f"cannot descend through {type(q).__name__}")


@dataclass(frozen=True)
class RunResult:
    final: MachineState
    events: tuple[GateEvent, ...]
    steps: int
    trace: tuple[str, ...] = ()


def initial_state(graph: OccurrenceGraph, entry_pos: int, ctx: Context,
                  register: StateVector | None = None) -> MachineState:
    concl = graph.proof.conclusion
    if not 1 <= entry_pos <= len(concl):
        raise PreconditionError(f"entry position {entry_pos} out of range")
    atom = hole_atom(ctx, concl[entry_pos - 1])
    if atom.positive:
        raise PreconditionError("entry context must be negative (hole at a co-atom)")
    n = depth(ctx)
    if n > max_qubits():
        raise PreconditionError(f"{n} qubits exceeds the configured cap")
    if register is not None:
        if register.n_qubits != n:
            raise PreconditionError(
                f"register has {register.n_qubits} qubits, the context needs {n}")
        if abs(register.norm() - 1.0) > 1e-9:
            raise PreconditionError("register is not normalized")
    return MachineState((), entry_pos, ctx, False, (), register)


def run(graph: OccurrenceGraph, start: MachineState,
        collect_trace: bool = False) -> RunResult:
    bound = graph.legal_state_bound() + 2
    cur = start
    events: list[GateEvent] = []
    trace: list[str] = []
    steps = 0
    while True:
        if len(cur.stack) != graph.nesting[cur.path]:
            raise MachineError("illegal stack length; unreachable from initial states")
        if collect_trace:
            trace.append(_trace_line(graph, cur))
        res = step_machine(graph, cur)
        if isinstance(res, Final):
            return RunResult(cur, tuple(events), steps, tuple(trace))
        if isinstance(res, Stuck):
            raise MachineError(f"machine stuck: {res.reason}")
        if res.event is not None:
            events.append(res.event)
            if collect_trace:
                ev = res.event
                arrow = "" if ev.forward else " (adjoint)"
                trace.append(f"  apply {ev.gate.name or 'gate'}{arrow} at offset {ev.offset}")
        cur = res.state
        steps += 1
        if steps > bound:
            raise MachineError("run exceeded the legal-state bound")


def _trace_line(graph: OccurrenceGraph, s: MachineState) -> str:
    from .proofs import path_str, print_formula
    f = graph.formula(s.path, s.pos)
    pol = "P" if s.positive else "N"
    return (f"{path_str(s.path)}#{s.pos} {print_formula(f)} | {print_context(s.ctx)} "
            f"| {s.stack_str() or 'e'} | {pol}")


@dataclass(frozen=True)
class SemanticsResult:
    entry_pos: int
    entry_ctx: Context
    exit_pos: int
    exit_ctx: Context
    unitary: UnitaryMatrix
    events: tuple[GateEvent, ...]
    steps: int


def _embed(ev: GateEvent, n: int) -> np.ndarray:
    g = ev.applied().data
    k = ev.gate.dim_qubits
    left = np.eye(2 ** ev.offset, dtype=complex)
    right = np.eye(2 ** (n - ev.offset - k), dtype=complex)
    return np.kron(np.kron(left, g), right)


def semantics_relative(proof: Proof, entry_pos: int, ctx: Context) -> SemanticsResult:
    """The unitary the proof denotes at the given entry, composed symbolically.

    Gate events are register-independent, so the run is executed once
    without a register and the events are multiplied up, latest on the left.
    """
    graph = OccurrenceGraph(proof)
    start = initial_state(graph, entry_pos, ctx)
    res = run(graph, start)
    n = depth(ctx)
    u = np.eye(2 ** n, dtype=complex)
    for ev in res.events:
        u = _embed(ev, n) @ u
    return SemanticsResult(entry_pos, ctx, res.final.pos, res.final.ctx,
                           UnitaryMatrix(u), res.events, res.steps)


def extract_gate_sequence(proof: Proof, entry_pos: int,
                          ctx: Context) -> list[tuple[UnitaryMatrix, int]]:
    """Ordered (gate, offset) pairs whose in-order application equals the semantics."""
    graph = OccurrenceGraph(proof)
    res = run(graph, initial_state(graph, entry_pos, ctx))
    return [(ev.applied(), ev.offset) for ev in res.events]


def negative_entries(proof: Proof) -> list[tuple[int, Context]]:
    """All (conclusion position, negative context) pairs usable as entries."""
    out = []
    for k, f in enumerate(proof.conclusion, start=1):
        for ctx, positive in contexts_for(f):
            if not positive:
                out.append((k, ctx))
    return out
