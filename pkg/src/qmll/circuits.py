"""Circuits, their proof encoding, extraction back out, and a direct simulator.

A circuit is an ordered gate list over m qubits; targets are 1-based and
strictly increasing (qubit 1 = most significant basis bit). `simulate` is an
independent evaluation path used as the oracle for the machine semantics: it
works by basis-index arithmetic and shares no code with the token machine or
`apply_at`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, PreconditionError, QmllError
from .formulas import Atom, Context, depth
from .matrices import (StateVector, UnitaryMatrix, approx_equal, f17, gate_by_name,
                       identity_gate, max_qubits)
from .proofs import AxiomRule, CutRule, Proof, QRule
from .qiam import extract_gate_sequence

ENCODE_ATOM = Atom("a")


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[tuple[UnitaryMatrix, tuple[int, ...]], ...]

    def __post_init__(self):
        if self.n_qubits < 0:
            raise PreconditionError("negative qubit count")
        for u, targets in self.gates:
            if len(targets) != u.dim_qubits:
                raise DimensionError(
                    f"gate on {u.dim_qubits} qubits given {len(targets)} targets")
            if any(not 1 <= t <= self.n_qubits for t in targets):
                raise PreconditionError(f"targets {targets} out of range")
            if any(a >= b for a, b in zip(targets, targets[1:])):
                raise PreconditionError(f"targets {targets} must be strictly increasing")


@dataclass(frozen=True)
class EmbeddedGate:
    unitary: UnitaryMatrix
    offset: int  # acts on qubits offset+1 .. offset+k


def _apply_on_targets(state: np.ndarray, u: np.ndarray, targets: tuple[int, ...],
                      m: int) -> np.ndarray:
    """Apply u on the given qubits by gathering amplitudes over basis indices."""
    k = len(targets)
    bitpos = [m - t for t in targets]  # LSB-based bit of each target qubit
    mask = 0
    for b in bitpos:
        mask |= 1 << b
    idx = np.arange(2 ** m)
    bases = idx[(idx & mask) == 0]
    offsets = []
    for pattern in range(2 ** k):
        off = 0
        for t_i in range(k):
            if (pattern >> (k - 1 - t_i)) & 1:
                off |= 1 << bitpos[t_i]
        offsets.append(off)
    gathered = np.stack([state[bases + off] for off in offsets])
    transformed = u @ gathered
    out = np.array(state, dtype=complex, copy=True)
    for row, off in enumerate(offsets):
        out[bases + off] = transformed[row]
    return out


def simulate(circuit: Circuit, input_state: StateVector) -> StateVector:
    """Run the circuit gate by gate on a state vector."""
    if input_state.n_qubits != circuit.n_qubits:
        raise DimensionError(
            f"state has {input_state.n_qubits} qubits, circuit needs {circuit.n_qubits}")
    state = np.array(input_state.amplitudes, dtype=complex, copy=True)
    for u, targets in circuit.gates:
        state = _apply_on_targets(state, u.data, targets, circuit.n_qubits)
    return StateVector(circuit.n_qubits, state)


def circuit_unitary(circuit: Circuit) -> UnitaryMatrix:
    """Full matrix of the circuit, column by column through `simulate`."""
    dim = 2 ** circuit.n_qubits
    out = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        v = np.zeros(dim, dtype=complex)
        v[col] = 1.0
        out[:, col] = simulate(circuit, StateVector(circuit.n_qubits, v)).amplitudes
    return UnitaryMatrix(out)


def _block_permutation(targets: tuple[int, ...], lo: int, w: int) -> np.ndarray:
    """Permutation on a w-qubit block moving the targets to the leading slots."""
    local = [t - lo + 1 for t in targets]
    order = local + [x for x in range(1, w + 1) if x not in local]
    dim = 2 ** w
    p = np.zeros((dim, dim), dtype=complex)
    for src in range(dim):
        dst = 0
        for r, q in enumerate(order):
            bit = (src >> (w - q)) & 1
            dst |= bit << (w - 1 - r)
        p[dst, src] = 1.0
    return p


def embed_gate(u: UnitaryMatrix, targets: tuple[int, ...], m: int) -> EmbeddedGate:
    """Express a gate with arbitrary targets as a contiguous-block gate.

    Contiguous targets pass through unchanged; otherwise the gate is
    conjugated by a qubit permutation of the minimal covering block.
    """
    Circuit(m, ((u, targets),))  # reuse target validation
    k = u.dim_qubits
    lo, hi = targets[0], targets[-1]
    if hi - lo + 1 == k:
        return EmbeddedGate(u, lo - 1)
    w = hi - lo + 1
    p = _block_permutation(targets, lo, w)
    padded = np.kron(u.data, np.eye(2 ** (w - k), dtype=complex))
    return EmbeddedGate(UnitaryMatrix(p.conj().T @ padded @ p), lo - 1)


# ---------------------------------------------------------------------------
# encoding circuits as proofs


def encode(circuit: Circuit) -> Proof:
    """Encode a circuit as a proof concluding |- <>^m ~a, []^m a.

    Gates stack into a single quantum-rule column while their offsets keep
    climbing; identity rules pad the gaps below a gate and the top of each
    column. A gate that returns to lower qubits closes the column, and
    columns are chained with cuts, earliest leftmost.
    """
    m = circuit.n_qubits
    if m > max_qubits():
        raise PreconditionError(f"{m} qubits exceeds the configured cap")
    embedded = [embed_gate(u, targets, m) for u, targets in circuit.gates]

    columns: list[list[tuple[UnitaryMatrix, int]]] = []
    col: list[tuple[UnitaryMatrix, int]] = []
    depth_now = 0
    started = False
    for eg in embedded:
        if started and eg.offset < depth_now:
            _pad_to(col, depth_now, m)
            columns.append(col)
            col, depth_now = [], 0
        started = True
        if eg.offset > depth_now:
            col.append((identity_gate(eg.offset - depth_now), eg.offset - depth_now))
            depth_now = eg.offset
        col.append((eg.unitary, eg.unitary.dim_qubits))
        depth_now += eg.unitary.dim_qubits
    _pad_to(col, depth_now, m)
    columns.append(col)

    def build_column(entries: list[tuple[UnitaryMatrix, int]]) -> Proof:
        p: Proof = AxiomRule(ENCODE_ATOM)
        for gate, arity in entries:
            p = QRule(arity, gate, p)
        return p

    proof = build_column(columns[0])
    for extra in columns[1:]:
        proof = CutRule(2, 1, proof, build_column(extra))
    return proof


def _pad_to(col: list[tuple[UnitaryMatrix, int]], depth_now: int, m: int) -> None:
    if depth_now < m:
        col.append((identity_gate(m - depth_now), m - depth_now))


def extract(proof: Proof, entry_pos: int, ctx: Context,
            prune_identity: bool = False) -> Circuit:
    """Read the circuit a proof denotes at the given entry.

    The gate sequence comes from a machine run; targets are the contiguous
    block each event acted on. Identity gates are kept unless pruning is
    requested.
    """
    seq = extract_gate_sequence(proof, entry_pos, ctx)
    m = depth(ctx)
    gates = []
    for u, offset in seq:
        if prune_identity and approx_equal(u.data, np.eye(2 ** u.dim_qubits), 1e-9):
            continue
        gates.append((u, tuple(range(offset + 1, offset + 1 + u.dim_qubits))))
    return Circuit(m, tuple(gates))


# ---------------------------------------------------------------------------
# JSON interchange


def circuit_from_json(text: str) -> Circuit:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise QmllError(f"bad circuit JSON: {e}") from e
    if not isinstance(obj, dict) or "qubits" not in obj:
        raise QmllError("circuit JSON must be an object with a 'qubits' field")
    gates = []
    for g in obj.get("gates", []):
        if "targets" not in g:
            raise QmllError("every gate needs a 'targets' list")
        targets = tuple(int(t) for t in g["targets"])
        if "gate" in g:
            u = gate_by_name(g["gate"])
        elif "matrix" in g:
            rows = [[complex(e[0], e[1]) for e in row] for row in g["matrix"]]
            u = UnitaryMatrix(np.array(rows, dtype=complex))
        else:
            raise QmllError("gate entries need either 'gate' or 'matrix'")
        gates.append((u, targets))
    return Circuit(int(obj["qubits"]), tuple(gates))


def circuit_to_json(circuit: Circuit) -> str:
    parts = []
    for u, targets in circuit.gates:
        tgt = "[" + ",".join(str(t) for t in targets) + "]"
        if u.name is not None:
            parts.append(f'{{"gate":"{u.name}","targets":{tgt}}}')
        else:
            rows = ",".join(
                "[" + ",".join(f"[{f17(z.real)},{f17(z.imag)}]" for z in row) + "]"
                for row in u.data)
            parts.append(f'{{"matrix":[{rows}],"targets":{tgt}}}')
    return f'{{"qubits":{circuit.n_qubits},"gates":[{",".join(parts)}]}}'
