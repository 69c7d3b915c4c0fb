"""Dense complex linear algebra for gates and registers.

Conventions: gates act on 2^n dimensional spaces; basis index bit order is
most-significant-first, so qubit 1 is the first Kronecker factor. Unitarity
is checked to UNITARY_EPS at construction; end-to-end equalities in callers
use a looser 1e-8.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, PreconditionError, QmllError

UNITARY_EPS = 1e-9

_SQ2 = 1.0 / math.sqrt(2.0)


def max_qubits() -> int:
    """Register size cap, configurable via QMLL_MAX_QUBITS."""
    try:
        return int(os.environ.get("QMLL_MAX_QUBITS", "16"))
    except ValueError:
        return 16


def mat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def approx_equal(a: np.ndarray, b: np.ndarray, tol: float) -> bool:
    """True iff max entry-wise modulus difference is within tol."""
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")
    return bool(np.max(np.abs(a - b)) <= tol) if a.size else True


@dataclass(frozen=True, eq=False)
class UnitaryMatrix:
    """A 2^n by 2^n matrix certified unitary at construction."""

    data: np.ndarray
    dim_qubits: int = field(init=False)
    name: str | None = None

    def __post_init__(self):
        m = np.asarray(self.data, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"gate must be square, got {m.shape}")
        n = m.shape[0].bit_length() - 1
        if 2**n != m.shape[0] or m.shape[0] < 1:
            raise DimensionError(f"gate dimension {m.shape[0]} is not a power of two")
        err = np.linalg.norm(m.conj().T @ m - np.eye(m.shape[0]))
        if err > UNITARY_EPS:
            raise DimensionError(f"matrix is not unitary (deviation {err:.3e})")
        m.setflags(write=False)
        object.__setattr__(self, "data", m)
        object.__setattr__(self, "dim_qubits", n)


def matmul(a: UnitaryMatrix, b: UnitaryMatrix) -> UnitaryMatrix:
    return UnitaryMatrix(mat_mul(a.data, b.data))


def tensor(a: UnitaryMatrix, b: UnitaryMatrix) -> UnitaryMatrix:
    """Kronecker product; the first factor takes the lower-numbered qubits."""
    return UnitaryMatrix(np.kron(a.data, b.data))


def adjoint(u: UnitaryMatrix) -> UnitaryMatrix:
    keep = u.name is not None and (u.name in _HERMITIAN or u.name.startswith("I"))
    return UnitaryMatrix(u.data.conj().T, name=u.name if keep else None)


@dataclass(frozen=True, eq=False)
class StateVector:
    """Amplitudes over 2^n basis states, most-significant bit = qubit 1."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.n_qubits > max_qubits():
            raise PreconditionError(
                f"{self.n_qubits} qubits exceeds the configured cap of {max_qubits()}")
        v = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if v.shape[0] != 2**self.n_qubits:
            raise DimensionError(
                f"expected {2**self.n_qubits} amplitudes, got {v.shape[0]}")
        v.setflags(write=False)
        object.__setattr__(self, "amplitudes", v)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def zero_state(n: int) -> StateVector:
    v = np.zeros(2**n, dtype=complex)
    v[0] = 1.0
    return StateVector(n, v)


def basis_state(bits: str) -> StateVector:
    """Build |bits> from a 0/1 string, leftmost bit = qubit 1."""
    if not bits or any(c not in "01" for c in bits):
        raise PreconditionError(f"bad basis label {bits!r}")
    v = np.zeros(2**len(bits), dtype=complex)
    v[int(bits, 2)] = 1.0
    return StateVector(len(bits), v)


def _apply_at_array(u: np.ndarray, k: int, state: np.ndarray, n: int, offset: int) -> np.ndarray:
    """Apply a k-qubit gate at qubit positions offset+1..offset+k of n."""
    t = state.reshape((2,) * n)
    axes = list(range(offset, offset + k))
    ut = u.reshape((2,) * (2 * k))
    moved = np.tensordot(ut, t, axes=(list(range(k, 2 * k)), axes))
    # tensordot puts the gate's output axes first; restore original order
    moved = np.moveaxis(moved, list(range(k)), axes)
    return np.ascontiguousarray(moved).reshape(-1)


def apply_at(u: UnitaryMatrix, register: StateVector, offset: int) -> StateVector:
    """Embed u as I_offset (x) u (x) I_rest and apply, without materializing it."""
    k, n = u.dim_qubits, register.n_qubits
    if offset < 0 or offset + k > n:
        raise PreconditionError(
            f"gate on {k} qubits at offset {offset} does not fit in {n} qubits")
    return StateVector(n, _apply_at_array(u.data, k, register.amplitudes, n, offset))


# ---------------------------------------------------------------------------
# named gate library

_GATES: dict[str, np.ndarray] = {
    "H": np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "S": np.array([[1, 0], [0, 1j]], dtype=complex),
    "T": np.array([[1, 0], [0, np.exp(1j * math.pi / 4)]], dtype=complex),
    "CNOT": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
    "SWAP": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex),
}
_HERMITIAN = {"H", "X", "Y", "Z", "CNOT", "SWAP"}  # I{n} handled separately


def identity_gate(n: int) -> UnitaryMatrix:
    return UnitaryMatrix(np.eye(2**n, dtype=complex), name=f"I{n}")


def gate_by_name(name: str) -> UnitaryMatrix:
    if name.startswith("I") and name[1:].isdigit():
        return identity_gate(int(name[1:]))
    if name in _GATES:
        return UnitaryMatrix(_GATES[name], name=name)
    raise QmllError(f"unknown gate name {name!r}")


def gate_names() -> list[str]:
    return sorted(_GATES) + ["I{n}"]


def f17(x: float) -> str:
    """Render a double with 17 significant digits (lossless round trip)."""
    return format(float(x), ".17g")
