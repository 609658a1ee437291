"""Exact statevector simulator for small register-structured circuits.

Registers live side by side in a fixed order (value, column, optional flag,
system) and qubit 0 is the most significant bit of the global basis index;
within a register the first qubit is likewise its most significant bit.
Basis index arithmetic therefore reads off register values directly.

Gates are plain dataclasses; application is exact linear algebra on the
2^total amplitude vector.  Cyclic shifts and explicit permutations act on a
whole register natively instead of being compiled to multi-controlled-X
cascades (the cascades are still expressible via Controlled(PauliX) and are
checked against the native shifts in the tests).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_TOTAL_QUBITS = 24


# --- layout -------------------------------------------------------------------


@dataclass(frozen=True)
class RegisterLayout:
    """Qubit counts per register; value is always one qubit, flag optional."""

    column: int
    system: int
    flag: bool = False

    def __post_init__(self):
        if self.column < 0 or self.system < 1:
            raise ValueError("column must be >= 0 and system >= 1")
        if self.total > MAX_TOTAL_QUBITS:
            raise ValueError(f"{self.total} qubits exceeds the cap of {MAX_TOTAL_QUBITS}")

    @property
    def total(self) -> int:
        return 1 + self.column + (1 if self.flag else 0) + self.system

    def register_names(self) -> list[str]:
        names = ["value", "column"]
        if self.flag:
            names.append("flag")
        names.append("system")
        return names

    def register_qubits(self, name: str) -> range:
        """Global qubit indices of a register, most significant first."""
        sizes = {"value": 1, "column": self.column,
                 "flag": 1 if self.flag else 0, "system": self.system}
        if name not in sizes or sizes[name] == 0:
            raise ValueError(f"no register named {name!r} in this layout")
        start = 0
        for reg in self.register_names():
            if reg == name:
                return range(start, start + sizes[reg])
            start += sizes[reg]
        raise AssertionError

    def register_size(self, name: str) -> int:
        return len(self.register_qubits(name))

    def bit_position(self, qubit: int) -> int:
        """Power-of-two position of a qubit inside the flat basis index."""
        if not 0 <= qubit < self.total:
            raise ValueError("qubit index out of range")
        return self.total - 1 - qubit

    def pack_index(self, **registers: int) -> int:
        """Flat basis index from per-register values (missing registers are 0)."""
        idx = 0
        for name, value in registers.items():
            qubits = self.register_qubits(name)
            size = len(qubits)
            if not 0 <= value < 2**size:
                raise ValueError(f"value {value} does not fit register {name!r}")
            low = self.bit_position(qubits[-1])
            idx |= value << low
        return idx


# --- gates --------------------------------------------------------------------


@dataclass(frozen=True)
class Hadamard:
    target: int


@dataclass(frozen=True)
class PauliX:
    target: int


@dataclass(frozen=True)
class Ry:
    """Rotation with |0> -> cos(angle/2)|0> + sin(angle/2)|1>."""

    target: int
    angle: float


@dataclass(frozen=True)
class Controlled:
    """Apply gate only where every (qubit, polarity) control matches."""

    gate: object
    controls: tuple[tuple[int, int], ...]

    def __post_init__(self):
        for _, pol in self.controls:
            if pol not in (0, 1):
                raise ValueError("control polarity must be 0 or 1")


@dataclass(frozen=True)
class CyclicShift:
    """|i> -> |i + direction*power mod 2^size> on one whole register."""

    register: str
    direction: int
    power: int = 1

    def __post_init__(self):
        if self.direction not in (-1, 1):
            raise ValueError("direction must be +1 or -1")
        if self.power < 0:
            raise ValueError("power must be non-negative")


@dataclass(frozen=True)
class Permutation:
    """|i> -> |index_map[i]> on one whole register; the map must be a bijection."""

    register: str
    index_map: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.index_map) != list(range(len(self.index_map))):
            raise ValueError("index_map must be a permutation of 0..size-1")


_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)
_X = np.array([[0, 1], [1, 0]], dtype=complex)


def _single_qubit_matrix(gate) -> np.ndarray:
    if isinstance(gate, Hadamard):
        return _H
    if isinstance(gate, PauliX):
        return _X
    if isinstance(gate, Ry):
        c, s = np.cos(gate.angle / 2.0), np.sin(gate.angle / 2.0)
        return np.array([[c, -s], [s, c]], dtype=complex)
    raise TypeError(f"not a single-qubit gate: {gate!r}")


# --- state --------------------------------------------------------------------


@dataclass
class StateVector:
    layout: RegisterLayout
    amps: np.ndarray

    def __post_init__(self):
        if self.amps.shape != (2**self.layout.total,):
            raise ValueError("amplitude vector length must be 2^total")

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))


def zero_state(layout: RegisterLayout, system: np.ndarray | None = None) -> StateVector:
    """All registers |0>, optionally loading amplitudes into the system register."""
    amps = np.zeros(2**layout.total, dtype=complex)
    if system is None:
        amps[0] = 1.0
        return StateVector(layout, amps)
    system = np.asarray(system, dtype=complex)
    size = 2**layout.register_size("system")
    if system.shape != (size,):
        raise ValueError("system amplitudes must have length 2^n")
    # system occupies the least significant bits, so the slice is contiguous
    amps[:size] = system
    return StateVector(layout, amps)


# --- application ----------------------------------------------------------------


def _control_mask(layout, idx, controls) -> np.ndarray:
    keep = np.ones(idx.size, dtype=bool)
    for qubit, polarity in controls:
        keep &= ((idx >> layout.bit_position(qubit)) & 1) == polarity
    return keep


def _register_permutation(layout, idx, register, table, keep):
    """Destination index map: permute one register's bits where keep holds."""
    qubits = layout.register_qubits(register)
    low = layout.bit_position(qubits[-1])
    size = len(qubits)
    reg_mask = (2**size - 1) << low
    reg_val = (idx >> low) & (2**size - 1)
    dest = np.where(keep, (idx & ~reg_mask) | (table[reg_val] << low), idx)
    return dest


def apply_gate(state: StateVector, gate) -> StateVector:
    """Exact action of one gate; always returns a fresh state."""
    layout = state.layout
    amps = state.amps
    total = layout.total
    idx = np.arange(2**total)

    inner, controls = gate, ()
    while isinstance(inner, Controlled):
        controls = controls + inner.controls
        inner = inner.gate

    if isinstance(inner, (Hadamard, PauliX, Ry)):
        u = _single_qubit_matrix(inner)
        if not controls:
            pre = 1 << inner.target
            post = 1 << (total - inner.target - 1)
            out = np.matmul(u, amps.reshape(pre, 2, post)).reshape(-1)
            return StateVector(layout, out)
        keep = _control_mask(layout, idx, controls)
        tmask = 1 << layout.bit_position(inner.target)
        i0 = idx[keep & ((idx & tmask) == 0)]
        i1 = i0 | tmask
        out = amps.copy()
        out[i0] = u[0, 0] * amps[i0] + u[0, 1] * amps[i1]
        out[i1] = u[1, 0] * amps[i0] + u[1, 1] * amps[i1]
        return StateVector(layout, out)

    if isinstance(inner, (CyclicShift, Permutation)):
        size = layout.register_size(inner.register)
        if any(q in layout.register_qubits(inner.register) for q, _ in controls):
            raise ValueError("controls may not sit on the permuted register")
        if isinstance(inner, CyclicShift):
            table = (np.arange(2**size) + inner.direction * inner.power) % (2**size)
        else:
            if len(inner.index_map) != 2**size:
                raise ValueError("index_map length must match the register size")
            table = np.asarray(inner.index_map)
        keep = _control_mask(layout, idx, controls) if controls else np.ones(idx.size, bool)
        dest = _register_permutation(layout, idx, inner.register, table, keep)
        out = np.empty_like(amps)
        out[dest] = amps
        return StateVector(layout, out)

    raise TypeError(f"unsupported gate: {gate!r}")


def apply_circuit(state: StateVector, gates) -> StateVector:
    for gate in gates:
        state = apply_gate(state, gate)
    return state


def gate_matrix(layout: RegisterLayout, gate) -> np.ndarray:
    """Dense matrix of a gate, built column-by-column from basis states."""
    dim = 2**layout.total
    if layout.total > 10:
        raise ValueError("dense gate matrices are capped at 10 qubits")
    out = np.empty((dim, dim), dtype=complex)
    for j in range(dim):
        amps = np.zeros(dim, dtype=complex)
        amps[j] = 1.0
        out[:, j] = apply_gate(StateVector(layout, amps), gate).amps
    return out


def circuit_matrix(layout: RegisterLayout, gates) -> np.ndarray:
    dim = 2**layout.total
    if layout.total > 10:
        raise ValueError("dense circuit matrices are capped at 10 qubits")
    out = np.empty((dim, dim), dtype=complex)
    for j in range(dim):
        amps = np.zeros(dim, dtype=complex)
        amps[j] = 1.0
        out[:, j] = apply_circuit(StateVector(layout, amps), gates).amps
    return out


def postselect(state: StateVector, fixed: dict[str, int]) -> tuple[np.ndarray, float]:
    """Unnormalized residual over the unfixed registers, plus its probability.

    fixed maps register names to the measured basis value; the residual keeps
    the remaining registers in layout order.
    """
    layout = state.layout
    shape = tuple(2**layout.register_size(name) for name in layout.register_names())
    t = state.amps.reshape(shape)
    indexer = []
    for name in layout.register_names():
        if name in fixed:
            value = fixed[name]
            if not 0 <= value < 2**layout.register_size(name):
                raise ValueError(f"fixed value for {name!r} out of range")
            indexer.append(value)
        else:
            indexer.append(slice(None))
    residual = np.array(t[tuple(indexer)]).reshape(-1)
    return residual, float(np.sum(np.abs(residual) ** 2))


def increment_cascade(layout: RegisterLayout, register: str, decrement: bool = False) -> list:
    """Multi-controlled-X ladder equal to CyclicShift(+/-1) on a register.

    Bit j flips when every less significant bit is 1 (increment) or 0
    (decrement); gates run from the most significant target down so each
    consults the original lower bits.
    """
    qubits = list(layout.register_qubits(register))
    polarity = 0 if decrement else 1
    gates = []
    for pos, target in enumerate(qubits):
        lower = qubits[pos + 1 :]
        if lower:
            gates.append(Controlled(PauliX(target), tuple((q, polarity) for q in lower)))
        else:
            gates.append(PauliX(target))
    return gates
