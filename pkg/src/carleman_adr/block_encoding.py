"""Explicit block-encoding circuits for the one-step update operators.

Both circuits follow the sparse-oracle pattern H^m -> value rotation ->
column shift -> H^m on a (value, column, system) register stack.  A branch
with column pattern l rotates the value qubit by 2*arccos(v_l) and moves
|i> to |c(i, l)>, so the amplitude v_l lands at row c(i, l), column i of the
encoded block.  Encoding a target matrix T therefore requires
v_l = T[c(i, l), i]: the branch value is the entry of the *destination* row.
Post-selecting all ancillas on |0> leaves T |psi> / 2^m on the system
register.

Two operators are encoded:

* the circulant one-step linear update L = 1 + dt*A (diagonal lam0,
  superdiagonal lam1, subdiagonal lam2, periodic wrap), via two controlled
  cyclic shifts; the doubled-diagonal branch l=3 is zeroed with an Ry(pi);
* the triangular quadratic coupling Bhat = [[I, dt*B], [0, I]], which adds
  b*dt times the doubled-index (j,j) component of the quadratic block into
  site j, via a comparator flag and one controlled permutation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .adr_core import AdrParams, derived_numbers
from .qsim import (
    Controlled,
    CyclicShift,
    Hadamard,
    PauliX,
    Permutation,
    RegisterLayout,
    Ry,
    apply_circuit,
    postselect,
    zero_state,
)


# --- one-step linear update ---------------------------------------------------


@dataclass(frozen=True)
class CirculantStep:
    """Circulant one-step update 1 + dt*A with three stencil weights."""

    n_sites: int
    lam0: float
    lam1: float
    lam2: float

    def __post_init__(self):
        if self.n_sites < 2:
            raise ValueError("n_sites must be at least 2")

    @classmethod
    def from_params(cls, params: AdrParams) -> "CirculantStep":
        nums = derived_numbers(params)
        return cls(params.n_sites, nums.lambda0, nums.lambda1, nums.lambda2)

    @classmethod
    def from_gammas(cls, n_sites: int, gamma_diffusion: float, gamma_advection: float,
                    gamma_reaction: float) -> "CirculantStep":
        return cls(
            n_sites,
            1.0 - 2.0 * gamma_diffusion - gamma_reaction,
            gamma_diffusion - gamma_advection / 2.0,
            gamma_diffusion + gamma_advection / 2.0,
        )

    def matrix(self) -> np.ndarray:
        n = self.n_sites
        out = np.zeros((n, n))
        for i in range(n):
            out[i, i] += self.lam0
            out[i, (i + 1) % n] += self.lam1
            out[i, (i - 1) % n] += self.lam2
        return out


@dataclass(frozen=True)
class ApplicabilityCondition:
    name: str
    magnitude: float
    strict: bool      # magnitude < 1
    boundary: bool    # magnitude == 1 to within tolerance


@dataclass(frozen=True)
class ApplicabilityReport:
    conditions: tuple[ApplicabilityCondition, ...]

    @property
    def all_strict(self) -> bool:
        return all(c.strict for c in self.conditions)

    @property
    def encodable(self) -> bool:
        """Rotation angles exist: every magnitude at most 1 (boundaries allowed)."""
        return all(c.strict or c.boundary for c in self.conditions)


def check_applicability(step: CirculantStep, tol: float = 1e-12) -> ApplicabilityReport:
    """Evaluate the four |.| < 1 conditions; exact-1 cases flag as boundary.

    The row sum lam0+lam1+lam2 equals 1 - gamma_reaction, so the reaction
    condition |1 - gamma_r| < 1 is checked without needing gamma_r itself.
    """
    entries = [
        ("diagonal_weight", abs(step.lam0)),
        ("superdiagonal_weight", abs(step.lam1)),
        ("subdiagonal_weight", abs(step.lam2)),
        ("row_sum", abs(step.lam0 + step.lam1 + step.lam2)),
    ]
    conditions = tuple(
        ApplicabilityCondition(name, mag, mag < 1.0 - tol, abs(mag - 1.0) <= tol)
        for name, mag in entries
    )
    return ApplicabilityReport(conditions)


# --- assembled circuits ---------------------------------------------------------


@dataclass
class BlockEncoding:
    """An assembled encoding: register layout, gate list and the 2^m scale."""

    layout: RegisterLayout
    gates: list
    scale: int
    encoded_dim: int

    def ancilla_zero(self) -> dict[str, int]:
        fixed = {"value": 0, "column": 0}
        if self.layout.flag:
            fixed["flag"] = 0
        return fixed


def _rotation_angle(value: float) -> float:
    if abs(value) > 1.0 + 1e-12:
        raise ValueError(f"cannot encode amplitude {value}: magnitude exceeds 1")
    return 2.0 * float(np.arccos(np.clip(value, -1.0, 1.0)))


def build_be_circuit_L(step: CirculantStep) -> BlockEncoding:
    """Block-encode the circulant step with two column qubits.

    Branch l=1 shifts |i> -> |i+1> and therefore carries the subdiagonal
    weight lam2 (the destination-row entry); branch l=2 shifts down and
    carries lam1.  Branch l=3 would duplicate the diagonal, so its value
    rotation is Ry(pi), zeroing that amplitude.
    """
    n = step.n_sites
    n_qubits = int(np.log2(n))
    if 2**n_qubits != n:
        raise ValueError("circuit construction needs a power-of-two lattice")
    report = check_applicability(step)
    if not report.encodable:
        bad = [c.name for c in report.conditions if not (c.strict or c.boundary)]
        raise ValueError(f"stencil weights not encodable: {', '.join(bad)} above 1")

    layout = RegisterLayout(column=2, system=n_qubits)
    value = layout.register_qubits("value")[0]
    col_hi, col_lo = layout.register_qubits("column")
    gates = [Hadamard(col_hi), Hadamard(col_lo)]
    for pattern, branch_value in (
        ((0, 0), step.lam0),
        ((0, 1), step.lam2),
        ((1, 0), step.lam1),
        ((1, 1), 0.0),        # arccos(0) -> Ry(pi): duplicate diagonal zeroed
    ):
        controls = ((col_hi, pattern[0]), (col_lo, pattern[1]))
        gates.append(Controlled(Ry(value, _rotation_angle(branch_value)), controls))
    gates.append(Controlled(CyclicShift("system", +1), ((col_lo, 1),)))
    gates.append(Controlled(CyclicShift("system", -1), ((col_hi, 1),)))
    gates += [Hadamard(col_hi), Hadamard(col_lo)]
    return BlockEncoding(layout=layout, gates=gates, scale=4, encoded_dim=n)


def simulate_be(encoding: BlockEncoding, system_amplitudes: np.ndarray) -> tuple[np.ndarray, float]:
    """Run the circuit on |0...0>|psi> and post-select all ancillas on 0.

    Returns the unnormalized residual (times scale it equals the encoded
    operator applied to psi) and the post-selection probability.
    """
    psi = np.asarray(system_amplitudes, dtype=complex)
    state = zero_state(encoding.layout, psi)
    state = apply_circuit(state, encoding.gates)
    return postselect(state, encoding.ancilla_zero())


def uniform_amplitudes(n: int) -> np.ndarray:
    return np.full(n, 1.0 / np.sqrt(n), dtype=complex)


def localized_amplitudes(n: int, site: int) -> np.ndarray:
    out = np.zeros(n, dtype=complex)
    out[site] = 1.0
    return out


def p0_analytic_circulant(step: CirculantStep, amplitudes: np.ndarray) -> float:
    """Post-selection probability of the L encoding from the stencil expansion.

    (1/16) sum_i [ |c_i|^2 (l0^2+l1^2+l2^2)
                   + (c_i c*_{i+1} + c_i c*_{i-1})(l0 l1 + l0 l2)
                   + (c_i c*_{i+2} + c_i c*_{i-2}) l1 l2 ]
    with periodic indices; collisions at small N are handled by the rolls.
    """
    c = np.asarray(amplitudes, dtype=complex)
    if c.shape != (step.n_sites,):
        raise ValueError("amplitude count must match the lattice")
    l0, l1, l2 = step.lam0, step.lam1, step.lam2
    sq = np.sum(np.abs(c) ** 2) * (l0**2 + l1**2 + l2**2)
    near = np.sum(c * np.conj(np.roll(c, -1)) + c * np.conj(np.roll(c, 1))) * (l0 * l1 + l0 * l2)
    far = np.sum(c * np.conj(np.roll(c, -2)) + c * np.conj(np.roll(c, 2))) * (l1 * l2)
    return float((sq + near + far).real) / 16.0


# --- quadratic coupling ----------------------------------------------------------


@dataclass(frozen=True)
class QuadraticCoupling:
    """One-step triangular coupling [[I, dt*B], [0, I]] on (u1, u2) stacked.

    Acting on a vector holding N linear components followed by N^2 quadratic
    components (row-major), it adds b_dt times the doubled-index component
    (j, j) into site j.  b_dt is the product b*dt of the quadratic reaction
    coefficient and the time step.
    """

    n_sites: int
    b_dt: float

    def __post_init__(self):
        if self.n_sites < 2:
            raise ValueError("n_sites must be at least 2")
        if abs(self.b_dt) > 1.0:
            raise ValueError("|b*dt| must not exceed 1 for the value rotation")

    @property
    def dim(self) -> int:
        return self.n_sites + self.n_sites**2

    @property
    def n_qubits(self) -> int:
        return int(np.ceil(np.log2(self.dim)))

    @property
    def padded_dim(self) -> int:
        return 2**self.n_qubits

    def diagonal_slots(self) -> np.ndarray:
        """Global indices of the doubled quadratic components (j, j)."""
        j = np.arange(self.n_sites)
        return self.n_sites + j * (self.n_sites + 1)

    def matrix(self) -> np.ndarray:
        """Dense padded operator: identity everywhere plus the b_dt corner."""
        out = np.eye(self.padded_dim)
        for j, slot in enumerate(self.diagonal_slots()):
            out[j, slot] = self.b_dt
        return out

    def peak_probability(self) -> float:
        """Post-selection probability (1 + b_dt^2)/4 for a state on one doubled slot."""
        return (1.0 + self.b_dt**2) / 4.0


def _column_permutation(coupling: QuadraticCoupling) -> tuple[int, ...]:
    """Bijection sending each doubled slot to its destination site.

    Slots map to 0..N-1; every other index maps to the remaining positions
    in increasing order, which keeps the gate unitary while those branches
    carry zero value amplitude anyway.
    """
    size = coupling.padded_dim
    slots = coupling.diagonal_slots()
    table = np.full(size, -1, dtype=int)
    table[slots] = np.arange(coupling.n_sites)
    rest_src = np.setdiff1d(np.arange(size), slots)
    rest_dst = np.setdiff1d(np.arange(size), np.arange(coupling.n_sites))
    table[rest_src] = rest_dst
    return tuple(int(x) for x in table)


def _slot_flag_network(layout: RegisterLayout, slots: np.ndarray) -> list:
    """Multi-controlled-X network raising the flag on the doubled-slot patterns."""
    flag = layout.register_qubits("flag")[0]
    system = list(layout.register_qubits("system"))
    n_sys = len(system)
    gates = []
    for slot in slots:
        controls = tuple((system[t], (int(slot) >> (n_sys - 1 - t)) & 1) for t in range(n_sys))
        gates.append(Controlled(PauliX(flag), controls))
    return gates


def build_be_circuit_B(coupling: QuadraticCoupling) -> BlockEncoding:
    """Block-encode the quadratic coupling with one column qubit and a flag.

    The comparator marks doubled-slot sources; on the shifted branch those
    receive the b_dt rotation while everything else is zeroed with Ry(pi).
    The flag is uncomputed before the column permutation moves the index,
    because the comparator pattern is not preserved by that move.
    """
    layout = RegisterLayout(column=1, system=coupling.n_qubits, flag=True)
    value = layout.register_qubits("value")[0]
    column = layout.register_qubits("column")[0]
    flag = layout.register_qubits("flag")[0]
    comparator = _slot_flag_network(layout, coupling.diagonal_slots())

    gates = [Hadamard(column)]
    gates += comparator
    beta = _rotation_angle(coupling.b_dt)
    gates.append(Controlled(Ry(value, beta), ((column, 1), (flag, 1))))
    gates.append(Controlled(Ry(value, np.pi), ((column, 1), (flag, 0))))
    gates += comparator  # self-inverse network restores the flag to |0>
    gates.append(Controlled(Permutation("system", _column_permutation(coupling)), ((column, 1),)))
    gates.append(Hadamard(column))
    return BlockEncoding(layout=layout, gates=gates, scale=2, encoded_dim=coupling.padded_dim)


def embed_amplitudes(vec: np.ndarray, size: int) -> np.ndarray:
    """Zero-pad a vector into a 2^n frame (for feeding psi into the B circuit)."""
    vec = np.asarray(vec, dtype=complex)
    if vec.size > size:
        raise ValueError("vector longer than the target frame")
    out = np.zeros(size, dtype=complex)
    out[: vec.size] = vec
    return out
