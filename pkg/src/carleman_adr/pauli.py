"""Pauli-basis decomposition of sparse real matrices.

A matrix padded to 2^q x 2^q expands as M = sum_s alpha_s Sigma_s over the
4^q Pauli strings, alpha_s = Tr(Sigma_s^dag M) / 2^q.  Because every string
is a signed permutation, an entry (i, j) only feeds strings whose X/Y
pattern equals the bitmask i XOR j.  Entries are therefore grouped by that
mask and each group is resolved with one fast Walsh-Hadamard transform over
the I/Z sign patterns: O(#masks * q * 2^q) instead of O(4^q * 2^q).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

MAX_QUBITS = 10  # assembled-matrix cap; 4^10 candidate strings is the desk-scale limit
COEFF_CUTOFF_FACTOR = 1e-14  # retain |alpha| > factor * ||M||_F

_SINGLE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli_string_matrix(label: str) -> np.ndarray:
    """Dense matrix of a Pauli string; leftmost letter acts on the top qubit."""
    if not label or any(c not in _SINGLE for c in label):
        raise ValueError(f"invalid Pauli label {label!r}")
    out = _SINGLE[label[0]]
    for c in label[1:]:
        out = np.kron(out, _SINGLE[c])
    return out


@dataclass(frozen=True)
class PauliTerm:
    label: str
    coefficient: complex


@dataclass
class PauliExpansion:
    """Retained Pauli terms, sorted by |coefficient| descending (label breaks ties)."""

    n_qubits: int
    terms: list[PauliTerm]
    source_norm: float

    def coefficients(self) -> np.ndarray:
        return np.array([t.coefficient for t in self.terms], dtype=complex)

    def truncation_distance(self, m: int) -> float:
        """Normalized Frobenius distance d(m) kept after the m largest terms.

        Parseval gives ||M - sum_{i<=m}||_F^2 = 2^q * sum_{i>m} |alpha_i|^2.
        """
        if m < 0:
            raise ValueError("m must be non-negative")
        tail = self.coefficients()[m:]
        return float(np.sqrt(2**self.n_qubits * np.sum(np.abs(tail) ** 2)) / self.source_norm)

    def terms_for_epsilon(self, epsilon: float) -> int:
        """Smallest m with d(m) < epsilon, by bisection on the monotone d."""
        if not 0.0 < epsilon < 1.0:
            raise ValueError("epsilon must lie strictly between 0 and 1")
        lo, hi = 0, len(self.terms)  # d(hi) == 0 < epsilon always holds
        if self.truncation_distance(0) < epsilon:
            return 0
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.truncation_distance(mid) < epsilon:
                hi = mid
            else:
                lo = mid
        return hi


def padded_qubits(dim: int) -> int:
    """Qubit count of the smallest power-of-two frame holding dim."""
    if dim < 1:
        raise ValueError("dimension must be positive")
    return int(np.ceil(np.log2(dim))) if dim > 1 else 0


def pad_to_power_of_two(matrix) -> np.ndarray:
    """Embed a square matrix as the top-left block of a 2^q frame (zero fill)."""
    mat = matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError("matrix must be square")
    dim = mat.shape[0]
    full = 2 ** padded_qubits(dim)
    out = np.zeros((full, full), dtype=mat.dtype)
    out[:dim, :dim] = mat
    return out


@lru_cache(maxsize=None)
def _popcount_table(n_qubits: int) -> np.ndarray:
    return np.array([bin(w).count("1") for w in range(2**n_qubits)], dtype=np.int64)


def _fwht(v: np.ndarray) -> np.ndarray:
    """Walsh-Hadamard transform W[w] = sum_i v[i] (-1)^{popcount(i & w)}."""
    v = v.copy()
    size = v.size
    h = 1
    while h < size:
        v = v.reshape(-1, 2 * h)
        even = v[:, :h].copy()
        odd = v[:, h:].copy()
        v[:, :h] = even + odd
        v[:, h:] = even - odd
        v = v.reshape(-1)
        h *= 2
    return v


def _label_for(x_mask: int, sign_mask: int, n_qubits: int) -> str:
    letters = []
    for t in range(n_qubits):
        bit = n_qubits - 1 - t
        x = (x_mask >> bit) & 1
        s = (sign_mask >> bit) & 1
        letters.append("IZXY"[2 * x + s])
    return "".join(letters)


def decompose(matrix, coeff_cutoff_factor: float = COEFF_CUTOFF_FACTOR) -> PauliExpansion:
    """Mask-grouped Pauli decomposition of a (sparse or dense) square matrix.

    For entries sharing the X/Y mask h = i XOR j, the pattern vector
    v[i] = M[i, i XOR h] transforms as alpha(w) = i^{|Y|} FWHT(v)[w] / 2^q,
    w ranging over all I/Z (off-mask) and X/Y (on-mask) sign choices.
    """
    coo = sp.coo_matrix(matrix)
    if coo.shape[0] != coo.shape[1]:
        raise ValueError("matrix must be square")
    q = padded_qubits(coo.shape[0])
    if q > MAX_QUBITS:
        raise ValueError(f"padded size needs {q} qubits, above the cap of {MAX_QUBITS}")
    dim = 2**q
    coo.sum_duplicates()
    norm = float(np.sqrt(np.sum(np.abs(coo.data) ** 2)))
    if norm == 0.0:
        return PauliExpansion(q, [], 0.0)

    masks = coo.row ^ coo.col
    popcnt = _popcount_table(q)
    w_all = np.arange(dim)
    cutoff = coeff_cutoff_factor * norm
    terms: list[PauliTerm] = []
    for h in np.unique(masks):
        pick = masks == h
        v = np.zeros(dim, dtype=complex)
        v[coo.row[pick]] = coo.data[pick]
        transformed = _fwht(v)
        phases = 1j ** popcnt[w_all & h]
        coeffs = phases * transformed / dim
        for w in np.nonzero(np.abs(coeffs) > cutoff)[0]:
            terms.append(PauliTerm(_label_for(int(h), int(w), q), complex(coeffs[w])))
    terms.sort(key=lambda t: (-abs(t.coefficient), t.label))
    return PauliExpansion(q, terms, norm)


def reconstruct(expansion: PauliExpansion, top_m: int | None = None) -> np.ndarray:
    """Dense sum of the first top_m retained terms (all by default)."""
    dim = 2**expansion.n_qubits
    out = np.zeros((dim, dim), dtype=complex)
    subset = expansion.terms if top_m is None else expansion.terms[:top_m]
    for term in subset:
        out += term.coefficient * pauli_string_matrix(term.label)
    return out


def decompose_dense_reference(matrix) -> dict[str, complex]:
    """Brute-force trace-formula decomposition; only for cross-checking small q."""
    from itertools import product

    padded = pad_to_power_of_two(matrix)
    q = padded_qubits(padded.shape[0])
    if q > 4:
        raise ValueError("dense reference is capped at 4 qubits")
    out = {}
    for letters in product("IXYZ", repeat=q):
        label = "".join(letters)
        string = pauli_string_matrix(label)
        alpha = complex(np.trace(string.conj().T @ padded) / 2**q)
        if alpha != 0:
            out[label] = alpha
    return out
