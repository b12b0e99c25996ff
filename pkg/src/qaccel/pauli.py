"""Pauli-string algebra, model Hamiltonians, and an exact ground-energy oracle.

A Hamiltonian is a weighted sum of Pauli strings, H = sum_j c_j P_j, with real
coefficients. Construction merges duplicate strings, drops exact zeros, and
sorts terms canonically so equal Hamiltonians compare (and diagonalize)
bit-identically regardless of input order.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Iterable

import numpy as np
import scipy.sparse as sparse
import scipy.sparse.linalg

PAULI_CHARS = "IXYZ"

# Dense cap: beyond this the eigensolve switches to a sparse Lanczos solve.
_DENSE_QUBIT_LIMIT = 10
EXACT_QUBIT_CAP = 14

_SINGLE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class HamiltonianError(ValueError):
    """Malformed Hamiltonian input (parse errors, bad dimensions, empties)."""


@dataclass(frozen=True)
class PauliString:
    """A tensor product of single-qubit Paulis, e.g. "XZIY" on 4 qubits.

    Qubit 0 is the leftmost character and the most significant bit of the
    basis-state index.
    """

    n: int
    ops: str

    def __post_init__(self):
        if self.n < 1:
            raise HamiltonianError(f"qubit count must be >= 1, got {self.n}")
        if len(self.ops) != self.n:
            raise HamiltonianError(
                f"ops length {len(self.ops)} does not match n={self.n}"
            )
        bad = set(self.ops) - set(PAULI_CHARS)
        if bad:
            raise HamiltonianError(f"invalid Pauli characters: {sorted(bad)}")

    @classmethod
    def from_text(cls, text: str) -> "PauliString":
        return cls(len(text), text)

    def __str__(self) -> str:
        return self.ops

    @property
    def is_identity(self) -> bool:
        return set(self.ops) == {"I"}


@dataclass(frozen=True)
class PauliTerm:
    """One weighted Pauli string, coeff * P."""

    coeff: float
    string: PauliString

    def __post_init__(self):
        if not np.isfinite(self.coeff):
            raise HamiltonianError(f"non-finite coefficient {self.coeff}")


@dataclass(frozen=True)
class Hamiltonian:
    """Merged, canonically ordered sum of Pauli terms on n qubits."""

    n: int
    terms: tuple[PauliTerm, ...]

    def __post_init__(self):
        if not self.terms:
            raise HamiltonianError("Hamiltonian has no terms")
        for t in self.terms:
            if t.string.n != self.n:
                raise HamiltonianError(
                    f"term {t.string} acts on {t.string.n} qubits, expected {self.n}"
                )
        strings = [t.string.ops for t in self.terms]
        if len(set(strings)) != len(strings):
            raise HamiltonianError("duplicate Pauli strings after construction")

    @classmethod
    def from_terms(cls, terms: Iterable[PauliTerm]) -> "Hamiltonian":
        """Merge duplicates, drop exact zeros, sort by Pauli string."""
        terms = list(terms)
        if not terms:
            raise HamiltonianError("empty term list")
        n = terms[0].string.n
        merged: dict[str, float] = {}
        for t in terms:
            if t.string.n != n:
                raise HamiltonianError("inconsistent qubit counts across terms")
            merged[t.string.ops] = merged.get(t.string.ops, 0.0) + t.coeff
        kept = [
            PauliTerm(c, PauliString(n, s))
            for s, c in sorted(merged.items())
            if c != 0.0
        ]
        if not kept:
            raise HamiltonianError(
                "all terms cancelled to zero (empty Hamiltonian)"
            )
        return cls(n, tuple(kept))

    @property
    def num_terms(self) -> int:
        return len(self.terms)

    @property
    def identity_coeff(self) -> float:
        """Coefficient of the all-identity term (0.0 if absent)."""
        for t in self.terms:
            if t.string.is_identity:
                return t.coeff
        return 0.0

    def coeffs(self) -> np.ndarray:
        return np.array([t.coeff for t in self.terms])


def parse_hamiltonian_file(text: str) -> Hamiltonian:
    """Parse a plain-text Hamiltonian: one `<coeff> <pauli-string>` per line.

    Lines starting with '#' and blank lines are skipped. Duplicate strings are
    summed; exact cancellations are dropped.
    """
    terms = []
    width = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise HamiltonianError(
                f"line {lineno}: expected '<coeff> <pauli-string>', got {line!r}"
            )
        try:
            coeff = float(parts[0])
        except ValueError:
            raise HamiltonianError(
                f"line {lineno}: malformed coefficient {parts[0]!r}"
            ) from None
        if width is None:
            width = len(parts[1])
        elif len(parts[1]) != width:
            raise HamiltonianError(
                f"line {lineno}: Pauli string width {len(parts[1])} "
                f"inconsistent with earlier width {width}"
            )
        terms.append(PauliTerm(coeff, PauliString.from_text(parts[1])))
    if not terms:
        raise HamiltonianError("no terms in Hamiltonian file")
    return Hamiltonian.from_terms(terms)


def _site_string(n: int, ops_at: dict[int, str]) -> PauliString:
    chars = ["I"] * n
    for q, c in ops_at.items():
        chars[q] = c
    return PauliString(n, "".join(chars))


def build_tfim(n: int, J: float, h: float) -> Hamiltonian:
    """Open-boundary transverse-field Ising chain: -J sum ZZ - h sum X."""
    if n < 2:
        raise HamiltonianError(f"TFIM needs n >= 2, got {n}")
    terms = [
        PauliTerm(-J, _site_string(n, {j: "Z", j + 1: "Z"})) for j in range(n - 1)
    ]
    terms += [PauliTerm(-h, _site_string(n, {j: "X"})) for j in range(n)]
    return Hamiltonian.from_terms(terms)


def build_heisenberg(n: int, Jx: float, Jy: float, Jz: float, h: float) -> Hamiltonian:
    """Open-boundary Heisenberg chain: -1/2 sum (Jx XX + Jy YY + Jz ZZ + h Z)."""
    if n < 2:
        raise HamiltonianError(f"Heisenberg chain needs n >= 2, got {n}")
    terms = []
    for j in range(n - 1):
        terms.append(PauliTerm(-Jx / 2, _site_string(n, {j: "X", j + 1: "X"})))
        terms.append(PauliTerm(-Jy / 2, _site_string(n, {j: "Y", j + 1: "Y"})))
        terms.append(PauliTerm(-Jz / 2, _site_string(n, {j: "Z", j + 1: "Z"})))
    for j in range(n):
        terms.append(PauliTerm(-h / 2, _site_string(n, {j: "Z"})))
    return Hamiltonian.from_terms(terms)


def build_xxz(n: int, J: float, Jp: float, delta: float) -> Hamiltonian:
    """Bond-alternating XXZ chain; odd bonds carry J, even bonds Jp.

    Bond j (1-indexed) contributes coeff * (XX + YY + delta * ZZ).
    """
    if n < 2:
        raise HamiltonianError(f"XXZ chain needs n >= 2, got {n}")
    terms = []
    for bond in range(1, n):
        coeff = J if bond % 2 == 1 else Jp
        j = bond - 1
        terms.append(PauliTerm(coeff, _site_string(n, {j: "X", j + 1: "X"})))
        terms.append(PauliTerm(coeff, _site_string(n, {j: "Y", j + 1: "Y"})))
        terms.append(PauliTerm(coeff * delta, _site_string(n, {j: "Z", j + 1: "Z"})))
    return Hamiltonian.from_terms(terms)


def _string_matrix_sparse(s: PauliString) -> sparse.csr_matrix:
    m = sparse.csr_matrix(_SINGLE[s.ops[0]])
    for c in s.ops[1:]:
        m = sparse.kron(m, sparse.csr_matrix(_SINGLE[c]), format="csr")
    return m


def hamiltonian_matrix(h: Hamiltonian) -> sparse.csr_matrix:
    """Sparse 2^n x 2^n matrix of the Hamiltonian."""
    dim = 2**h.n
    m = sparse.csr_matrix((dim, dim), dtype=complex)
    for t in h.terms:
        m = m + t.coeff * _string_matrix_sparse(t.string)
    return m


@functools.lru_cache(maxsize=64)
def exact_ground_energy(h: Hamiltonian) -> float:
    """Minimal eigenvalue of the Hamiltonian matrix; exact-diagonalization oracle.

    Dense eigensolve for small systems; Lanczos for larger ones. Capped at
    n = 14 qubits.
    """
    if h.n > EXACT_QUBIT_CAP:
        raise HamiltonianError(
            f"exact diagonalization capped at {EXACT_QUBIT_CAP} qubits (got {h.n})"
        )
    non_identity = [t for t in h.terms if not t.string.is_identity]
    if not non_identity:
        return h.identity_coeff
    m = hamiltonian_matrix(h)
    if h.n <= _DENSE_QUBIT_LIMIT:
        evals = np.linalg.eigvalsh(m.toarray())
        return float(evals[0])
    evals = scipy.sparse.linalg.eigsh(m, k=1, which="SA", return_eigenvectors=False)
    return float(evals[0])


def term_counts(h: Hamiltonian) -> dict[str, int]:
    """Term count grouped by the multiset of non-identity Pauli letters."""
    counts: dict[str, int] = {}
    for t in h.terms:
        key = "".join(sorted(c for c in t.string.ops if c != "I"))
        counts[key] = counts.get(key, 0) + 1
    return counts
