"""Exact n-qubit statevector simulation.

Amplitude indexing: qubit 0 is the most significant bit of the basis index,
so |q0 q1 ... q_{n-1}> maps to index sum_q q_bit * 2^(n-1-q).

All rotations use the half-angle convention exp(-i (angle/2) * Pauli), which
makes the +-pi/2 parameter-shift rule exact for every parameterized gate.

A batched variant of each kernel operates on a stack of statevectors with
per-row angles; the single-state API is a thin view over batch size 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .pauli import Hamiltonian, PauliString

MAX_QUBITS = 28


class SimulatorError(ValueError):
    """Invalid simulator input (bad qubit index, dimension mismatch, ...)."""


@dataclass(frozen=True)
class NoiseModel:
    """Global depolarizing factor plus optional finite shot sampling.

    `shots_per_term=None` means unlimited shots (exact per-term expectations).
    Depolarizing acts on expectation values: E -> (1-q) E + q * c_identity.
    """

    depolarizing_prob: float = 0.0
    shots_per_term: Optional[int] = None

    def __post_init__(self):
        if not 0.0 <= self.depolarizing_prob <= 1.0:
            raise SimulatorError(
                f"depolarizing probability {self.depolarizing_prob} outside [0, 1]"
            )
        if self.shots_per_term is not None and self.shots_per_term < 1:
            raise SimulatorError("shots_per_term must be >= 1 or None")


class StateVector:
    """Mutable 2^n-amplitude state. Single-owner; gates act in place."""

    __slots__ = ("n", "amps")

    def __init__(self, n: int, amps: np.ndarray):
        self.n = n
        self.amps = amps

    def copy(self) -> "StateVector":
        return StateVector(self.n, self.amps.copy())

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amps) ** 2)))


def init_zero_state(n: int) -> StateVector:
    """|0...0> on n qubits."""
    if not 1 <= n <= MAX_QUBITS:
        raise SimulatorError(f"qubit count {n} outside [1, {MAX_QUBITS}]")
    amps = np.zeros(2**n, dtype=complex)
    amps[0] = 1.0
    return StateVector(n, amps)


def init_zero_batch(n: int, batch: int) -> np.ndarray:
    """(batch, 2^n) array of |0...0> rows."""
    if not 1 <= n <= MAX_QUBITS:
        raise SimulatorError(f"qubit count {n} outside [1, {MAX_QUBITS}]")
    amps = np.zeros((batch, 2**n), dtype=complex)
    amps[:, 0] = 1.0
    return amps


def _paired_view(amps: np.ndarray, n: int, qubit: int) -> np.ndarray:
    """Reshape (..., 2^n) so the target qubit becomes its own axis of size 2."""
    lead = amps.shape[:-1]
    return amps.reshape(lead + (2**qubit, 2, 2 ** (n - qubit - 1)))


def apply_rotation_batch(
    amps: np.ndarray, n: int, axis: str, qubit: int, angles: np.ndarray
) -> None:
    """In-place exp(-i (angle/2) Pauli) rotation with per-row angles.

    `amps` has shape (batch, 2^n); `angles` has shape (batch,).
    """
    if not 0 <= qubit < n:
        raise SimulatorError(f"qubit {qubit} out of range for n={n}")
    half = np.asarray(angles, dtype=float) / 2.0
    c = np.cos(half)[:, None, None]
    s = np.sin(half)[:, None, None]
    view = _paired_view(amps, n, qubit)
    a = view[:, :, 0, :]
    b = view[:, :, 1, :]
    if axis == "Y":
        a_new = c * a - s * b
        b_new = s * a + c * b
    elif axis == "X":
        a_new = c * a - 1j * s * b
        b_new = -1j * s * a + c * b
    elif axis == "Z":
        phase = (c - 1j * s).astype(complex)
        a_new = phase * a
        b_new = np.conj(phase) * b
    else:
        raise SimulatorError(f"unknown rotation axis {axis!r}")
    view[:, :, 0, :] = a_new
    view[:, :, 1, :] = b_new


def apply_single_qubit_rotation(
    state: StateVector, axis: str, qubit: int, angle: float
) -> StateVector:
    """In-place single-qubit rotation exp(-i (angle/2) Pauli_axis)."""
    batch = state.amps.reshape(1, -1)
    apply_rotation_batch(batch, state.n, axis, qubit, np.array([angle]))
    return state


def apply_cz_batch(amps: np.ndarray, n: int, q1: int, q2: int) -> None:
    """In-place CZ on a (batch, 2^n) array."""
    if q1 == q2:
        raise SimulatorError("CZ needs two distinct qubits")
    if not (0 <= q1 < n and 0 <= q2 < n):
        raise SimulatorError(f"CZ qubits ({q1}, {q2}) out of range for n={n}")
    lo, hi = sorted((q1, q2))
    lead = amps.shape[:-1]
    view = amps.reshape(
        lead + (2**lo, 2, 2 ** (hi - lo - 1), 2, 2 ** (n - hi - 1))
    )
    view[..., 1, :, 1, :] *= -1.0


def apply_cz(state: StateVector, q1: int, q2: int) -> StateVector:
    batch = state.amps.reshape(1, -1)
    apply_cz_batch(batch, state.n, q1, q2)
    return state


def pauli_action_table(s: PauliString) -> tuple[np.ndarray, np.ndarray]:
    """(perm, phase) so that (P psi)[j] = phase[j] * psi[perm[j]].

    Works because every Pauli string is a signed bit-flip permutation.
    """
    n = s.n
    dim = 2**n
    idx = np.arange(dim)
    flip_mask = 0
    num_y = 0
    sign_mask = 0
    for q, c in enumerate(s.ops):
        bit = 1 << (n - 1 - q)
        if c in ("X", "Y"):
            flip_mask |= bit
        if c in ("Y", "Z"):
            sign_mask |= bit
        if c == "Y":
            num_y += 1
    perm = idx ^ flip_mask
    # phase(k) = i^{#Y} * (-1)^{popcount(k & sign_mask)} evaluated at k = perm[j]
    src_bits = perm & sign_mask
    parity = np.zeros(dim, dtype=np.int64)
    bits = src_bits
    while bits.any():
        parity ^= bits & 1
        bits = bits >> 1
    phase = (1j**num_y) * np.where(parity == 1, -1.0, 1.0)
    return perm, phase.astype(complex)


def apply_pauli_exponential(
    state: StateVector, p: PauliString, angle: float
) -> StateVector:
    """In-place exp(-i (angle/2) P) for a Pauli string P."""
    if p.n != state.n:
        raise SimulatorError(
            f"Pauli string acts on {p.n} qubits, state has {state.n}"
        )
    if p.is_identity:
        raise SimulatorError("all-identity generator only shifts global phase")
    perm, phase = pauli_action_table(p)
    apply_pauli_exponential_batch(
        state.amps.reshape(1, -1), perm, phase, np.array([angle])
    )
    return state


def apply_pauli_exponential_batch(
    amps: np.ndarray, perm: np.ndarray, phase: np.ndarray, angles: np.ndarray
) -> None:
    """In-place exp(-i (angle/2) P) on (batch, 2^n) given a precomputed table."""
    half = np.asarray(angles, dtype=float) / 2.0
    c = np.cos(half)[:, None]
    s = np.sin(half)[:, None]
    if np.all(s == 0.0):
        return
    p_amps = phase[None, :] * amps[:, perm]
    amps *= c
    amps -= 1j * s * p_amps


class _CompiledHamiltonian:
    """Per-term permutation/phase tables for fast expectation values."""

    __slots__ = ("coeffs", "perms", "phases")

    def __init__(self, h: Hamiltonian):
        tables = [pauli_action_table(t.string) for t in h.terms]
        self.coeffs = h.coeffs()
        self.perms = np.stack([p for p, _ in tables])
        self.phases = np.stack([ph for _, ph in tables])


_compiled_cache: dict[int, tuple[Hamiltonian, _CompiledHamiltonian]] = {}


def _compiled(h: Hamiltonian) -> _CompiledHamiltonian:
    hit = _compiled_cache.get(id(h))
    if hit is not None and hit[0] is h:
        return hit[1]
    compiled = _CompiledHamiltonian(h)
    if len(_compiled_cache) > 32:
        _compiled_cache.clear()
    _compiled_cache[id(h)] = (h, compiled)
    return compiled


def term_expectations_batch(amps: np.ndarray, h: Hamiltonian) -> np.ndarray:
    """Per-term <psi|P_j|psi> for each row; shape (batch, num_terms)."""
    if amps.shape[-1] != 2**h.n:
        raise SimulatorError(
            f"state dimension {amps.shape[-1]} does not match 2^{h.n}"
        )
    comp = _compiled(h)
    # (batch, M, dim): psi gathered per term, phased
    gathered = amps[:, comp.perms] * comp.phases[None, :, :]
    vals = np.einsum("bd,bmd->bm", np.conj(amps), gathered)
    max_imag = float(np.max(np.abs(vals.imag))) if vals.size else 0.0
    if max_imag > 1e-10:
        raise SimulatorError(
            f"non-Hermitian expectation (imag part {max_imag:.3e})"
        )
    return vals.real


def expectation_batch(amps: np.ndarray, h: Hamiltonian) -> np.ndarray:
    """<psi|H|psi> for each row of a (batch, 2^n) array."""
    return term_expectations_batch(amps, h) @ _compiled(h).coeffs


def expectation(state: StateVector, h: Hamiltonian) -> float:
    """Ideal expectation value sum_j c_j <psi|P_j|psi>."""
    return float(expectation_batch(state.amps.reshape(1, -1), h)[0])


def make_rng(seed) -> np.random.Generator:
    """Counter-based (Philox) generator; `seed` may be an int or a tuple key."""
    if isinstance(seed, tuple):
        entropy, *spawn = seed
        ss = np.random.SeedSequence(entropy=entropy, spawn_key=tuple(spawn))
    else:
        ss = np.random.SeedSequence(entropy=seed)
    return np.random.Generator(np.random.Philox(ss))


def noisy_expectation(
    state: StateVector, h: Hamiltonian, noise: NoiseModel, rng_seed
) -> float:
    """Shot-sampled, globally depolarized expectation value.

    Each term's +-1 outcomes are drawn from the exact single-term distribution;
    identity terms are deterministic. Deterministic given `rng_seed`.
    """
    per_term = term_expectations_batch(state.amps.reshape(1, -1), h)[0]
    coeffs = _compiled(h).coeffs
    if noise.shots_per_term is not None:
        rng = make_rng(rng_seed)
        probs = np.clip((1.0 + per_term) / 2.0, 0.0, 1.0)
        ups = rng.binomial(noise.shots_per_term, probs)
        per_term = 2.0 * ups / noise.shots_per_term - 1.0
    value = float(per_term @ coeffs)
    q = noise.depolarizing_prob
    if q > 0.0:
        value = (1.0 - q) * value + q * h.identity_coeff
    return value
