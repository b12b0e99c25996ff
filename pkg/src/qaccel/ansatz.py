"""Parameterized circuit families: HEA, HVA, and generic Pauli-rotation lists.

Parameter ordering conventions (fixed so trajectories are portable):
  HEA:  layer-major, then qubit, then Ry before Rz -> p = 2 n L.
        Each layer ends with a linear CZ chain (0,1), (1,2), ..., (n-2, n-1).
  HVA:  layer-major, then generator order -> p = L * K.
  Pauli rotation: one angle per generator, applied in listed order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .pauli import Hamiltonian, HamiltonianError, PauliString
from .statevector import (
    StateVector,
    apply_cz_batch,
    apply_pauli_exponential_batch,
    apply_rotation_batch,
    init_zero_batch,
    pauli_action_table,
)


class AnsatzError(ValueError):
    """Invalid ansatz construction or parameter vector."""


@dataclass(frozen=True)
class HeaAnsatz:
    """Hardware-efficient ansatz: per-qubit Ry,Rz rotations + CZ chain per layer."""

    n: int
    layers: int

    def __post_init__(self):
        if self.n < 1 or self.layers < 1:
            raise AnsatzError(f"invalid HEA shape n={self.n}, L={self.layers}")

    @property
    def param_count(self) -> int:
        return 2 * self.n * self.layers


@dataclass(frozen=True)
class HvaAnsatz:
    """Hamiltonian variational ansatz: layered Pauli-generator exponentials."""

    layers: int
    generators: tuple[PauliString, ...]

    def __post_init__(self):
        _check_generators(self.generators)
        if self.layers < 1:
            raise AnsatzError(f"invalid layer count {self.layers}")

    @property
    def n(self) -> int:
        return self.generators[0].n

    @property
    def param_count(self) -> int:
        return self.layers * len(self.generators)


@dataclass(frozen=True)
class PauliRotationAnsatz:
    """One exp(-i theta_k/2 P_k) per generator, in listed order."""

    generators: tuple[PauliString, ...]

    def __post_init__(self):
        _check_generators(self.generators)

    @property
    def n(self) -> int:
        return self.generators[0].n

    @property
    def param_count(self) -> int:
        return len(self.generators)


AnsatzSpec = Union[HeaAnsatz, HvaAnsatz, PauliRotationAnsatz]


def _check_generators(generators: tuple[PauliString, ...]) -> None:
    if not generators:
        raise AnsatzError("generator list is empty")
    n = generators[0].n
    for g in generators:
        if g.n != n:
            raise AnsatzError(
                f"generator {g} width {g.n} inconsistent with {n}"
            )
        if g.is_identity:
            raise AnsatzError("all-identity generator is not allowed")


def hva_from_hamiltonian(h: Hamiltonian, layers: int) -> HvaAnsatz:
    """Default HVA: the Hamiltonian's Pauli strings grouped by term type.

    Groups (e.g. all ZZ bonds, then all X sites) keep the canonical in-group
    order; group order follows first appearance in the canonical term list.
    """
    group_order: list[str] = []
    groups: dict[str, list[PauliString]] = {}
    for t in h.terms:
        if t.string.is_identity:
            continue
        key = "".join(sorted(c for c in t.string.ops if c != "I"))
        if key not in groups:
            groups[key] = []
            group_order.append(key)
        groups[key].append(t.string)
    generators = tuple(s for key in group_order for s in groups[key])
    if not generators:
        raise AnsatzError("Hamiltonian has no non-identity terms for HVA")
    return HvaAnsatz(layers, generators)


def load_generators_file(text: str) -> PauliRotationAnsatz:
    """Parse one Pauli string per line ('#' comments allowed) into an ansatz."""
    generators = []
    width = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if width is None:
            width = len(line)
        elif len(line) != width:
            raise AnsatzError(
                f"line {lineno}: generator width {len(line)} inconsistent "
                f"with earlier width {width}"
            )
        try:
            generators.append(PauliString.from_text(line))
        except HamiltonianError as exc:
            raise AnsatzError(f"line {lineno}: {exc}") from None
    if not generators:
        raise AnsatzError("no generators in file")
    return PauliRotationAnsatz(tuple(generators))


def prepare_states_batch(spec: AnsatzSpec, thetas: np.ndarray) -> np.ndarray:
    """Apply the ansatz to |0...0> for a (batch, p) block of parameter vectors.

    Returns a (batch, 2^n) amplitude array. The batched kernels share the
    circuit structure across rows, which is what makes parameter-shift
    gradients cheap.
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    batch, p = thetas.shape
    if p != spec.param_count:
        raise AnsatzError(
            f"parameter vector length {p} != ansatz param count {spec.param_count}"
        )
    if not np.all(np.isfinite(thetas)):
        raise AnsatzError("non-finite parameter values")
    n = spec.n
    amps = init_zero_batch(n, batch)
    if isinstance(spec, HeaAnsatz):
        for layer in range(spec.layers):
            base = layer * 2 * n
            for q in range(n):
                apply_rotation_batch(amps, n, "Y", q, thetas[:, base + 2 * q])
                apply_rotation_batch(amps, n, "Z", q, thetas[:, base + 2 * q + 1])
            for q in range(n - 1):
                apply_cz_batch(amps, n, q, q + 1)
    elif isinstance(spec, HvaAnsatz):
        tables = [pauli_action_table(g) for g in spec.generators]
        k = len(spec.generators)
        for layer in range(spec.layers):
            for j, (perm, phase) in enumerate(tables):
                apply_pauli_exponential_batch(
                    amps, perm, phase, thetas[:, layer * k + j]
                )
    else:
        tables = [pauli_action_table(g) for g in spec.generators]
        for j, (perm, phase) in enumerate(tables):
            apply_pauli_exponential_batch(amps, perm, phase, thetas[:, j])
    return amps


def prepare_state(spec: AnsatzSpec, theta: np.ndarray) -> StateVector:
    """Apply the ansatz to |0...0> for a single parameter vector."""
    amps = prepare_states_batch(spec, np.asarray(theta, dtype=float).reshape(1, -1))
    return StateVector(spec.n, amps[0])
