"""Quantum-side engine: energies, parameter-shift gradients, gradient descent.

Shot accounting follows the per-iteration estimate ceil(2 p M / eps^2) for a
full parameter-shift gradient and ceil(M / eps^2) for a single energy
estimate. By default energies are ideal and shots are only *counted*;
sampled execution is opt-in through a NoiseModel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .ansatz import AnsatzSpec, prepare_state, prepare_states_batch
from .pauli import Hamiltonian
from .statevector import NoiseModel, expectation_batch, noisy_expectation
from .trajectory import Trajectory, TrajectoryRecord

DIVERGENCE_ENERGY_CAP = 1e6


class VqeDivergenceError(RuntimeError):
    """Energy magnitude exceeded the divergence guard."""


@dataclass(frozen=True)
class ShotModel:
    """Inputs of the shot-count estimate 2 p M / eps^2."""

    num_terms: int
    epsilon: float = 1e-3
    param_count: int = 1

    def __post_init__(self):
        if self.num_terms < 1 or self.param_count < 1 or self.epsilon <= 0:
            raise ValueError("invalid shot model parameters")


def shots_per_gradient(model: ShotModel) -> int:
    """ceil(2 p M / eps^2), computed exactly in rational arithmetic."""
    val = Fraction(2 * model.param_count * model.num_terms) / (
        Fraction(model.epsilon) ** 2
    )
    return int(math.ceil(val))


def shots_per_energy(model: ShotModel) -> int:
    """ceil(M / eps^2) for one Hamiltonian expectation estimate."""
    val = Fraction(model.num_terms) / (Fraction(model.epsilon) ** 2)
    return int(math.ceil(val))


def shot_cost(model: ShotModel, iterations: int) -> int:
    """Total shots for `iterations` full gradient iterations."""
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    return iterations * shots_per_gradient(model)


@dataclass(frozen=True)
class VqeConfig:
    eta: float = 0.05
    max_iters: int = 1000
    init_seed: int = 0
    noise: Optional[NoiseModel] = None
    varsigma: float = 1e-6
    accuracy_target: float = 1e-3
    shot_model: Optional[ShotModel] = None
    # Optional early stop once |E - target_energy| <= accuracy_target;
    # bookkeeping convenience, off unless a reference energy is supplied.
    target_energy: Optional[float] = None

    def __post_init__(self):
        if self.eta <= 0:
            raise ValueError(f"learning rate must be > 0, got {self.eta}")
        if self.varsigma <= 0:
            raise ValueError(f"varsigma must be > 0, got {self.varsigma}")
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")


def energy(
    h: Hamiltonian,
    spec: AnsatzSpec,
    theta: np.ndarray,
    noise: Optional[NoiseModel] = None,
    seed=0,
) -> float:
    """Energy <psi(theta)|H|psi(theta)>, optionally shot-sampled/depolarized."""
    state = prepare_state(spec, theta)
    if noise is None:
        return float(expectation_batch(state.amps.reshape(1, -1), h)[0])
    return noisy_expectation(state, h, noise, seed)


def parameter_shift_gradient(
    h: Hamiltonian,
    spec: AnsatzSpec,
    theta: np.ndarray,
    noise: Optional[NoiseModel] = None,
    seed_prefix: tuple = (0, 0),
) -> np.ndarray:
    """Exact gradient via the +-pi/2 parameter-shift rule (2p evaluations).

    Noiseless evaluations run as one batched simulation. Under shot noise each
    shifted energy draws a fresh deterministic seed
    (seed_prefix..., 2*i + sign_bit).
    """
    theta = np.asarray(theta, dtype=float)
    p = theta.size
    if noise is None:
        shifted = np.repeat(theta[None, :], 2 * p, axis=0)
        idx = np.arange(p)
        shifted[2 * idx, idx] += np.pi / 2
        shifted[2 * idx + 1, idx] -= np.pi / 2
        amps = prepare_states_batch(spec, shifted)
        energies = expectation_batch(amps, h)
        return (energies[2 * idx] - energies[2 * idx + 1]) / 2.0
    grad = np.empty(p)
    for i in range(p):
        plus = theta.copy()
        plus[i] += np.pi / 2
        minus = theta.copy()
        minus[i] -= np.pi / 2
        e_plus = energy(h, spec, plus, noise, seed_prefix + (2 * i,))
        e_minus = energy(h, spec, minus, noise, seed_prefix + (2 * i + 1,))
        grad[i] = (e_plus - e_minus) / 2.0
    return grad


def gd_step(theta: np.ndarray, grad: np.ndarray, eta: float) -> np.ndarray:
    """Plain gradient-descent update theta - eta * grad."""
    theta = np.asarray(theta, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if theta.shape != grad.shape:
        raise ValueError("theta and gradient lengths differ")
    if not np.all(np.isfinite(grad)):
        raise ValueError("non-finite gradient entries")
    return theta - eta * grad


def qntk_scalar(h: Hamiltonian, spec: AnsatzSpec, theta: np.ndarray) -> float:
    """Squared l2 norm of the parameter-shift gradient (scalar tangent kernel)."""
    g = parameter_shift_gradient(h, spec, theta)
    return float(g @ g)


def initial_parameters(p: int, seed: int) -> np.ndarray:
    """Uniform [0, 1]^p starting point from a counter-based generator."""
    from .statevector import make_rng

    return make_rng(seed).uniform(0.0, 1.0, size=p)


class VqeObjective:
    """Callable bundle (energy, gradient, shot charges) for the outer loops."""

    def __init__(
        self,
        h: Hamiltonian,
        spec: AnsatzSpec,
        noise: Optional[NoiseModel] = None,
        shot_model: Optional[ShotModel] = None,
        init_seed: int = 0,
    ):
        self.h = h
        self.spec = spec
        self.noise = noise
        self.shot_model = shot_model
        self.init_seed = init_seed
        self.p = spec.param_count

    def energy(self, theta: np.ndarray, eval_key: int = 0) -> float:
        seed = (self.init_seed, 1, eval_key)
        return energy(self.h, self.spec, theta, self.noise, seed)

    def gradient(self, theta: np.ndarray, step: int) -> np.ndarray:
        return parameter_shift_gradient(
            self.h, self.spec, theta, self.noise, (self.init_seed, 0, step)
        )

    @property
    def shots_per_gradient(self) -> int:
        return shots_per_gradient(self.shot_model) if self.shot_model else 0

    @property
    def shots_per_energy(self) -> int:
        return shots_per_energy(self.shot_model) if self.shot_model else 0


class FunctionObjective:
    """Analytic objective (e.g. a quadratic toy landscape) for the same loops."""

    def __init__(
        self,
        p: int,
        energy_fn: Callable[[np.ndarray], float],
        gradient_fn: Callable[[np.ndarray], np.ndarray],
    ):
        self.p = p
        self._energy = energy_fn
        self._gradient = gradient_fn
        self.shots_per_gradient = 0
        self.shots_per_energy = 0

    def energy(self, theta: np.ndarray, eval_key: int = 0) -> float:
        return float(self._energy(np.asarray(theta, dtype=float)))

    def gradient(self, theta: np.ndarray, step: int) -> np.ndarray:
        return np.asarray(self._gradient(np.asarray(theta, dtype=float)))


def _check_divergence(e: float) -> None:
    if not np.isfinite(e) or abs(e) > DIVERGENCE_ENERGY_CAP:
        raise VqeDivergenceError(f"energy diverged to {e}")


def run_vqe(h: Hamiltonian, spec: AnsatzSpec, config: VqeConfig) -> Trajectory:
    """Vanilla gradient-descent VQE; records every step in a Trajectory.

    Stops when |dtheta|_2 + |dE| <= varsigma, at max_iters, or (if a target
    energy is configured) once the accuracy target is reached.
    """
    objective = VqeObjective(
        h, spec, config.noise, config.shot_model, config.init_seed
    )
    theta = initial_parameters(spec.param_count, config.init_seed)
    traj = Trajectory()
    e = objective.energy(theta, eval_key=0)
    _check_divergence(e)
    traj.append(TrajectoryRecord(0, theta, e))
    for step in range(config.max_iters):
        if (
            config.target_energy is not None
            and abs(e - config.target_energy) <= config.accuracy_target
        ):
            break
        grad = objective.gradient(theta, step)
        theta_next = gd_step(theta, grad, config.eta)
        e_next = objective.energy(theta_next, eval_key=step + 1)
        _check_divergence(e_next)
        traj.append(TrajectoryRecord(step + 1, theta_next, e_next))
        traj.quantum_iterations += 1
        traj.shot_total += objective.shots_per_gradient
        delta = float(np.linalg.norm(theta_next - theta)) + abs(e_next - e)
        theta, e = theta_next, e_next
        if delta <= config.varsigma:
            break
    return traj
