"""Classical trajectory extrapolation and the accelerated outer loop.

The loop alternates short bursts of quantum-side gradient descent with long
classical rollouts of a one-step predictor (the trained surrogate network, or
any drop-in model such as the linear baseline). After each rollout the most
promising parameter vector is re-evaluated on the quantum engine and used to
restart the descent. Quantum iterations and shots are charged only for engine
work: gradient steps, candidate evaluations, and (for predictors that flag it)
per-step energy estimates during prediction.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .ansatz import AnsatzSpec
from .pauli import Hamiltonian
from .pinn import MlpParams, PinnConfig, TrainingSet, forward, init_mlp, train
from .statevector import NoiseModel
from .trajectory import TIME_PER_STEP, Trajectory, TrajectoryRecord
from .vqe import (
    VqeConfig,
    VqeObjective,
    _check_divergence,
    gd_step,
    initial_parameters,
)


class PredictorError(ValueError):
    pass


@dataclass(frozen=True)
class RolloutConfig:
    max_steps: int = 2000
    delta_tol: float = 1e-4
    dt: float = TIME_PER_STEP

    def __post_init__(self):
        if self.max_steps < 1:
            raise PredictorError("max_steps must be >= 1")
        if self.delta_tol <= 0 or self.dt <= 0:
            raise PredictorError("delta_tol and dt must be > 0")


@dataclass(frozen=True)
class PalqoConfig:
    """Outer-loop shape: burst length, cycle cap, and the nested stage configs."""

    tau: int = 2
    tau_first: Optional[int] = None
    max_cycles: int = 20
    reset_each_cycle: bool = False
    vqe: VqeConfig = field(default_factory=VqeConfig)
    pinn: PinnConfig = field(default_factory=PinnConfig)
    rollout: RolloutConfig = field(default_factory=RolloutConfig)

    def __post_init__(self):
        if self.tau < 1:
            raise PredictorError("tau must be >= 1")
        if self.tau_first is not None and self.tau_first < 1:
            raise PredictorError("tau_first must be >= 1")
        if self.max_cycles < 0:
            raise PredictorError("max_cycles must be >= 0")


@dataclass(frozen=True)
class Candidate:
    theta: np.ndarray
    delta: float


@dataclass
class RolloutResult:
    candidates: list[Candidate]  # [min-delta theta, final theta] (may coincide)
    path: list[np.ndarray]  # every predicted theta, in order


def rollout_map(
    predict_fn: Callable[[float, np.ndarray], np.ndarray],
    t_start_scaled: float,
    theta_start: np.ndarray,
    config: RolloutConfig,
) -> RolloutResult:
    """Recurrently self-feed a one-step map theta_{k+1} = f(t_k, theta_k).

    Stops once the step size delta_k = ||theta_{k+1} - theta_k||_2 drops below
    delta_tol or after max_steps. A non-finite prediction aborts, keeping what
    was accumulated. Candidates are the theta at the smallest delta seen plus
    the final theta.
    """
    theta = np.asarray(theta_start, dtype=float).copy()
    t = float(t_start_scaled)
    best: Optional[Candidate] = None
    delta = math.inf
    path: list[np.ndarray] = []
    for _ in range(config.max_steps):
        theta_next = np.asarray(predict_fn(t, theta), dtype=float)
        if not np.all(np.isfinite(theta_next)):
            break
        delta = float(np.linalg.norm(theta_next - theta))
        path.append(theta_next.copy())
        if best is None or delta < best.delta:
            best = Candidate(theta_next.copy(), delta)
        theta = theta_next
        t += config.dt
        if delta < config.delta_tol:
            break
    if best is None:
        return RolloutResult([], [])
    return RolloutResult([best, Candidate(theta.copy(), delta)], path)


def rollout(
    w: MlpParams,
    t_start_scaled: float,
    theta_start: np.ndarray,
    config: RolloutConfig,
) -> list[Candidate]:
    """Rollout of the surrogate network's theta head (energy head masked)."""

    def predict(t: float, theta: np.ndarray) -> np.ndarray:
        return forward(w, np.concatenate([[t], theta]))[1:]

    return rollout_map(predict, t_start_scaled, theta_start, config).candidates


def select_restart(
    h: Hamiltonian,
    spec: AnsatzSpec,
    candidates: list[Candidate],
    noise: Optional[NoiseModel] = None,
    seed: int = 0,
) -> np.ndarray:
    """Energy-evaluate each candidate and return the argmin theta.

    Ties break toward the candidate with the smaller rollout delta, then
    toward earlier list position.
    """
    if not candidates:
        raise PredictorError("empty candidate list")
    objective = VqeObjective(h, spec, noise=noise, init_seed=seed)
    energies = [
        objective.energy(c.theta, eval_key=k) for k, c in enumerate(candidates)
    ]
    order = min(
        range(len(candidates)),
        key=lambda i: (energies[i], candidates[i].delta, i),
    )
    return candidates[order].theta


class PinnPredictor:
    """Surrogate-network predictor for the accelerated loop.

    Warm-starts the weights across cycles by default; `reset_each_cycle`
    re-initializes and retrains from scratch every cycle instead. Prediction
    steps are classical, so they carry no shot charge.
    """

    charges_predictions = False

    def __init__(self, config: PinnConfig, reset_each_cycle: bool = False):
        self.config = config
        self.reset_each_cycle = reset_each_cycle
        self.params: Optional[MlpParams] = None
        self.history: list[dict] = []

    def fit(self, ts: TrainingSet) -> None:
        if self.params is None or self.reset_each_cycle:
            self.params = init_mlp(ts.p, self.config)
            epochs = self.config.epochs
        else:
            epochs = (
                self.config.warm_epochs
                if self.config.warm_epochs is not None
                else self.config.epochs
            )
        self.params, self.history = train(self.params, ts, self.config, epochs=epochs)

    def predict(self, t_scaled: float, theta: np.ndarray) -> np.ndarray:
        return forward(self.params, np.concatenate([[t_scaled], theta]))[1:]


@dataclass
class AcceleratedResult:
    trajectory: Trajectory
    converged: bool
    cycles: int
    warning: Optional[str] = None


def run_accelerated(objective, config: PalqoConfig, predictor) -> AcceleratedResult:
    """Generic outer loop: burst -> fit predictor -> rollout -> restart.

    Trajectory record provenance drives the accounting and makes the metrics
    re-derivable from the CSV alone: each `quantum` record past step 0 is one
    gradient iteration, each `predicted` record one charged energy estimate
    (baselines that measure while extrapolating), each `restart` record two
    candidate energy evaluations (the burst endpoint itself is a free third
    candidate, its energy being already known).
    """
    vqe_cfg = config.vqe
    theta = initial_parameters(objective.p, vqe_cfg.init_seed)
    eval_keys = itertools.count()
    traj = Trajectory()
    e = objective.energy(theta, eval_key=next(eval_keys))
    _check_divergence(e)
    traj.append(TrajectoryRecord(0, theta, e, "quantum"))

    def at_target(value: float) -> bool:
        return (
            vqe_cfg.target_energy is not None
            and abs(value - vqe_cfg.target_energy) <= vqe_cfg.accuracy_target
        )

    def burst(n_steps: int) -> str:
        """Run up to n_steps engine GD steps; returns how the burst ended."""
        nonlocal theta, e
        for _ in range(n_steps):
            grad = objective.gradient(theta, traj.final.step)
            theta_next = gd_step(theta, grad, vqe_cfg.eta)
            e_next = objective.energy(theta_next, eval_key=next(eval_keys))
            _check_divergence(e_next)
            traj.append(
                TrajectoryRecord(traj.final.step + 1, theta_next, e_next, "quantum")
            )
            traj.quantum_iterations += 1
            traj.shot_total += objective.shots_per_gradient
            delta = float(np.linalg.norm(theta_next - theta)) + abs(e_next - e)
            theta, e = theta_next, e_next
            if at_target(e):
                return "target"
            if delta <= vqe_cfg.varsigma:
                return "converged"
        return "ran"

    status = burst(config.tau_first if config.tau_first is not None else config.tau)
    converged = status != "ran"
    cycles = 0
    for _ in range(config.max_cycles):
        if converged:
            break
        cycles += 1
        tau_used = (
            config.tau_first
            if cycles == 1 and config.tau_first is not None
            else config.tau
        )
        window_start = len(traj.records) - 1 - tau_used
        predictor.fit(TrainingSet.from_trajectory(traj, window_start, tau_used))
        end = traj.final
        result = rollout_map(predictor.predict, end.t_scaled, end.theta, config.rollout)
        if predictor.charges_predictions:
            for th in result.path:
                e_pred = objective.energy(th, eval_key=next(eval_keys))
                traj.append(
                    TrajectoryRecord(traj.final.step + 1, th, e_pred, "predicted")
                )
                traj.quantum_iterations += 1
                traj.shot_total += objective.shots_per_energy
        if result.candidates:
            energies = []
            for cand in result.candidates:
                energies.append(objective.energy(cand.theta, eval_key=next(eval_keys)))
                traj.quantum_iterations += 1
                traj.shot_total += objective.shots_per_energy
            # burst endpoint is a free safeguard candidate (energy known)
            pool = result.candidates + [Candidate(end.theta, math.inf)]
            pool_e = energies + [end.energy]
            pick = min(
                range(len(pool)), key=lambda i: (pool_e[i], pool[i].delta, i)
            )
            theta, e = pool[pick].theta.copy(), pool_e[pick]
            traj.append(
                TrajectoryRecord(traj.final.step + 1, theta, e, "restart")
            )
            if at_target(e):
                converged = True
                break
            # boundary convergence: only meaningful when the prediction (not
            # the safeguard endpoint) was chosen and barely moved
            if pick < len(result.candidates):
                boundary = float(np.linalg.norm(theta - end.theta)) + abs(
                    e - end.energy
                )
                if boundary <= vqe_cfg.varsigma:
                    converged = True
                    break
        status = burst(config.tau)
        converged = status != "ran"
    warning = None if converged else f"not converged after {cycles} cycles"
    return AcceleratedResult(traj, converged, cycles, warning)


def run_palqo(h: Hamiltonian, spec: AnsatzSpec, config: PalqoConfig) -> AcceleratedResult:
    """Accelerated VQE: quantum bursts + surrogate-network extrapolation."""
    objective = VqeObjective(
        h,
        spec,
        noise=config.vqe.noise,
        shot_model=config.vqe.shot_model,
        init_seed=config.vqe.init_seed,
    )
    pinn_cfg = replace(config.pinn, eta_vqe=config.vqe.eta)
    predictor = PinnPredictor(pinn_cfg, config.reset_each_cycle)
    return run_accelerated(objective, config, predictor)
