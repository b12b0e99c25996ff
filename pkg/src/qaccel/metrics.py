"""Accuracy and speedup metrics, re-derivable from trajectory CSVs.

Quantum-device cost is reconstructed from record provenance alone: step 0 is
free, each later `quantum` record is one gradient iteration, each `predicted`
record one charged energy estimate, each `restart` record two candidate
energy evaluations. This makes every emitted metric recomputable from the
persisted trajectory without extra state.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

from .trajectory import Trajectory
from .vqe import ShotModel, shots_per_energy, shots_per_gradient

_ITER_CHARGE = {"quantum": 1, "predicted": 1, "restart": 2}

ACCURACY_TARGET_DEFAULT = 1e-3


class MetricsError(ValueError):
    pass


def compute_delta_e(e_hat: float, e_target: float) -> float:
    """Absolute gap |e_hat - e_target|."""
    if not (math.isfinite(e_hat) and math.isfinite(e_target)):
        raise MetricsError("energies must be finite")
    return abs(e_hat - e_target)


def compute_speedup(baseline_iters: int, method_iters: int) -> float:
    """Ratio of baseline to method iterations at equal accuracy."""
    if baseline_iters < 1 or method_iters < 1:
        raise MetricsError("iteration counts must be >= 1")
    return baseline_iters / method_iters


def record_charges(traj: Trajectory) -> list[int]:
    """Cumulative quantum-iteration count after each record."""
    total = 0
    out = []
    for i, r in enumerate(traj.records):
        if i > 0:
            total += _ITER_CHARGE[r.source]
        out.append(total)
    return out


def iterations_to_accuracy(
    traj: Trajectory, e_ref: float, accuracy: float = ACCURACY_TARGET_DEFAULT
) -> Optional[int]:
    """Quantum iterations spent when |E - e_ref| first drops to <= accuracy.

    None if the trajectory never reaches the accuracy band. The first record
    at or below the band counts conservatively — no sub-iteration
    interpolation.
    """
    charges = record_charges(traj)
    for r, c in zip(traj.records, charges):
        if compute_delta_e(r.energy, e_ref) <= accuracy:
            return c
    return None


def total_iterations(traj: Trajectory) -> int:
    return record_charges(traj)[-1] if traj.records else 0


def total_shots(traj: Trajectory, model: ShotModel) -> int:
    """Shot total reconstructed from record provenance."""
    spg, spe = shots_per_gradient(model), shots_per_energy(model)
    per_source = {"quantum": spg, "predicted": spe, "restart": 2 * spe}
    return sum(per_source[r.source] for r in traj.records[1:])


@dataclass
class RunMetrics:
    delta_e: float
    quantum_iterations: int
    shot_total: int
    converged: bool
    iterations_to_target: Optional[int] = None
    baseline_iterations_to_target: Optional[int] = None
    speedup: Optional[float] = None
    wall_time: Optional[float] = None

    def to_json_dict(self) -> dict:
        """JSON payload; wall_time is excluded so reruns are byte-identical."""
        return {
            "delta_e": self.delta_e,
            "quantum_iterations": self.quantum_iterations,
            "shot_total": self.shot_total,
            "converged": self.converged,
            "iterations_to_target": self.iterations_to_target,
            "baseline_iterations_to_target": self.baseline_iterations_to_target,
            "speedup": self.speedup,
        }


def metrics_from_trajectory(
    traj: Trajectory,
    e_ref: float,
    accuracy: float = ACCURACY_TARGET_DEFAULT,
    converged: bool = True,
    baseline: Optional[Trajectory] = None,
) -> RunMetrics:
    """Derive the full metric set from trajectories plus a reference energy."""
    iters = iterations_to_accuracy(traj, e_ref, accuracy)
    base_iters = (
        iterations_to_accuracy(baseline, e_ref, accuracy)
        if baseline is not None
        else None
    )
    speedup = None
    if iters is not None and iters >= 1 and base_iters is not None and base_iters >= 1:
        speedup = compute_speedup(base_iters, iters)
    return RunMetrics(
        delta_e=compute_delta_e(traj.final.energy, e_ref),
        quantum_iterations=traj.quantum_iterations,
        shot_total=traj.shot_total,
        converged=converged,
        iterations_to_target=iters,
        baseline_iterations_to_target=base_iters,
        speedup=speedup,
    )


def metrics_to_json(per_seed: dict[int, RunMetrics], aggregate: dict) -> str:
    payload = {
        "seeds": {str(k): m.to_json_dict() for k, m in sorted(per_seed.items())},
        "aggregate": aggregate,
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
