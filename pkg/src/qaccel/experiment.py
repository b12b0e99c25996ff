"""Experiment execution: per-seed runs, persisted artifacts, aggregation.

For every seed the selected method is run and three artifacts are written:
the trajectory CSV, a plot-data CSV (cumulative quantum iterations vs the
energy gap), and, for accelerated methods, the plain gradient-descent
baseline trajectory used for the speedup ratio. A single metrics.json
aggregates per-seed metrics and the median/min/max speedup. Everything is
deterministic per (config, seed): reruns are byte-identical.
"""

from __future__ import annotations

import os
import statistics
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from .config import ConfigError, ExperimentConfig
from .dmd import run_dmd
from .metrics import (
    RunMetrics,
    compute_delta_e,
    metrics_from_trajectory,
    metrics_to_json,
    record_charges,
)
from .pauli import EXACT_QUBIT_CAP, exact_ground_energy
from .predictor import PalqoConfig, run_palqo
from .trajectory import Trajectory, trajectory_to_csv
from .vqe import ShotModel, VqeConfig, run_vqe

OUTPUT_ROOT_ENV = "QACCEL_OUTPUT_ROOT"


@dataclass
class ExperimentResult:
    output_dir: Path
    reference_energy: float
    per_seed: dict[int, RunMetrics]
    aggregate: dict
    all_converged: bool


def resolve_output_dir(output_dir: str, output_root: Optional[str] = None) -> Path:
    """Relative output dirs nest under the env-provided root, if any."""
    path = Path(output_dir)
    root = output_root if output_root is not None else os.environ.get(OUTPUT_ROOT_ENV)
    if root and not path.is_absolute():
        path = Path(root) / path
    return path


def reference_energy_for(config: ExperimentConfig) -> float:
    if config.reference_energy is not None:
        return config.reference_energy
    if config.hamiltonian.n > EXACT_QUBIT_CAP:
        raise ConfigError(
            f"no exact oracle beyond {EXACT_QUBIT_CAP} qubits; "
            "set reference_energy explicitly"
        )
    return exact_ground_energy(config.hamiltonian)


def _seed_vqe_config(config: ExperimentConfig, seed: int, e_ref: float) -> VqeConfig:
    num_terms = sum(
        1 for t in config.hamiltonian.terms if not t.string.is_identity
    )
    shot_model = ShotModel(
        num_terms=max(num_terms, 1),
        epsilon=config.shot_epsilon,
        param_count=config.ansatz.param_count,
    )
    return replace(
        config.vqe,
        init_seed=seed,
        noise=config.noise,
        shot_model=shot_model,
        target_energy=e_ref if config.early_stop else None,
    )


def _plot_csv(traj: Trajectory, e_ref: float) -> str:
    lines = ["iterations,delta_e"]
    for record, charge in zip(traj.records, record_charges(traj)):
        lines.append(f"{charge},{compute_delta_e(record.energy, e_ref)!r}")
    return "\n".join(lines) + "\n"


def run_single_seed(
    config: ExperimentConfig, seed: int, e_ref: float
) -> tuple[Trajectory, Optional[Trajectory], bool]:
    """One seed's (method trajectory, baseline trajectory or None, converged)."""
    vqe_cfg = _seed_vqe_config(config, seed, e_ref)
    if config.method == "vanilla":
        traj = run_vqe(config.hamiltonian, config.ansatz, vqe_cfg)
        converged = (
            compute_delta_e(traj.final.energy, e_ref) <= vqe_cfg.accuracy_target
        )
        return traj, None, converged
    palqo_cfg = PalqoConfig(
        tau=config.palqo.tau,
        tau_first=config.palqo.tau_first,
        max_cycles=config.palqo.max_cycles,
        reset_each_cycle=config.palqo.reset_each_cycle,
        vqe=vqe_cfg,
        pinn=config.pinn,
        rollout=config.rollout,
    )
    runner = run_palqo if config.method == "palqo" else run_dmd
    result = runner(config.hamiltonian, config.ansatz, palqo_cfg)
    baseline = run_vqe(config.hamiltonian, config.ansatz, vqe_cfg)
    converged = (
        compute_delta_e(result.trajectory.final.energy, e_ref)
        <= vqe_cfg.accuracy_target
    )
    return result.trajectory, baseline, converged


def run_experiment(
    config: ExperimentConfig, output_root: Optional[str] = None
) -> ExperimentResult:
    e_ref = reference_energy_for(config)
    out = resolve_output_dir(config.output_dir, output_root)
    out.mkdir(parents=True, exist_ok=True)
    per_seed: dict[int, RunMetrics] = {}
    accuracy = config.vqe.accuracy_target
    with_source = config.method != "vanilla"
    for seed in config.seeds:
        traj, baseline, converged = run_single_seed(config, seed, e_ref)
        (out / f"trajectory_seed{seed}.csv").write_text(
            trajectory_to_csv(traj, with_source=with_source)
        )
        if baseline is not None:
            (out / f"baseline_seed{seed}.csv").write_text(
                trajectory_to_csv(baseline)
            )
        (out / f"plot_seed{seed}.csv").write_text(_plot_csv(traj, e_ref))
        per_seed[seed] = metrics_from_trajectory(
            traj, e_ref, accuracy, converged=converged, baseline=baseline
        )
    speedups = [m.speedup for m in per_seed.values() if m.speedup is not None]
    aggregate = {
        "method": config.method,
        "reference_energy": e_ref,
        "accuracy_target": accuracy,
        "num_seeds": len(config.seeds),
        "all_converged": all(m.converged for m in per_seed.values()),
        "speedup_median": statistics.median(speedups) if speedups else None,
        "speedup_min": min(speedups) if speedups else None,
        "speedup_max": max(speedups) if speedups else None,
    }
    (out / "metrics.json").write_text(metrics_to_json(per_seed, aggregate))
    return ExperimentResult(
        output_dir=out,
        reference_energy=e_ref,
        per_seed=per_seed,
        aggregate=aggregate,
        all_converged=aggregate["all_converged"],
    )
