"""Optimization trajectories and their CSV serialization.

CSV header is `step,t_scaled,energy,theta_0,...,theta_{p-1}` with an extra
trailing `source` column when any record carries provenance (quantum /
predicted / restart). Floats are written as shortest round-trip decimals, so
identical runs produce byte-identical files.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np

TIME_PER_STEP = 0.01

SOURCES = ("quantum", "predicted", "restart")


class TrajectoryError(ValueError):
    pass


@dataclass
class TrajectoryRecord:
    step: int
    theta: np.ndarray
    energy: float
    source: str = "quantum"

    def __post_init__(self):
        if self.step < 0:
            raise TrajectoryError(f"negative step {self.step}")
        if self.source not in SOURCES:
            raise TrajectoryError(f"unknown source {self.source!r}")
        self.theta = np.asarray(self.theta, dtype=float)

    @property
    def t_scaled(self) -> float:
        return TIME_PER_STEP * self.step


@dataclass
class Trajectory:
    records: list[TrajectoryRecord] = field(default_factory=list)
    quantum_iterations: int = 0
    shot_total: int = 0

    def append(self, record: TrajectoryRecord) -> None:
        if self.records and record.step != self.records[-1].step + 1:
            raise TrajectoryError(
                f"steps must increase by 1 (got {record.step} after "
                f"{self.records[-1].step})"
            )
        if self.records and record.theta.shape != self.records[-1].theta.shape:
            raise TrajectoryError("inconsistent theta length")
        self.records.append(record)

    @property
    def final(self) -> TrajectoryRecord:
        return self.records[-1]

    def energies(self) -> np.ndarray:
        return np.array([r.energy for r in self.records])

    def thetas(self) -> np.ndarray:
        return np.stack([r.theta for r in self.records])


def _fmt(x: float) -> str:
    return repr(float(x))


def trajectory_to_csv(traj: Trajectory, with_source: bool = False) -> str:
    """Serialize to the shared CSV format; see module docstring."""
    if not traj.records:
        raise TrajectoryError("cannot serialize an empty trajectory")
    p = len(traj.records[0].theta)
    header = ["step", "t_scaled", "energy"] + [f"theta_{i}" for i in range(p)]
    if with_source:
        header.append("source")
    lines = [",".join(header)]
    for r in traj.records:
        row = [str(r.step), _fmt(r.t_scaled), _fmt(r.energy)]
        row += [_fmt(v) for v in r.theta]
        if with_source:
            row.append(r.source)
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def trajectory_from_csv(text: str) -> Trajectory:
    """Parse a trajectory CSV written by `trajectory_to_csv`."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise TrajectoryError("empty trajectory CSV")
    header = lines[0].split(",")
    if header[:3] != ["step", "t_scaled", "energy"]:
        raise TrajectoryError(f"unexpected CSV header {lines[0]!r}")
    has_source = header[-1] == "source"
    theta_cols = len(header) - 3 - (1 if has_source else 0)
    traj = Trajectory()
    for ln in lines[1:]:
        parts = ln.split(",")
        step = int(parts[0])
        energy = float(parts[2])
        theta = np.array([float(v) for v in parts[3 : 3 + theta_cols]])
        source = parts[-1] if has_source else "quantum"
        traj.append(TrajectoryRecord(step, theta, energy, source))
    return traj
