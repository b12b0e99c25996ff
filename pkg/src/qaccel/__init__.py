"""Surrogate-accelerated variational ground-state search.

Core pieces: Pauli Hamiltonians with an exact diagonalization oracle, a
batched statevector simulator, parameter-shift gradient descent with
measurement-shot accounting, a physics-informed surrogate of the optimization
dynamics, classical trajectory extrapolation with quantum restarts, a linear
(DMD) baseline, and a reproducible experiment harness.
"""

from .ansatz import HeaAnsatz, HvaAnsatz, PauliRotationAnsatz, hva_from_hamiltonian
from .dmd import DmdModel, fit_dmd, predict_dmd, run_dmd
from .metrics import RunMetrics, compute_delta_e, compute_speedup
from .pauli import (
    Hamiltonian,
    PauliString,
    PauliTerm,
    build_heisenberg,
    build_tfim,
    build_xxz,
    exact_ground_energy,
    parse_hamiltonian_file,
)
from .pinn import MlpParams, PinnConfig, TrainingSet, forward, init_mlp, train
from .predictor import (
    PalqoConfig,
    RolloutConfig,
    rollout,
    run_palqo,
    select_restart,
)
from .statevector import NoiseModel, StateVector
from .trajectory import Trajectory, TrajectoryRecord, trajectory_from_csv, trajectory_to_csv
from .vqe import ShotModel, VqeConfig, parameter_shift_gradient, run_vqe, shot_cost

__version__ = "0.1.0"
