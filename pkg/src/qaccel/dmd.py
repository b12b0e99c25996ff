"""Linear one-step baseline (dynamic mode decomposition).

Fits theta_{k+1} ~= A theta_k by least squares on snapshot matrices and
extrapolates by iterating A. Plugged into the same accelerated outer loop as
the surrogate network, with one accounting difference: this baseline estimates
the energy of every extrapolated step on the quantum engine, so each predicted
step carries a shot charge.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .ansatz import AnsatzSpec
from .pauli import Hamiltonian
from .pinn import TrainingSet
from .predictor import AcceleratedResult, PalqoConfig, run_accelerated
from .vqe import VqeObjective

SVD_CUTOFF = 1e-12
DIVERGENCE_NORM_CAP = 1e6
DEFAULT_FIT_WINDOW = 3


class DmdError(ValueError):
    pass


@dataclass(frozen=True)
class DmdModel:
    """Best-fit linear one-step operator theta -> A theta."""

    operator: np.ndarray
    fit_window: int = DEFAULT_FIT_WINDOW

    def __post_init__(self):
        a = np.asarray(self.operator, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DmdError(f"operator must be square, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise DmdError("operator entries must be finite")
        object.__setattr__(self, "operator", a)

    @property
    def p(self) -> int:
        return self.operator.shape[0]


def fit_dmd(snapshots: list, window: Optional[int] = None) -> DmdModel:
    """A = Y pinv(X) with X the leading and Y the trailing snapshot columns.

    `window` keeps only the last `window + 1` snapshots (i.e. `window`
    transition pairs); None uses everything. Pseudo-inverse by SVD with a
    relative cutoff of 1e-12, no rank truncation beyond that.
    """
    thetas = [np.asarray(s, dtype=float) for s in snapshots]
    if len(thetas) < 2:
        raise DmdError(f"need at least 2 snapshots, got {len(thetas)}")
    if window is not None:
        if window < 1:
            raise DmdError("window must be >= 1")
        thetas = thetas[-(window + 1):]
    x = np.stack(thetas[:-1], axis=1)
    y = np.stack(thetas[1:], axis=1)
    operator = y @ np.linalg.pinv(x, rcond=SVD_CUTOFF)
    return DmdModel(operator, fit_window=len(thetas) - 1)


def predict_dmd(model: DmdModel, theta: np.ndarray, steps: int) -> np.ndarray:
    """Apply the fitted operator `steps` times."""
    if steps < 0:
        raise DmdError("steps must be >= 0")
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (model.p,):
        raise DmdError(f"theta length {theta.size} != operator size {model.p}")
    for _ in range(steps):
        theta = model.operator @ theta
        if np.linalg.norm(theta) > DIVERGENCE_NORM_CAP:
            warnings.warn(
                "linear extrapolation diverged (norm > 1e6)", RuntimeWarning
            )
    return theta


class DmdPredictor:
    """Adapter exposing DmdModel through the outer-loop predictor interface."""

    charges_predictions = True

    def __init__(self, window: int = DEFAULT_FIT_WINDOW):
        self.window = window
        self.model: Optional[DmdModel] = None

    def fit(self, ts: TrainingSet) -> None:
        snapshots = [s.theta for s in ts.samples] + [ts.samples[-1].theta_next]
        self.model = fit_dmd(snapshots, window=min(self.window, len(snapshots) - 1))

    def predict(self, t_scaled: float, theta: np.ndarray) -> np.ndarray:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return self.model.operator @ theta


def run_dmd(h: Hamiltonian, spec: AnsatzSpec, config: PalqoConfig) -> AcceleratedResult:
    """Accelerated VQE with the linear baseline in place of the network."""
    objective = VqeObjective(
        h,
        spec,
        noise=config.vqe.noise,
        shot_model=config.vqe.shot_model,
        init_seed=config.vqe.init_seed,
    )
    return run_accelerated(objective, config, DmdPredictor())
