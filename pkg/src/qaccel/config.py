"""TOML experiment configuration, validated fail-closed.

Unknown keys are errors so a typo cannot silently fall back to a default.
Referenced files (Hamiltonian term lists, generator lists) are resolved
relative to the config file and loaded eagerly, so a bad path fails at
parse time with no partial artifacts.
"""

from __future__ import annotations

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .ansatz import (
    AnsatzError,
    AnsatzSpec,
    HeaAnsatz,
    hva_from_hamiltonian,
    load_generators_file,
)
from .pauli import (
    Hamiltonian,
    HamiltonianError,
    build_heisenberg,
    build_tfim,
    build_xxz,
    parse_hamiltonian_file,
)
from .pinn import PinnConfig, PinnError
from .predictor import PredictorError, RolloutConfig
from .statevector import NoiseModel
from .vqe import VqeConfig

METHODS = ("vanilla", "palqo", "dmd")

_MISSING = object()


class ConfigError(ValueError):
    pass


@dataclass
class PalqoSection:
    tau: int = 2
    tau_first: Optional[int] = None
    max_cycles: int = 20
    reset_each_cycle: bool = False


@dataclass
class ExperimentConfig:
    method: str
    hamiltonian: Hamiltonian
    ansatz: AnsatzSpec
    output_dir: str
    seeds: list[int]
    vqe: VqeConfig
    pinn: PinnConfig
    palqo: PalqoSection
    rollout: RolloutConfig
    noise: Optional[NoiseModel] = None
    reference_energy: Optional[float] = None
    shot_epsilon: float = 1e-3
    early_stop: bool = True


def _take(table: dict, key: str, kind, default=_MISSING, section: str = ""):
    where = f"{section}.{key}" if section else key
    if key not in table:
        if default is _MISSING:
            raise ConfigError(f"missing required key {where!r}")
        return default
    value = table.pop(key)
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if kind is not None and not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
        raise ConfigError(f"key {where!r} has wrong type {type(value).__name__}")
    return value


def _reject_unknown(table: dict, section: str) -> None:
    if table:
        keys = ", ".join(sorted(table))
        raise ConfigError(f"unknown key(s) in [{section or 'top level'}]: {keys}")


def _build_hamiltonian(table: dict, base_dir: Path) -> Hamiltonian:
    try:
        if "file" in table:
            path = base_dir / _take(table, "file", str, section="hamiltonian")
            _reject_unknown(table, "hamiltonian")
            if not path.is_file():
                raise ConfigError(f"hamiltonian file not found: {path}")
            return parse_hamiltonian_file(path.read_text())
        builder = _take(table, "builder", str, section="hamiltonian")
        if builder == "tfim":
            h = build_tfim(
                _take(table, "n", int, section="hamiltonian"),
                _take(table, "j", float, 1.0, "hamiltonian"),
                _take(table, "h", float, 1.0, "hamiltonian"),
            )
        elif builder == "heisenberg":
            h = build_heisenberg(
                _take(table, "n", int, section="hamiltonian"),
                _take(table, "jx", float, 1.0, "hamiltonian"),
                _take(table, "jy", float, 1.0, "hamiltonian"),
                _take(table, "jz", float, 1.0, "hamiltonian"),
                _take(table, "h", float, 0.0, "hamiltonian"),
            )
        elif builder == "xxz":
            h = build_xxz(
                _take(table, "n", int, section="hamiltonian"),
                _take(table, "j", float, 1.0, "hamiltonian"),
                _take(table, "jp", float, 1.0, "hamiltonian"),
                _take(table, "delta", float, 0.0, "hamiltonian"),
            )
        else:
            raise ConfigError(f"unknown hamiltonian builder {builder!r}")
        _reject_unknown(table, "hamiltonian")
        return h
    except HamiltonianError as exc:
        raise ConfigError(f"hamiltonian: {exc}") from None


def _build_ansatz(table: dict, h: Hamiltonian, base_dir: Path) -> AnsatzSpec:
    kind = _take(table, "kind", str, "hea", "ansatz")
    try:
        if kind == "hea":
            spec = HeaAnsatz(h.n, _take(table, "layers", int, 3, "ansatz"))
        elif kind == "hva":
            spec = hva_from_hamiltonian(h, _take(table, "layers", int, 3, "ansatz"))
        elif kind == "generators":
            path = base_dir / _take(table, "file", str, section="ansatz")
            if not path.is_file():
                raise ConfigError(f"generators file not found: {path}")
            spec = load_generators_file(path.read_text())
            if spec.n != h.n:
                raise ConfigError(
                    f"generator width {spec.n} != hamiltonian width {h.n}"
                )
        else:
            raise ConfigError(f"unknown ansatz kind {kind!r}")
    except AnsatzError as exc:
        raise ConfigError(f"ansatz: {exc}") from None
    _reject_unknown(table, "ansatz")
    return spec


def parse_experiment_config(text: str, base_dir: Path = Path(".")) -> ExperimentConfig:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from None

    method = _take(doc, "method", str)
    if method not in METHODS:
        raise ConfigError(f"method must be one of {METHODS}, got {method!r}")
    output_dir = _take(doc, "output_dir", str)
    seeds = _take(doc, "seeds", list)
    if not seeds or not all(isinstance(s, int) and not isinstance(s, bool) for s in seeds):
        raise ConfigError("seeds must be a non-empty list of integers")
    if len(set(seeds)) != len(seeds):
        raise ConfigError("seeds must be unique")
    reference_energy = _take(doc, "reference_energy", float, None)
    early_stop = _take(doc, "early_stop", bool, True)

    ham_table = _take(doc, "hamiltonian", dict)
    h = _build_hamiltonian(dict(ham_table), base_dir)
    ansatz = _build_ansatz(dict(_take(doc, "ansatz", dict, {})), h, base_dir)

    vqe_table = dict(_take(doc, "vqe", dict, {}))
    shot_epsilon = _take(vqe_table, "epsilon", float, 1e-3, "vqe")
    try:
        vqe = VqeConfig(
            eta=_take(vqe_table, "eta", float, 0.05, "vqe"),
            max_iters=_take(vqe_table, "max_iters", int, 1000, "vqe"),
            varsigma=_take(vqe_table, "varsigma", float, 1e-6, "vqe"),
            accuracy_target=_take(vqe_table, "accuracy_target", float, 1e-3, "vqe"),
        )
    except ValueError as exc:
        raise ConfigError(f"vqe: {exc}") from None
    _reject_unknown(vqe_table, "vqe")

    noise = None
    if "noise" in doc:
        noise_table = dict(_take(doc, "noise", dict))
        try:
            noise = NoiseModel(
                depolarizing_prob=_take(
                    noise_table, "depolarizing_prob", float, 0.0, "noise"
                ),
                shots_per_term=_take(noise_table, "shots_per_term", int, None, "noise"),
            )
        except ValueError as exc:
            raise ConfigError(f"noise: {exc}") from None
        _reject_unknown(noise_table, "noise")

    pinn_table = dict(_take(doc, "pinn", dict, {}))
    try:
        pinn = PinnConfig(
            width=_take(pinn_table, "width", int, None, "pinn"),
            hidden_layers=_take(pinn_table, "hidden_layers", int, 2, "pinn"),
            lambda_data=_take(pinn_table, "lambda_data", float, 1e-4, "pinn"),
            lambda_flow=_take(pinn_table, "lambda_flow", float, 1.0, "pinn"),
            lambda_rate=_take(pinn_table, "lambda_rate", float, 1.0, "pinn"),
            epochs=_take(pinn_table, "epochs", int, 3400, "pinn"),
            warm_epochs=_take(pinn_table, "warm_epochs", int, None, "pinn"),
            lr_initial=_take(pinn_table, "lr_initial", float, 1e-3, "pinn"),
            lr_final=_take(pinn_table, "lr_final", float, 1e-5, "pinn"),
            train_seed=_take(pinn_table, "train_seed", int, 0, "pinn"),
            init_scale=_take(pinn_table, "init_scale", float, 1.0, "pinn"),
            p2_enabled=_take(pinn_table, "p2_enabled", bool, True, "pinn"),
            p1_per_component=_take(pinn_table, "p1_per_component", bool, False, "pinn"),
        )
    except PinnError as exc:
        raise ConfigError(f"pinn: {exc}") from None
    _reject_unknown(pinn_table, "pinn")

    palqo_table = dict(_take(doc, "palqo", dict, {}))
    palqo = PalqoSection(
        tau=_take(palqo_table, "tau", int, 2, "palqo"),
        tau_first=_take(palqo_table, "tau_first", int, None, "palqo"),
        max_cycles=_take(palqo_table, "max_cycles", int, 20, "palqo"),
        reset_each_cycle=_take(palqo_table, "reset_each_cycle", bool, False, "palqo"),
    )
    _reject_unknown(palqo_table, "palqo")

    rollout_table = dict(_take(doc, "rollout", dict, {}))
    try:
        rollout = RolloutConfig(
            max_steps=_take(rollout_table, "max_steps", int, 2000, "rollout"),
            delta_tol=_take(rollout_table, "delta_tol", float, 1e-4, "rollout"),
        )
    except PredictorError as exc:
        raise ConfigError(f"rollout: {exc}") from None
    _reject_unknown(rollout_table, "rollout")

    _reject_unknown(doc, "")
    return ExperimentConfig(
        method=method,
        hamiltonian=h,
        ansatz=ansatz,
        output_dir=output_dir,
        seeds=list(seeds),
        vqe=vqe,
        pinn=pinn,
        palqo=palqo,
        rollout=rollout,
        noise=noise,
        reference_energy=reference_energy,
        shot_epsilon=shot_epsilon,
        early_stop=early_stop,
    )


def load_experiment_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_experiment_config(path.read_text(), base_dir=path.parent)
