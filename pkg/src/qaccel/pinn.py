"""Physics-informed surrogate of the optimization dynamics.

A tanh MLP maps (t_scaled, theta) -> (E_hat, theta_next_hat). Training
minimizes

    L = lambda_data * L_D + lambda_flow * L_P1 + lambda_rate * L_P2

where L_D fits the recorded trajectory (theta output paired against the
*next* step), L_P1 penalizes violations of the gradient-flow relation
d(theta_hat)/dt = -dE_hat/dtheta, and L_P2 penalizes violations of the
second-order energy-rate relation
dE_hat/dt = -sum_j (dE_hat/dtheta_j)^2 + (eta/2) g^T H g.

All derivatives are analytic: input Jacobians/Hessians use the layered chain
rule; weight gradients of the full loss (third-order mixed derivatives) come
from one reverse pass over a computation graph in which the input-derivative
quantities are themselves expressed with differentiable primitives
(see tape.py). Finite differences exist only as a validation fallback.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import tape
from .statevector import make_rng
from .trajectory import Trajectory

CHECKPOINT_VERSION = 1


class PinnError(ValueError):
    pass


class PinnTrainingError(RuntimeError):
    """Training aborted (non-finite loss)."""


@dataclass
class MlpParams:
    """Weights/biases of the feedforward net; tanh on hidden layers only."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        if len(self.weights) != len(self.biases):
            raise PinnError("weights/biases length mismatch")
        for w, b in zip(self.weights, self.biases):
            if w.shape[0] != b.shape[0]:
                raise PinnError("weight/bias row mismatch")

    @property
    def layer_sizes(self) -> list[int]:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[1]

    def copy(self) -> "MlpParams":
        return MlpParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def flat(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend([w, b])
        return out


@dataclass(frozen=True)
class PinnConfig:
    """Surrogate-network hyperparameters.

    `width=None` resolves to 50 * p at initialization. `eta_vqe` is the
    learning rate of the *quantum-side* gradient descent entering the
    second-order residual, not the network's own learning rate.
    """

    width: Optional[int] = None
    hidden_layers: int = 2
    lambda_data: float = 1e-4
    lambda_flow: float = 1.0
    lambda_rate: float = 1.0
    eta_vqe: float = 0.05
    epochs: int = 3400
    lr_initial: float = 1e-3
    lr_final: float = 1e-5
    train_seed: int = 0
    p2_enabled: bool = True
    p1_per_component: bool = False
    init_scale: float = 1.0
    # Optional reduced epoch budget for warm-started retraining cycles.
    warm_epochs: Optional[int] = None

    def __post_init__(self):
        if min(self.lambda_data, self.lambda_flow, self.lambda_rate) < 0:
            raise PinnError("loss weights must be >= 0")
        if self.epochs < 0:
            raise PinnError("epochs must be >= 0")
        if not (self.lr_initial >= self.lr_final > 0):
            raise PinnError("need lr_initial >= lr_final > 0")
        if self.hidden_layers < 1:
            raise PinnError("need at least one hidden layer")


@dataclass(frozen=True)
class TrainingSample:
    t_scaled: float
    theta: np.ndarray
    energy: float
    theta_next: np.ndarray


@dataclass
class TrainingSet:
    samples: list[TrainingSample]

    def __post_init__(self):
        if not self.samples:
            raise PinnError("empty training set")
        p = self.samples[0].theta.size
        for s in self.samples:
            if s.theta.size != p or s.theta_next.size != p:
                raise PinnError("inconsistent theta dimensions")

    @property
    def p(self) -> int:
        return self.samples[0].theta.size

    @classmethod
    def from_trajectory(cls, traj: Trajectory, start: int, count: int) -> "TrainingSet":
        """Pairs (t_hat_k, theta_k) -> (E_k, theta_{k+1}) for k in the window."""
        if count < 1:
            raise PinnError("window must contain at least one sample")
        if start < 0 or start + count > len(traj.records) - 1:
            raise PinnError(
                f"window [{start}, {start + count}] exceeds trajectory length "
                f"{len(traj.records)}"
            )
        samples = []
        for k in range(start, start + count):
            rec, nxt = traj.records[k], traj.records[k + 1]
            samples.append(
                TrainingSample(rec.t_scaled, rec.theta.copy(), rec.energy, nxt.theta.copy())
            )
        return cls(samples)


def resolve_width(p: int, config: PinnConfig) -> int:
    return config.width if config.width is not None else 50 * p


def init_mlp(p: int, config: PinnConfig) -> MlpParams:
    """Uniform [-scale, scale] initialization of an (p+1 -> W -> ... -> p+1) net."""
    width = resolve_width(p, config)
    sizes = [p + 1] + [width] * config.hidden_layers + [p + 1]
    rng = make_rng(config.train_seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(config.init_scale * rng.uniform(-1, 1, size=(fan_out, fan_in)))
        biases.append(config.init_scale * rng.uniform(-1, 1, size=fan_out))
    return MlpParams(weights, biases)


# -- analytic evaluation ----------------------------------------------------

def forward(params: MlpParams, x: np.ndarray) -> np.ndarray:
    """Network output; slot 0 is the energy head, slots 1..p the next theta."""
    x = np.asarray(x, dtype=float)
    if x.shape != (params.in_dim,):
        raise PinnError(f"input shape {x.shape} != ({params.in_dim},)")
    a = x
    for w, b in zip(params.weights[:-1], params.biases[:-1]):
        a = np.tanh(w @ a + b)
    return params.weights[-1] @ a + params.biases[-1]


def _hidden_activations(params: MlpParams, x: np.ndarray) -> list[np.ndarray]:
    acts = []
    a = np.asarray(x, dtype=float)
    for w, b in zip(params.weights[:-1], params.biases[:-1]):
        a = np.tanh(w @ a + b)
        acts.append(a)
    return acts


def input_jacobian(params: MlpParams, x: np.ndarray) -> np.ndarray:
    """Exact d(output)/d(input) via the layered chain rule."""
    acts = _hidden_activations(params, x)
    jac = None
    for w, a in zip(params.weights[:-1], acts):
        pre = w if jac is None else w @ jac
        jac = (1.0 - a * a)[:, None] * pre
    return params.weights[-1] @ jac


def energy_input_hessian(params: MlpParams, x: np.ndarray) -> np.ndarray:
    """Exact Hessian of the energy head with respect to the theta inputs.

    Propagates per-unit Jacobians and Hessian tensors layer by layer;
    quadratic memory in the input dimension, used for cross-validation and
    small problems (the training loss uses directional curvature instead).
    """
    x = np.asarray(x, dtype=float)
    d = x.size
    jac = np.eye(d)
    hess = np.zeros((d, d, d))
    a = x
    for w, b in zip(params.weights[:-1], params.biases[:-1]):
        jac_pre = w @ jac
        hess_pre = np.tensordot(w, hess, axes=1)
        a = np.tanh(w @ a + b)
        deriv = 1.0 - a * a
        second = -2.0 * a * deriv
        hess = (
            second[:, None, None] * np.einsum("ki,kj->kij", jac_pre, jac_pre)
            + deriv[:, None, None] * hess_pre
        )
        jac = deriv[:, None] * jac_pre
    full = np.tensordot(params.weights[-1], hess, axes=1)[0]
    return full[1:, 1:]


def energy_directional_curvature(
    params: MlpParams, x: np.ndarray, v_theta: np.ndarray
) -> float:
    """v^T H v for the energy head, v acting on theta slots only.

    Second-order forward-mode propagation: one pass, no Hessian
    materialization.
    """
    x = np.asarray(x, dtype=float)
    v = np.concatenate([[0.0], np.asarray(v_theta, dtype=float)])
    if v.shape != x.shape:
        raise PinnError("direction length must equal the theta count")
    a = x
    t = v
    s = np.zeros_like(v)
    for w, b in zip(params.weights[:-1], params.biases[:-1]):
        zt = w @ t
        zs = w @ s
        a = np.tanh(w @ a + b)
        deriv = 1.0 - a * a
        t = deriv * zt
        s = (-2.0 * a * deriv) * zt * zt + deriv * zs
    return float((params.weights[-1] @ s)[0])


# -- tape-expressed losses ---------------------------------------------------

def _params_vars(params: MlpParams) -> tuple[list[tape.Var], list[tape.Var]]:
    return [tape.Var(w) for w in params.weights], [tape.Var(b) for b in params.biases]


def _sample_terms(
    w_vars: list[tape.Var],
    b_vars: list[tape.Var],
    sample: TrainingSample,
    eta_vqe: float,
    p1_per_component: bool,
    need_p2: bool,
):
    """Build one sample's (data, flow, rate) loss terms on the tape."""
    p = sample.theta.size
    x = np.concatenate([[sample.t_scaled], sample.theta])
    acts: list[tape.Var] = []
    derivs: list[tape.Var] = []
    a = tape.Var(x)
    for w, b in zip(w_vars[:-1], b_vars[:-1]):
        a = tape.tanh(w @ a + b)
        acts.append(a)
        derivs.append(1.0 - a * a)
    y = w_vars[-1] @ a + b_vars[-1]

    # data residual: energy head vs E^(t), theta head vs theta^(t+1)
    de = y[0] - sample.energy
    dtheta = y[slice(1, None)] - tape.Var(sample.theta_next)
    data_term = tape.square(de) + tape.vsum(tape.square(dtheta))

    # input Jacobian, expressed with tape primitives
    jac = None
    for w, deriv in zip(w_vars[:-1], derivs):
        pre = w if jac is None else w @ jac
        jac = tape.mul(tape.reshape(deriv, (deriv.value.size, 1)), pre)
    jac = w_vars[-1] @ jac

    grad_e = jac[(0, slice(1, None))]
    theta_dot = jac[(slice(1, None), 0)]
    flow_res = theta_dot + grad_e
    if p1_per_component:
        flow_term = tape.vsum(tape.square(flow_res))
    else:
        flow_term = tape.square(tape.vsum(flow_res))

    rate_term = None
    if need_p2:
        de_dt = jac[(0, 0)]
        kernel = tape.vsum(tape.square(grad_e))
        # directional curvature g^T H g by second-order forward mode on the tape
        v = tape.concat([tape.Var([0.0]), grad_e])
        t_vec = v
        s_vec = None
        for w, a_l, deriv in zip(w_vars[:-1], acts, derivs):
            zt = w @ t_vec
            zs = w @ s_vec if s_vec is not None else None
            curved = tape.mul(tape.mul(-2.0 * a_l, deriv), tape.square(zt))
            s_vec = curved if zs is None else curved + tape.mul(deriv, zs)
            t_vec = tape.mul(deriv, zt)
        ghg = (w_vars[-1] @ s_vec)[0]
        residual = de_dt + kernel - (eta_vqe / 2.0) * ghg
        rate_term = tape.square(residual)
    return data_term, flow_term, rate_term


def _build_loss(
    w_vars: list[tape.Var],
    b_vars: list[tape.Var],
    ts: TrainingSet,
    config: PinnConfig,
) -> tuple[tape.Var, dict]:
    need_p2 = config.p2_enabled and config.lambda_rate != 0.0
    data_total, flow_total, rate_total = None, None, None
    for sample in ts.samples:
        d, f, r = _sample_terms(
            w_vars, b_vars, sample, config.eta_vqe, config.p1_per_component, need_p2
        )
        data_total = d if data_total is None else data_total + d
        flow_total = f if flow_total is None else flow_total + f
        if need_p2:
            rate_total = r if rate_total is None else rate_total + r
    total = config.lambda_data * data_total + config.lambda_flow * flow_total
    components = {
        "data": float(data_total.value),
        "flow": float(flow_total.value),
        "rate": 0.0,
    }
    if need_p2:
        total = total + config.lambda_rate * rate_total
        components["rate"] = float(rate_total.value)
    components["total"] = float(total.value)
    return total, components


def loss_data(params: MlpParams, ts: TrainingSet) -> float:
    """sum_t (E_t - E_hat_t)^2 + ||theta_{t+1} - theta_hat_t||^2."""
    w_vars, b_vars = _params_vars(params)
    cfg = PinnConfig(lambda_data=1.0, lambda_flow=0.0, lambda_rate=0.0, p2_enabled=False)
    _, comps = _build_loss(w_vars, b_vars, ts, cfg)
    return comps["data"]


def loss_gradient_flow(
    params: MlpParams, ts: TrainingSet, per_component: bool = False
) -> float:
    """First PDE residual: d(theta_hat)/dt + dE_hat/dtheta summed over theta.

    Default aggregates the inner sum before squaring; `per_component` squares
    each component first (opposite-sign residuals then cannot cancel).
    """
    w_vars, b_vars = _params_vars(params)
    cfg = PinnConfig(
        lambda_data=0.0,
        lambda_flow=1.0,
        lambda_rate=0.0,
        p2_enabled=False,
        p1_per_component=per_component,
    )
    _, comps = _build_loss(w_vars, b_vars, ts, cfg)
    return comps["flow"]


def loss_energy_rate(params: MlpParams, ts: TrainingSet, eta_vqe: float) -> float:
    """Second PDE residual (energy-rate relation), squared and summed."""
    w_vars, b_vars = _params_vars(params)
    cfg = PinnConfig(lambda_data=0.0, lambda_flow=0.0, lambda_rate=1.0, eta_vqe=eta_vqe)
    _, comps = _build_loss(w_vars, b_vars, ts, cfg)
    return comps["rate"]


def total_loss(params: MlpParams, ts: TrainingSet, config: PinnConfig) -> tuple[float, dict]:
    """Weighted total loss plus the individual components for logging."""
    w_vars, b_vars = _params_vars(params)
    _, comps = _build_loss(w_vars, b_vars, ts, config)
    return comps["total"], comps


def loss_weight_gradient(
    params: MlpParams, ts: TrainingSet, config: PinnConfig
) -> list[np.ndarray]:
    """Exact gradient of total_loss w.r.t. every weight and bias.

    Returned in flat() order: [W0, b0, W1, b1, ...].
    """
    w_vars, b_vars = _params_vars(params)
    total, _ = _build_loss(w_vars, b_vars, ts, config)
    wrt = []
    for w, b in zip(w_vars, b_vars):
        wrt.extend([w, b])
    return tape.gradient(total, wrt)


def loss_weight_gradient_fd(
    params: MlpParams, ts: TrainingSet, config: PinnConfig, delta: float = 1e-6
) -> list[np.ndarray]:
    """Central finite-difference gradient; validation fallback only."""
    grads = []
    work = params.copy()
    for arr in work.flat():
        g = np.zeros_like(arr)
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = arr[idx]
            arr[idx] = orig + delta
            up, _ = total_loss(work, ts, config)
            arr[idx] = orig - delta
            down, _ = total_loss(work, ts, config)
            arr[idx] = orig
            g[idx] = (up - down) / (2 * delta)
        grads.append(g)
    return grads


def train(
    w0: MlpParams, ts: TrainingSet, config: PinnConfig, epochs: Optional[int] = None
) -> tuple[MlpParams, list[dict]]:
    """Full-batch Adam with a linear learning-rate decay. Deterministic."""
    params = w0.copy()
    n_epochs = config.epochs if epochs is None else epochs
    arrays = params.flat()
    m = [np.zeros_like(a) for a in arrays]
    v = [np.zeros_like(a) for a in arrays]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    history = []
    for k in range(n_epochs):
        w_vars, b_vars = _params_vars(params)
        total, comps = _build_loss(w_vars, b_vars, ts, config)
        if not np.isfinite(comps["total"]):
            raise PinnTrainingError(
                f"non-finite loss at epoch {k}: {comps}"
            )
        history.append(comps)
        wrt = []
        for w, b in zip(w_vars, b_vars):
            wrt.extend([w, b])
        grads = tape.gradient(total, wrt)
        frac = k / (n_epochs - 1) if n_epochs > 1 else 0.0
        lr = config.lr_initial + (config.lr_final - config.lr_initial) * frac
        t_adam = k + 1
        for arr, g, mi, vi in zip(arrays, grads, m, v):
            mi *= beta1
            mi += (1 - beta1) * g
            vi *= beta2
            vi += (1 - beta2) * g * g
            m_hat = mi / (1 - beta1**t_adam)
            v_hat = vi / (1 - beta2**t_adam)
            arr -= lr * m_hat / (np.sqrt(v_hat) + eps)
    return params, history


# -- checkpointing ------------------------------------------------------------

def save_checkpoint(params: MlpParams, path) -> None:
    """Bit-exact round-trip of layer sizes plus row-major weights/biases."""
    payload = {
        "format_version": np.array([CHECKPOINT_VERSION]),
        "layer_sizes": np.array(params.layer_sizes),
    }
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        payload[f"w{i}"] = w
        payload[f"b{i}"] = b
    np.savez(path, **payload)


def load_checkpoint(path) -> MlpParams:
    with np.load(path) as data:
        version = int(data["format_version"][0])
        if version != CHECKPOINT_VERSION:
            raise PinnError(f"unsupported checkpoint version {version}")
        sizes = data["layer_sizes"]
        n_layers = len(sizes) - 1
        weights = [data[f"w{i}"].copy() for i in range(n_layers)]
        biases = [data[f"b{i}"].copy() for i in range(n_layers)]
    return MlpParams(weights, biases)
