"""
时间推进损失与训练循环
损失 = Σ_{n,i} Σ_{k≠0} γ^|k| (v_i^{n+k} − T^k(v^n − η̂^n) − η̂_i^{n+k})² + λ_n‖η̂‖² + λ_wd Σ‖W‖²
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Union

import numpy as np
import pandas as pd

from .datagen import make_rng
from .errors import InvalidArgumentError, NumericalError, TrainingError
from .grid import Trajectory
from .neural.adam import AdamState, adam_step
from .neural.mlp import MlpParams, init_mlp, taped_params
from .neural.tape import Tape
from .operator import Forcing, StencilNetModel, apply_operator_taped
from .schemas import NoiseMode, TrainConfig
from .solvers.time_stepping import rk3_tvd_step

logger = logging.getLogger(__name__)

HISTORY_COLUMNS = ["epoch", "loss", "mse_term", "noise_penalty", "wd_penalty"]


@dataclass
class NoiseEstimate:
    """隐变量噪声估计 N̂，与训练数据同形"""

    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.array(self.matrix, dtype=np.float64)
        if self.matrix.ndim != 2:
            raise InvalidArgumentError(f"noise estimate must be a matrix, got shape {self.matrix.shape}")
        if not np.all(np.isfinite(self.matrix)):
            raise NumericalError("noise estimate contains non-finite values")

    @classmethod
    def zeros(cls, shape) -> "NoiseEstimate":
        return cls(np.zeros(shape))

    @property
    def shape(self):
        return self.matrix.shape

    def energy(self) -> float:
        """‖N̂‖²_F / (N_t·N_x)"""
        return float(np.mean(self.matrix**2))


@dataclass
class LossResult:
    value: float
    mse_term: float
    noise_penalty: float
    wd_penalty: float
    theta_grads: List[np.ndarray]
    noise_grad: Optional[np.ndarray] = None


@dataclass
class TrainResult:
    model: StencilNetModel
    noise: NoiseEstimate
    history: pd.DataFrame
    best_epoch: int = 0
    lr_trace: List[float] = field(default_factory=list)


def anchor_pairs(n_steps: int, n_points: int, q: int, backward: bool = True) -> np.ndarray:
    """所有 (n, i) 锚点，保证 n−q … n+q 行都在数据内"""
    first = q if backward else 0
    last = n_steps - 1 - q
    if last < first:
        need = 2 * q + 2 if backward else q + 1
        raise InvalidArgumentError(f"training horizon q={q} needs at least {need} rows, data has {n_steps}")
    ns, idx = np.meshgrid(np.arange(first, last + 1), np.arange(n_points), indexing="ij")
    return np.stack([ns.ravel(), idx.ravel()], axis=1)


def _taped_loss(theta: MlpParams, eta: Optional[np.ndarray], data: np.ndarray, anchors: np.ndarray,
                cfg: TrainConfig, m: int, dt: float, forcing: Optional[Forcing], learn_noise: bool,
                fraction: float) -> LossResult:
    tape = Tape()
    layer_vars = taped_params(tape, theta)
    eta_var = tape.leaf(eta, requires_grad=learn_noise) if eta is not None else None

    ns, inverse = np.unique(anchors[:, 0], return_inverse=True)
    mask = np.zeros((len(ns), data.shape[1]))
    np.add.at(mask, (inverse.ravel(), anchors[:, 1]), 1.0)

    def rhs(u, t):
        out = apply_operator_taped(tape, layer_vars, u, m, theta.activation)
        return out if forcing is None else out + forcing(t)

    start = tape.constant(data[ns])
    if eta_var is not None:
        start = start - tape.take(eta_var, ns)

    directions = (1, -1) if cfg.backward else (1,)
    mse = None
    for direction in directions:
        u = start
        step_dt = direction * dt
        for k in range(1, cfg.q + 1):
            u = rk3_tvd_step(u, rhs, step_dt, (ns + direction * (k - 1)) * dt)
            rows = ns + direction * k
            resid = tape.constant(data[rows]) - u
            if eta_var is not None:
                resid = resid - tape.take(eta_var, rows)
            term = tape.sum(tape.square(resid) * ((cfg.gamma ** k) * mask))
            mse = term if mse is None else mse + term

    total = mse
    noise_pen = None
    if eta_var is not None and cfg.lambda_n > 0:
        noise_pen = tape.sum(tape.square(eta_var)) * (cfg.lambda_n * fraction)
        total = total + noise_pen
    wd_pen = None
    if cfg.lambda_wd > 0:
        for W, _ in layer_vars:
            w_term = tape.sum(tape.square(W))
            wd_pen = w_term if wd_pen is None else wd_pen + w_term
        wd_pen = wd_pen * (cfg.lambda_wd * fraction)
        total = total + wd_pen

    flat = [v for pair in layer_vars for v in pair]
    wrt = flat + ([eta_var] if eta_var is not None else [])
    grads = tape.gradient(total, wrt)
    return LossResult(
        value=float(total.value),
        mse_term=float(mse.value),
        noise_penalty=float(noise_pen.value) if noise_pen is not None else 0.0,
        wd_penalty=float(wd_pen.value) if wd_pen is not None else 0.0,
        theta_grads=grads[:len(flat)],
        noise_grad=grads[-1] if eta_var is not None else None,
    )


def loss(model: StencilNetModel, data: Union[Trajectory, np.ndarray], noise: Optional[NoiseEstimate],
         cfg: TrainConfig, forcing: Optional[Forcing] = None, anchors: Optional[np.ndarray] = None) -> LossResult:
    """损失与梯度（θ 与 η̂ 两部分）；anchors缺省为全部锚点"""
    values = data.data if isinstance(data, Trajectory) else np.asarray(data, dtype=np.float64)
    all_anchors = anchor_pairs(values.shape[0], values.shape[1], cfg.q, cfg.backward)
    if anchors is None:
        anchors = all_anchors
    anchors = np.asarray(anchors, dtype=np.intp).reshape(-1, 2)
    lo = cfg.q if cfg.backward else 0
    if anchors[:, 0].min() < lo or anchors[:, 0].max() > values.shape[0] - 1 - cfg.q:
        raise InvalidArgumentError(f"anchor rows must leave q={cfg.q} rows on each side")
    eta = None
    if noise is not None:
        if noise.shape != values.shape:
            raise InvalidArgumentError(f"noise estimate shape {noise.shape} does not match data {values.shape}")
        eta = noise.matrix
    elif cfg.noise == NoiseMode.LEARN:
        eta = np.zeros_like(values)
    fraction = len(anchors) / len(all_anchors)
    return _taped_loss(model.theta, eta, values, anchors, cfg, model.m, model.trained_dt, forcing,
                       cfg.noise == NoiseMode.LEARN, fraction)


def train(data: Trajectory, cfg: TrainConfig, noise: Optional[Union[NoiseMode, str]] = None,
          forcing: Optional[Forcing] = None, problem: str = "unknown",
          theta: Optional[MlpParams] = None) -> TrainResult:
    """Adam小批量训练，保留损失最低的一轮参数"""
    noise_mode = NoiseMode(noise) if noise is not None else cfg.noise
    cfg = cfg.model_copy(update={"noise": noise_mode})
    learn_noise = noise_mode == NoiseMode.LEARN
    if cfg.fold_forcing:
        forcing = None

    values = data.data
    n_steps, n_points = values.shape
    data.grid.check_stencil(cfg.m)
    anchors = anchor_pairs(n_steps, n_points, cfg.q, cfg.backward)
    n_anchors = len(anchors)

    if theta is None:
        theta = init_mlp([2 * cfg.m + 1, *cfg.hidden, 1], cfg.seed, cfg.activation)
    eta = np.zeros_like(values) if learn_noise else None
    n_theta = len(theta.arrays())
    shapes = [a.shape for a in theta.arrays()] + ([eta.shape] if learn_noise else [])
    state = AdamState(shapes, lr=cfg.lr)
    rng = make_rng(cfg.seed)

    logger.info(
        f"开始训练: 数据 {n_steps}×{n_points}, dx={data.grid.dx:.5g}, dt={data.dt:.5g}, "
        f"锚点={n_anchors}, q={cfg.q}, 噪声={noise_mode.value}, 网络={theta.widths}"
    )

    history = []
    lr_trace = []
    best = (np.inf, 0, theta.copy(), None if eta is None else eta.copy())
    report_every = max(cfg.epochs // 10, 1)
    for epoch in range(cfg.epochs):
        state.lr = cfg.lr * cfg.lr_decay**epoch
        lr_trace.append(state.lr)
        perm = rng.permutation(n_anchors)
        sums = np.zeros(4)
        for start in range(0, n_anchors, cfg.batch_size):
            batch = anchors[perm[start:start + cfg.batch_size]]
            try:
                result = _taped_loss(theta, eta, values, batch, cfg, cfg.m, data.dt, forcing, learn_noise,
                                     len(batch) / n_anchors)
            except NumericalError as e:
                raise TrainingError(f"training diverged in epoch {epoch}: {e}", epoch,
                                    pd.DataFrame(history, columns=HISTORY_COLUMNS)) from e
            if not np.isfinite(result.value):
                raise TrainingError(f"loss became NaN in epoch {epoch}", epoch,
                                    pd.DataFrame(history, columns=HISTORY_COLUMNS))
            sums += (result.value, result.mse_term, result.noise_penalty, result.wd_penalty)

            params = theta.arrays() + ([eta] if learn_noise else [])
            grads = result.theta_grads + ([result.noise_grad] if learn_noise else [])
            params, state = adam_step(params, grads, state)
            theta = MlpParams.from_arrays(params[:n_theta], theta.activation)
            if learn_noise:
                eta = params[-1]

        history.append([epoch, *sums])
        if sums[0] < best[0]:
            best = (sums[0], epoch, theta.copy(), None if eta is None else eta.copy())
        if epoch % report_every == 0 or epoch == cfg.epochs - 1:
            logger.info(f"epoch {epoch}: loss={sums[0]:.4e} (mse={sums[1]:.4e}, noise={sums[2]:.3e}, wd={sums[3]:.3e})")

    best_loss, best_epoch, best_theta, best_eta = best
    logger.info(f"训练完成: 最佳 epoch {best_epoch}, loss={best_loss:.4e}")
    model = StencilNetModel(best_theta, cfg.m, data.grid.dx, data.dt, problem)
    estimate = NoiseEstimate(best_eta) if best_eta is not None else NoiseEstimate.zeros(values.shape)
    return TrainResult(model, estimate, pd.DataFrame(history, columns=HISTORY_COLUMNS), best_epoch, lr_trace)


def denoised(data: Trajectory, estimate: NoiseEstimate) -> Trajectory:
    """v − N̂"""
    if estimate.shape != data.shape:
        raise InvalidArgumentError(f"noise estimate shape {estimate.shape} does not match data {data.shape}")
    return data.with_data(data.data - estimate.matrix)


__all__ = [
    "NoiseEstimate",
    "LossResult",
    "TrainResult",
    "anchor_pairs",
    "loss",
    "train",
    "denoised",
]
