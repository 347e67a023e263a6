"""
Object (and optionally probe) retrieval by minimizing a mixed per-sensor
intensity loss with Adam.

For each sensor ``k`` the data term is

    MSE_k = (1/N) sum_i sum_pixels (I_meas / w_k - |Psi_k|^2)^2,

with ``w_k`` the sensor exposure weight. Sensors on the optical axis are
summed into ``MSE_on`` and the rest into ``MSE_off``; the objective is
``L = (1 - gamma) MSE_on + gamma MSE_off``.

Gradients are hand-derived adjoints of the forward chain. They are returned
in packed form ``dL/dRe + 1j dL/dIm`` (twice the Wirtinger derivative with
respect to the conjugate), which is what a real-parameter optimizer acting
on real and imaginary parts independently consumes.
"""

from dataclasses import dataclass, field, fields

import numpy as np

from .errors import NumericalError, ValidationError
from .forward import plan_for
from .grid import ComplexField


@dataclass(frozen=True)
class ReconstructionConfig:
    """Optimizer hyperparameters and mixing schedule.

    Parameters
    ----------
    epochs : int, default=40
        Passes over the scan positions. Zero returns the initial guess.
    learning_rate : float, default=0.01
    adam_beta1, adam_beta2 : float, default=(0.9, 0.999)
    adam_epsilon : float, default=1e-8
    gamma_initial, gamma_final : float, default=(0.0, 0.5)
        Mixing factor before and from ``gamma_switch_epoch`` on.
    gamma_switch_epoch : int, default=20
    optimize_probe : bool, default=False
    rng_seed : int, default=0
        Seeds mini-batch order and the optional initial-guess noise.
    batch_size : int or None, default=None
        Positions per Adam step; None means full batch.
    lr_decay : float, default=1.0
        Per-epoch multiplicative learning-rate decay.
    learning_rate_after_switch : float or None, default=None
        Restart value of the learning rate at the switch epoch; the decay
        restarts with it. None keeps the original schedule running.
    reset_optimizer_at_switch : bool, default=False
        Zero the Adam moments at the switch epoch.
    init_noise : float, default=0.0
        Standard deviation of complex Gaussian noise added to the initial
        object guess.
    """

    epochs: int = 40
    learning_rate: float = 0.01
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    gamma_initial: float = 0.0
    gamma_final: float = 0.5
    gamma_switch_epoch: int = 20
    optimize_probe: bool = False
    rng_seed: int = 0
    batch_size: object = None
    lr_decay: float = 1.0
    learning_rate_after_switch: object = None
    reset_optimizer_at_switch: bool = False
    init_noise: float = 0.0

    def __post_init__(self):
        checks = [
            (isinstance(self.epochs, (int, np.integer)) and self.epochs >= 0, "epochs must be an integer >= 0"),
            (self.learning_rate > 0, "learning_rate must be positive"),
            (0 < self.adam_beta1 < 1, "adam_beta1 must lie in (0, 1)"),
            (0 < self.adam_beta2 < 1, "adam_beta2 must lie in (0, 1)"),
            (self.adam_epsilon > 0, "adam_epsilon must be positive"),
            (0 <= self.gamma_initial <= 1, "gamma_initial must lie in [0, 1]"),
            (0 <= self.gamma_final <= 1, "gamma_final must lie in [0, 1]"),
            (0 <= self.gamma_switch_epoch <= self.epochs, "gamma_switch_epoch must lie in [0, epochs]"),
            (self.batch_size is None or int(self.batch_size) >= 1, "batch_size must be >= 1 or None"),
            (0 < self.lr_decay <= 1, "lr_decay must lie in (0, 1]"),
            (self.learning_rate_after_switch is None or self.learning_rate_after_switch > 0,
             "learning_rate_after_switch must be positive"),
            (self.init_noise >= 0, "init_noise must be non-negative"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ValidationError(msg)

    def gamma_at(self, epoch):
        return self.gamma_initial if epoch < self.gamma_switch_epoch else self.gamma_final

    def learning_rate_at(self, epoch):
        if self.learning_rate_after_switch is not None and epoch >= self.gamma_switch_epoch:
            return self.learning_rate_after_switch * self.lr_decay ** (epoch - self.gamma_switch_epoch)
        return self.learning_rate * self.lr_decay ** epoch

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]


@dataclass(frozen=True)
class OptimizerState:
    """Adam moments; the second moment is tracked separately for the real
    and imaginary parts."""

    m: np.ndarray
    v_re: np.ndarray
    v_im: np.ndarray
    t: int = 0

    @classmethod
    def zeros_like(cls, params):
        params = np.asarray(params)
        real_shape = params.shape
        return cls(np.zeros_like(params), np.zeros(real_shape), np.zeros(real_shape), 0)


@dataclass(frozen=True)
class LossReport:
    """Loss terms of one epoch.

    ``mse`` maps sensor names to their MSE; a sensor whose weight was zero
    is not evaluated and reported as NaN.
    """

    epoch: int
    gamma: float
    mse: dict = field(default_factory=dict)
    mse_on: float = 0.0
    mse_off: float = 0.0
    loss: float = 0.0


def mse(predicted, measured):
    """Per-position mean of pixel-summed squared residuals.

    Parameters
    ----------
    predicted, measured : array_like of shape (N, ny, nx)
        A single 2D frame is treated as ``N = 1``.
    """
    p = np.asarray(predicted, dtype=np.float64)
    m = np.asarray(measured, dtype=np.float64)
    if p.shape != m.shape:
        raise ValidationError(f"shape mismatch: {p.shape} vs {m.shape}")
    if p.ndim == 2:
        p, m = p[None], m[None]
    return float(np.sum((m - p) ** 2) / p.shape[0])


def mixed_loss(mse_on, mse_off, gamma):
    """``(1 - gamma) mse_on + gamma mse_off``; zero-weight terms are dropped."""
    if not 0 <= gamma <= 1:
        raise ValidationError(f"gamma must lie in [0, 1], got {gamma}")
    total = 0.0
    if gamma < 1:
        total += (1 - gamma) * mse_on
    if gamma > 0:
        total += gamma * mse_off
    return total


def _sensor_weights(sensors, gamma):
    return [(1.0 - gamma) if s.on_axis else gamma for s in sensors]


def _summarize(epoch, gamma, sensors, sq_sums, n_positions):
    per = {}
    on, off = 0.0, 0.0
    for s, sq in zip(sensors, sq_sums):
        value = float("nan") if sq is None else sq / n_positions
        per[s.name] = value
        if s.on_axis:
            on += value
        else:
            off += value
    return LossReport(epoch=epoch, gamma=gamma, mse=per, mse_on=on, mse_off=off,
                      loss=mixed_loss(on, off, gamma))


class _Objective:
    """Loss and adjoint gradient over arbitrary subsets of scan positions."""

    def __init__(self, scene, dataset):
        dataset.check_scene(scene)
        self.scene = scene
        self.sensors = scene.sensors
        self.plans = [plan_for(scene.grid, s) for s in self.sensors]
        self.measured = [dataset.normalized_frames(k) for k in range(len(self.sensors))]
        self.n_positions = dataset.n_positions

    def __call__(self, obj, probe, weights, indices, with_probe=False):
        scene = self.scene
        crops = scene.crops(obj, indices)
        psi = crops * probe
        n = len(indices)
        g_psi = np.zeros_like(psi)
        sq_sums = []
        for plan, meas, c in zip(self.plans, self.measured, weights):
            if c == 0:
                sq_sums.append(None)
                continue
            det = plan.forward(psi)
            res = np.abs(det) ** 2 - meas[indices]
            sq_sums.append(float(np.sum(res * res)))
            g_psi += plan.adjoint((4.0 * c / n) * res * det)
        g_obj = np.zeros_like(obj)
        ny, nx = scene.grid.shape
        g_crop = g_psi * np.conj(probe)
        for (r, col), g in zip(scene.positions_px[indices], g_crop):
            g_obj[r:r + ny, col:col + nx] += g
        g_probe = np.sum(g_psi * np.conj(crops), axis=0) if with_probe else None
        return sq_sums, g_obj, g_probe


@dataclass(frozen=True)
class LossGradient:
    report: LossReport
    object: np.ndarray
    probe: object = None


def loss_gradient(scene, dataset, gamma, with_probe=False):
    """Full-batch loss and packed gradients at the scene's object/probe.

    Returns
    -------
    LossGradient
        ``object`` (and ``probe`` when requested) hold ``dL/dRe + 1j dL/dIm``.
    """
    if not 0 <= gamma <= 1:
        raise ValidationError(f"gamma must lie in [0, 1], got {gamma}")
    objective = _Objective(scene, dataset)
    idx = np.arange(objective.n_positions)
    sq, g_obj, g_probe = objective(scene.object.values, scene.probe.values,
                                   _sensor_weights(scene.sensors, gamma), idx, with_probe)
    report = _summarize(0, gamma, scene.sensors, sq, objective.n_positions)
    return LossGradient(report, g_obj, g_probe)


def adam_step(params, grads, state, config, learning_rate=None):
    """One bias-corrected Adam update.

    Real and imaginary parts are updated independently, each with its own
    second-moment estimate.

    Returns
    -------
    (ndarray, OptimizerState)
    """
    params = np.asarray(params)
    grads = np.asarray(grads)
    if params.shape != grads.shape:
        raise ValidationError(f"params {params.shape} and grads {grads.shape} differ in shape")
    lr = config.learning_rate if learning_rate is None else learning_rate
    b1, b2, eps = config.adam_beta1, config.adam_beta2, config.adam_epsilon
    t = state.t + 1
    m = b1 * state.m + (1 - b1) * grads
    v_re = b2 * state.v_re + (1 - b2) * grads.real ** 2
    v_im = b2 * state.v_im + (1 - b2) * grads.imag ** 2
    m_hat = m / (1 - b1 ** t)
    c2 = 1 - b2 ** t
    step = m_hat.real / (np.sqrt(v_re / c2) + eps)
    if np.iscomplexobj(params) or np.iscomplexobj(grads):
        step = step + 1j * (m_hat.imag / (np.sqrt(v_im / c2) + eps))
    return params - lr * step, OptimizerState(m, v_re, v_im, t)


@dataclass
class ReconstructionResult:
    object: ComplexField
    probe: ComplexField
    history: list


def reconstruct(dataset, initial_scene, config, callback=None):
    """Run the Adam reconstruction.

    Parameters
    ----------
    dataset : Dataset
    initial_scene : SceneModel
        Supplies the probe, the initial object guess and the geometry.
    config : ReconstructionConfig
    callback : callable, optional
        Called as ``callback(report, object_values)`` after each epoch.

    Returns
    -------
    ReconstructionResult
        The per-epoch loss terms are accumulated over the mini-batches of
        the epoch, each evaluated before its update.

    Raises
    ------
    NumericalError
        If the loss or the parameters become non-finite.
    """
    objective = _Objective(initial_scene, dataset)
    rng = np.random.default_rng(config.rng_seed)
    obj = np.array(initial_scene.object.values, dtype=np.complex128)
    if config.init_noise > 0:
        obj = obj + config.init_noise * (rng.standard_normal(obj.shape)
                                         + 1j * rng.standard_normal(obj.shape)) / np.sqrt(2)
    probe = np.array(initial_scene.probe.values, dtype=np.complex128)
    s_obj = OptimizerState.zeros_like(obj)
    s_probe = OptimizerState.zeros_like(probe)
    n = objective.n_positions
    batch = n if config.batch_size is None else min(int(config.batch_size), n)
    history = []
    for epoch in range(config.epochs):
        gamma = config.gamma_at(epoch)
        if config.reset_optimizer_at_switch and epoch == config.gamma_switch_epoch and epoch > 0:
            s_obj = OptimizerState.zeros_like(obj)
            s_probe = OptimizerState.zeros_like(probe)
        lr = config.learning_rate_at(epoch)
        weights = _sensor_weights(initial_scene.sensors, gamma)
        order = rng.permutation(n) if batch < n else np.arange(n)
        totals = [None] * len(weights)
        for start in range(0, n, batch):
            idx = order[start:start + batch]
            sq, g_obj, g_probe = objective(obj, probe, weights, idx, config.optimize_probe)
            totals = [None if s is None else (t or 0.0) + s for t, s in zip(totals, sq)]
            obj, s_obj = adam_step(obj, g_obj, s_obj, config, lr)
            if config.optimize_probe:
                probe, s_probe = adam_step(probe, g_probe, s_probe, config, lr)
        report = _summarize(epoch, gamma, initial_scene.sensors, totals, n)
        if not np.isfinite(report.loss) or not np.all(np.isfinite(obj)):
            raise NumericalError(f"non-finite loss at epoch {epoch}", epoch=epoch)
        history.append(report)
        if callback is not None:
            callback(report, obj)
    return ReconstructionResult(ComplexField(initial_scene.object.grid, obj),
                                ComplexField(initial_scene.grid, probe), history)


def format_loss_table(history):
    """Tab-separated ``epoch, mse_on, mse_off, gamma, loss`` rows."""
    rows = ["epoch\tmse_on\tmse_off\tgamma\tloss"]
    for r in history:
        rows.append(f"{r.epoch}\t{r.mse_on:.12g}\t{r.mse_off:.12g}\t{r.gamma:.6g}\t{r.loss:.12g}")
    return "\n".join(rows) + "\n"
