"""Mini-batch optimizers, the training loop, and initialization schemes
(normal, adversarial, large-norm, wide-margin).

Training is fully deterministic: all shuffling and label redraws come from
explicit seeds, and batches are index-sorted so a full batch reproduces the
dataset-order gradient bit for bit.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from . import datasets, losses, network
from .errors import AuxTrainingFailedError, DivergedError, UnknownKindError

OPTIMIZER_KINDS = ("sgd", "adam", "adamw", "rmsprop")
INIT_SCHEMES = ("normal", "adversarial", "large_norm", "wide_margin")


@dataclass(frozen=True)
class OptimizerConfig:
    kind: str = "sgd"
    learning_rate: float = 0.2
    batch_size: int = 64
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    rms_alpha: float = 0.99
    shuffle_seed: int = 0

    def __post_init__(self):
        if self.kind not in OPTIMIZER_KINDS:
            raise UnknownKindError(f"optimizer kind must be one of {OPTIMIZER_KINDS}")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass(frozen=True)
class StopCriteria:
    max_epochs: int = 5000
    loss_window: int = 20
    loss_tol: float = 1e-5
    require_full_train_accuracy: bool = True

    def __post_init__(self):
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")


@dataclass
class TrainReport:
    epochs_run: int
    final_loss: float
    final_train_accuracy: float
    loss_history: list
    checkpoint_epochs: list
    checkpoint_params: list


class _Sgd:
    def __init__(self, cfg):
        self.cfg = cfg

    def step(self, theta, grad):
        if self.cfg.weight_decay:
            grad = grad + self.cfg.weight_decay * theta
        return theta - self.cfg.learning_rate * grad


class _Adam:
    def __init__(self, cfg, p):
        self.cfg = cfg
        self.m = np.zeros(p)
        self.v = np.zeros(p)
        self.t = 0

    def step(self, theta, grad):
        cfg = self.cfg
        if cfg.weight_decay:
            grad = grad + cfg.weight_decay * theta
        self.t += 1
        self.m = cfg.beta1 * self.m + (1 - cfg.beta1) * grad
        self.v = cfg.beta2 * self.v + (1 - cfg.beta2) * grad**2
        m_hat = self.m / (1 - cfg.beta1**self.t)
        v_hat = self.v / (1 - cfg.beta2**self.t)
        return theta - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.eps)


class _AdamW:
    """Adam with decoupled decay: theta shrinks by lr * wd * theta before the
    Adam step, and the decay never enters the moment estimates."""

    def __init__(self, cfg, p):
        self.inner = _Adam(replace(cfg, weight_decay=0.0), p)
        self.cfg = cfg

    def step(self, theta, grad):
        theta = theta - self.cfg.learning_rate * self.cfg.weight_decay * theta
        return self.inner.step(theta, grad)


class _RmsProp:
    def __init__(self, cfg, p):
        self.cfg = cfg
        self.v = np.zeros(p)

    def step(self, theta, grad):
        cfg = self.cfg
        if cfg.weight_decay:
            grad = grad + cfg.weight_decay * theta
        self.v = cfg.rms_alpha * self.v + (1 - cfg.rms_alpha) * grad**2
        return theta - cfg.learning_rate * grad / (np.sqrt(self.v) + cfg.eps)


def make_optimizer(cfg, p):
    if cfg.kind == "sgd":
        return _Sgd(cfg)
    if cfg.kind == "adam":
        return _Adam(cfg, p)
    if cfg.kind == "adamw":
        return _AdamW(cfg, p)
    return _RmsProp(cfg, p)


def train_accuracy(spec, theta, data):
    return float(np.mean(network.predict(spec, theta, data.X) == data.y))


def train(spec, theta0, data, opt=OptimizerConfig(), stop=StopCriteria(),
          checkpoint_at=(), loss=losses.LossKind()):
    """Mini-batch training with seeded per-epoch shuffling.

    Stops once the accuracy requirement holds and the loss range over the
    last `loss_window` epochs drops below `loss_tol`, or at max_epochs.
    Checkpoint epoch 0 is the untouched initialization; later checkpoints
    are deep copies taken after that epoch's updates.
    """
    theta = network._check_theta(spec, theta0).copy()
    rng = np.random.default_rng(opt.shuffle_seed)
    optimizer = make_optimizer(opt, theta.size)
    wanted = set(int(e) for e in checkpoint_at)
    checkpoint_epochs, checkpoint_params = [], []
    if 0 in wanted:
        checkpoint_epochs.append(0)
        checkpoint_params.append(theta.copy())
    loss_history = []
    epochs_run = 0
    accuracy = train_accuracy(spec, theta, data)
    for epoch in range(1, stop.max_epochs + 1):
        order = rng.permutation(data.n)
        for start in range(0, data.n, opt.batch_size):
            batch_idx = np.sort(order[start:start + opt.batch_size])
            batch = data.take(batch_idx)
            grad = network.grad_loss(spec, theta, batch, loss.kind, loss.reduction)
            theta = optimizer.step(theta, grad)
        epoch_loss = losses.batch_loss(spec, theta, data, loss)
        if not np.isfinite(epoch_loss):
            raise DivergedError(f"loss became non-finite at epoch {epoch}")
        loss_history.append(epoch_loss)
        epochs_run = epoch
        accuracy = train_accuracy(spec, theta, data)
        if epoch in wanted:
            checkpoint_epochs.append(epoch)
            checkpoint_params.append(theta.copy())
        if len(loss_history) >= stop.loss_window:
            window = loss_history[-stop.loss_window:]
            plateau = max(window) - min(window) < stop.loss_tol
            if plateau and (accuracy == 1.0 or not stop.require_full_train_accuracy):
                break
    report = TrainReport(
        epochs_run=epochs_run,
        final_loss=loss_history[-1] if loss_history else losses.batch_loss(spec, theta, data, loss),
        final_train_accuracy=accuracy,
        loss_history=loss_history,
        checkpoint_epochs=checkpoint_epochs,
        checkpoint_params=checkpoint_params,
    )
    return theta, report


@dataclass(frozen=True)
class InitOptions:
    """Knobs for make_init; only the fields relevant to a scheme are read.

    The auxiliary fits (random-label memorization, pulled-in pretraining)
    run under their own optimizer and stop criteria; Adam memorizes random
    labels far faster than the SGD default at these scales.
    """

    target_norm: float = 100.0
    label_seed: int | None = None
    aux_optimizer: OptimizerConfig = field(
        default_factory=lambda: OptimizerConfig(kind="adam", learning_rate=0.01)
    )
    aux_stop: StopCriteria = field(default_factory=StopCriteria)
    pretrain_data: datasets.LabeledDataset | None = None
    pretrain_n_per_class: int = 100
    pretrain_seed: int = 0
    loss: losses.LossKind = field(default_factory=losses.LossKind)


def random_labels(n, n_classes, seed):
    """Uniform label redraw where sample i depends only on (seed, i), so the
    redraw is invariant to dataset ordering."""
    return np.array(
        [np.random.default_rng([seed, i]).integers(0, n_classes) for i in range(n)]
    )


def _fit_to_full_accuracy(spec, theta0, data, options, what):
    theta, report = train(
        spec, theta0, data, options.aux_optimizer, options.aux_stop, loss=options.loss
    )
    if report.final_train_accuracy < 1.0:
        raise AuxTrainingFailedError(
            f"{what} reached {report.final_train_accuracy:.3f} accuracy "
            f"after {report.epochs_run} epochs"
        )
    return theta


def make_init(scheme, spec, data, seed, options=InitOptions()):
    """Starting parameters for one of the four initialization schemes.

    normal:      seeded uniform fan-in initialization.
    adversarial: fit seeded random labels on the same inputs to 100%
                 accuracy and start from the resulting parameters.
    large_norm:  normal draw rescaled to ||theta|| = target_norm.
    wide_margin: pretrain to 100% on the pulled-in checkerboard variant.
    """
    if scheme not in INIT_SCHEMES:
        raise UnknownKindError(f"init scheme must be one of {INIT_SCHEMES}")
    theta0 = network.init_params(spec, seed)
    if scheme == "normal":
        return theta0
    if scheme == "large_norm":
        return theta0 * (options.target_norm / np.linalg.norm(theta0))
    if scheme == "adversarial":
        label_seed = seed if options.label_seed is None else options.label_seed
        shuffled = datasets.LabeledDataset(
            data.X, random_labels(data.n, spec.n_classes, label_seed),
            spec.n_classes, name=f"{data.name}_random_labels",
        )
        return _fit_to_full_accuracy(spec, theta0, shuffled, options, "random-label fit")
    pretrain = options.pretrain_data
    if pretrain is None:
        pretrain = datasets.gen_synthetic(
            "checkerboard_pulled_in", options.pretrain_n_per_class, options.pretrain_seed
        )
    return _fit_to_full_accuracy(spec, theta0, pretrain, options, "wide-margin pretraining")
