"""Classification losses, per-class restricted loss, and the reinforcing
gradient (the single-sample gradient taken at the model's own prediction)."""

from dataclasses import dataclass

import numpy as np

from . import network
from .errors import EmptyClassError, InvalidLabelError

LOSS_KINDS = ("cross_entropy", "nll")
REDUCTIONS = ("mean", "sum")


@dataclass(frozen=True)
class LossKind:
    """Loss selector: kind in {cross_entropy, nll}, reduction in {mean, sum}."""

    kind: str = "cross_entropy"
    reduction: str = "mean"

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"kind must be one of {LOSS_KINDS}")
        if self.reduction not in REDUCTIONS:
            raise ValueError(f"reduction must be one of {REDUCTIONS}")


def log_softmax(logits):
    z = np.asarray(logits, dtype=np.float64)
    z = z - np.max(z, axis=-1, keepdims=True)
    return z - np.log(np.sum(np.exp(z), axis=-1, keepdims=True))


def _logsumexp(logits):
    m = np.max(logits, axis=-1)
    return m + np.log(np.sum(np.exp(logits - m[:, None]), axis=-1))


def _per_sample_losses(spec, theta, x, y, kind):
    logits = network.forward(spec, theta, x)
    if logits.ndim == 1:
        logits = logits[None, :]
    y = np.asarray(y)
    if y.size and (np.any(y < 0) or np.any(y >= spec.n_classes)):
        raise InvalidLabelError(f"labels must lie in [0, {spec.n_classes})")
    y = y.astype(np.intp)
    rows = np.arange(len(y))
    if kind == "cross_entropy":
        return _logsumexp(logits) - logits[rows, y]
    # nll ablation: log-softmax treated as the network's log-probability head
    return -log_softmax(logits)[rows, y]


def batch_loss(spec, theta, data, loss=LossKind()):
    """Reduced classification loss of a labeled batch; always >= 0."""
    values = _per_sample_losses(spec, theta, data.X, data.y, loss.kind)
    total = float(np.sum(values))
    return total / len(values) if loss.reduction == "mean" else total


def per_class_loss(spec, theta, data, class_index, loss=LossKind()):
    """Batch loss restricted to samples whose true label equals class_index."""
    y = np.asarray(data.y)
    mask = y == class_index
    if not np.any(mask):
        raise EmptyClassError(f"no samples of class {class_index}")
    values = _per_sample_losses(spec, theta, np.asarray(data.X)[mask], y[mask], loss.kind)
    total = float(np.sum(values))
    return total / len(values) if loss.reduction == "mean" else total


def reinforcing_gradient(spec, theta, x, kind="cross_entropy"):
    """Gradient of the single-sample loss at the *predicted* label.

    Points along the parameter direction that strengthens whatever class the
    model currently favors at x; reduction is irrelevant for one sample.
    """
    x = np.asarray(x, dtype=np.float64)
    label = network.predict(spec, theta, x)
    return network.per_sample_gradients(spec, theta, x[None, :], [label])[0]


def reinforcing_gradients(spec, theta, x, kind="cross_entropy"):
    """Row-stacked reinforcing gradients for a batch of inputs, shape (n, p)."""
    x = np.asarray(x, dtype=np.float64)
    labels = network.predict(spec, theta, x)
    return network.per_sample_gradients(spec, theta, x, labels)
