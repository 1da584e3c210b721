"""Fully-connected classifier: forward pass, reverse-mode gradients, and the
layer-rescaling reparameterization.

Parameters live in one flat float64 vector laid out layer by layer as
(weights row-major, then bias); ``layer_layout`` describes the slots. All
functions here are pure and keep no hidden state.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidLabelError, ShapeMismatchError, UnsupportedArchitectureError

ACTIVATIONS = ("relu", "sigmoid")


@dataclass(frozen=True)
class NetworkSpec:
    """Architecture: layer widths (inputs first, classes last) and the hidden
    activation. The output layer emits raw logits."""

    layer_widths: tuple
    activation: str = "relu"

    def __post_init__(self):
        widths = tuple(int(w) for w in self.layer_widths)
        object.__setattr__(self, "layer_widths", widths)
        if len(widths) < 2:
            raise ValueError("need at least input and output widths")
        if any(w < 1 for w in widths):
            raise ValueError("all layer widths must be >= 1")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}")

    @property
    def n_inputs(self):
        return self.layer_widths[0]

    @property
    def n_classes(self):
        return self.layer_widths[-1]

    @property
    def n_hidden_layers(self):
        return len(self.layer_widths) - 2


def layer_layout(spec):
    """Per-layer slots in the flat parameter vector.

    Returns a tuple of (weight_offset, (out_width, in_width), bias_offset);
    slots are contiguous, non-overlapping, and cover [0, param_count).
    """
    slots = []
    offset = 0
    widths = spec.layer_widths
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        w_off = offset
        b_off = w_off + fan_in * fan_out
        slots.append((w_off, (fan_out, fan_in), b_off))
        offset = b_off + fan_out
    return tuple(slots)


def param_count(spec):
    widths = spec.layer_widths
    return sum(i * o + o for i, o in zip(widths[:-1], widths[1:]))


def unpack_params(spec, theta):
    """Views (W, b) per layer into the flat vector; W has shape (out, in)."""
    theta = _check_theta(spec, theta)
    layers = []
    for w_off, (out_w, in_w), b_off in layer_layout(spec):
        w = theta[w_off:b_off].reshape(out_w, in_w)
        b = theta[b_off:b_off + out_w]
        layers.append((w, b))
    return layers


def init_params(spec, seed):
    """Seeded uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) draw for every weight
    and bias; bit-identical for identical (spec, seed)."""
    rng = np.random.default_rng(seed)
    parts = []
    widths = spec.layer_widths
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        parts.append(rng.uniform(-bound, bound, size=fan_out * fan_in))
        parts.append(rng.uniform(-bound, bound, size=fan_out))
    return np.concatenate(parts)


def _check_theta(spec, theta):
    theta = np.asarray(theta, dtype=np.float64)
    if theta.ndim != 1 or theta.size != param_count(spec):
        raise ShapeMismatchError(
            f"parameter vector has size {theta.size}, spec needs {param_count(spec)}"
        )
    return theta


def _check_inputs(spec, x):
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != spec.n_inputs:
        raise ShapeMismatchError(
            f"inputs have width {x.shape[-1]}, spec needs {spec.n_inputs}"
        )
    return x, single


def _activate(z, activation):
    if activation == "relu":
        return np.maximum(z, 0.0)
    return 1.0 / (1.0 + np.exp(-z))


def _activation_slope(a, activation):
    # slope expressed through the activation value; relu slope at 0 is 0
    if activation == "relu":
        return (a > 0.0).astype(np.float64)
    return a * (1.0 - a)


def forward_trace(spec, theta, x):
    """Logits plus per-layer pre-activations and activations (backprop cache)."""
    x, single = _check_inputs(spec, x)
    layers = unpack_params(spec, theta)
    pre_acts = []
    acts = [x]
    a = x
    for i, (w, b) in enumerate(layers):
        z = a @ w.T + b
        pre_acts.append(z)
        if i < len(layers) - 1:
            a = _activate(z, spec.activation)
            acts.append(a)
    logits = pre_acts[-1]
    if single:
        return logits[0], [z[0] for z in pre_acts], [a[0] for a in acts]
    return logits, pre_acts, acts


def forward(spec, theta, x):
    """Raw logits for a single input (d,) or a batch (n, d)."""
    x, single = _check_inputs(spec, x)
    layers = unpack_params(spec, theta)
    a = x
    for i, (w, b) in enumerate(layers):
        z = a @ w.T + b
        a = _activate(z, spec.activation) if i < len(layers) - 1 else z
    return a[0] if single else a


def predict(spec, theta, x):
    """argmax class index; ties go to the smallest index."""
    logits = forward(spec, theta, x)
    return int(np.argmax(logits)) if logits.ndim == 1 else np.argmax(logits, axis=1)


def softmax(logits):
    z = np.asarray(logits, dtype=np.float64)
    z = z - np.max(z, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=-1, keepdims=True)


def _check_labels(y, n_classes):
    y = np.asarray(y)
    if y.size and (np.any(y < 0) or np.any(y >= n_classes)):
        raise InvalidLabelError(f"labels must lie in [0, {n_classes})")
    return y.astype(np.intp)


def _backward(spec, layers, acts, delta, out=None):
    """Accumulate parameter gradients from the logit-level error signal.

    ``delta`` is (n, C); returns the flat gradient (summed over the batch).
    """
    grad = np.zeros(param_count(spec)) if out is None else out
    slots = layer_layout(spec)
    for l in range(len(layers) - 1, -1, -1):
        w, _ = layers[l]
        w_off, (out_w, in_w), b_off = slots[l]
        grad[w_off:b_off] = (delta.T @ acts[l]).ravel()
        grad[b_off:b_off + out_w] = delta.sum(axis=0)
        if l > 0:
            delta = (delta @ w) * _activation_slope(acts[l], spec.activation)
    return grad


def grad_loss(spec, theta, batch, loss_kind="cross_entropy", reduction="mean"):
    """Exact reverse-accumulation gradient of the batch loss.

    ``batch`` is any object with X (n, d) and y (n,) attributes. Both loss
    kinds share the softmax-minus-onehot logit derivative.
    """
    x = np.asarray(batch.X, dtype=np.float64)
    y = _check_labels(batch.y, spec.n_classes)
    if x.shape[0] == 0:
        raise ShapeMismatchError("batch is empty")
    logits, _, acts = forward_trace(spec, theta, x)
    s = softmax(logits)
    s[np.arange(x.shape[0]), y] -= 1.0
    if reduction == "mean":
        s /= x.shape[0]
    elif reduction != "sum":
        raise ValueError(f"unknown reduction {reduction!r}")
    return _backward(spec, unpack_params(spec, theta), acts, s)


def per_sample_gradients(spec, theta, x, labels):
    """Gradients of each sample's own (unreduced) loss, stacked as (n, p).

    Vectorized backprop: the per-layer weight gradients are the outer
    products delta_i (x) a_i, assembled with einsum.
    """
    x, _ = _check_inputs(spec, x)
    labels = _check_labels(labels, spec.n_classes)
    n = x.shape[0]
    logits, _, acts = forward_trace(spec, theta, x)
    delta = softmax(logits)
    delta[np.arange(n), labels] -= 1.0
    layers = unpack_params(spec, theta)
    slots = layer_layout(spec)
    grads = np.empty((n, param_count(spec)))
    for l in range(len(layers) - 1, -1, -1):
        w, _ = layers[l]
        w_off, (out_w, in_w), b_off = slots[l]
        grads[:, w_off:b_off] = np.einsum("no,ni->noi", delta, acts[l]).reshape(n, -1)
        grads[:, b_off:b_off + out_w] = delta
        if l > 0:
            delta = (delta @ w) * _activation_slope(acts[l], spec.activation)
    return grads


def alpha_scale(theta, alpha, spec):
    """Rescale a one-hidden-layer ReLU net: first layer times alpha, second
    layer weights times 1/alpha, output bias untouched. Network outputs are
    unchanged for every input."""
    if spec.n_hidden_layers != 1 or spec.activation != "relu":
        raise UnsupportedArchitectureError(
            "alpha scaling needs exactly one hidden layer with relu activation"
        )
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    theta = _check_theta(spec, theta).copy()
    (w0_off, _, b0_off), (w1_off, _, b1_off) = layer_layout(spec)
    theta[w0_off:w1_off] *= alpha       # first-layer weights and bias
    theta[w1_off:b1_off] /= alpha       # second-layer weights only
    return theta
