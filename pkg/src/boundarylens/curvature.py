"""Exact dense Hessian assembly via central differences of the analytic
gradient, gradient covariance, spectrum-outlier counting, and a second-order
Taylor residual check.

The `*_of` functions take a generic gradient/loss callable so they can be
certified against synthetic quadratic oracles; the spec-facing wrappers bind
them to the network training loss.
"""

from dataclasses import dataclass

import numpy as np

from . import losses, network
from .errors import NotSymmetricError, ShapeMismatchError, TooLargeError, ZeroVectorError

DEFAULT_P_MAX = 5000


@dataclass(frozen=True)
class CurvatureConfig:
    """Dense-Hessian settings. The difference step follows
    h = sqrt(machine epsilon) * (1 + ||theta||_2) / ||v||_2."""

    p_max: int = DEFAULT_P_MAX
    symmetrize: bool = True


def fd_step(theta_norm, v_norm):
    return np.sqrt(np.finfo(np.float64).eps) * (1.0 + theta_norm) / v_norm


def hvp_of(grad_fn, theta, v):
    """Hessian-vector product by central differencing of grad_fn."""
    theta = np.asarray(theta, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    v_norm = np.linalg.norm(v)
    if v_norm == 0.0:
        raise ZeroVectorError("hvp direction must be nonzero")
    h = fd_step(np.linalg.norm(theta), v_norm)
    return (grad_fn(theta + h * v) - grad_fn(theta - h * v)) / (2.0 * h)


def dense_hessian_of(grad_fn, theta, config=CurvatureConfig(), return_asymmetry=False):
    """Column-by-column Hessian: column j is hvp on basis vector e_j.

    The raw matrix is checked against max|M - M^T| <= 1e-5 * (1 + max|M|) and
    then projected to (M + M^T)/2 when config.symmetrize is set.
    """
    theta = np.asarray(theta, dtype=np.float64)
    p = theta.size
    if p > config.p_max:
        raise TooLargeError(f"p={p} exceeds p_max {config.p_max}")
    h = fd_step(np.linalg.norm(theta), 1.0)
    hessian = np.empty((p, p))
    basis = np.zeros(p)
    for j in range(p):
        basis[j] = h
        hessian[:, j] = grad_fn(theta + basis) - grad_fn(theta - basis)
        basis[j] = 0.0
    hessian /= 2.0 * h
    asymmetry = float(np.max(np.abs(hessian - hessian.T))) if p else 0.0
    bound = 1e-5 * (1.0 + np.max(np.abs(hessian))) if p else 1e-5
    if asymmetry > bound:
        raise NotSymmetricError(
            f"pre-symmetrization asymmetry {asymmetry:.3e} exceeds {bound:.3e}"
        )
    if config.symmetrize:
        hessian = (hessian + hessian.T) / 2.0
    return (hessian, asymmetry) if return_asymmetry else hessian


def taylor_residual_of(loss_fn, grad_fn, theta, direction, decomp):
    """Absolute second-order Taylor remainder of loss_fn along a unit step.

    With the eigen-expansion of the Hessian the quadratic term becomes
    (1/2) sum_i lambda_i <u, v_i>^2 for the unit direction u; the residual is
    exactly zero when loss_fn is quadratic.
    """
    theta = np.asarray(theta, dtype=np.float64)
    direction = np.asarray(direction, dtype=np.float64)
    norm = np.linalg.norm(direction)
    if norm < 1e-12:
        raise ZeroVectorError("taylor direction must be nonzero")
    u = direction / norm
    coeffs = decomp.eigenvectors.T @ u
    quadratic = 0.5 * float(np.sum(decomp.eigenvalues * coeffs**2))
    linear = float(np.dot(grad_fn(theta), u))
    return abs(float(loss_fn(theta + u)) - float(loss_fn(theta)) - linear - quadratic)


def _bound_grad(spec, data, loss):
    def grad_fn(theta):
        return network.grad_loss(spec, theta, data, loss.kind, loss.reduction)

    return grad_fn


def hvp(spec, theta, data, v, loss=losses.LossKind()):
    """H v for the batch-loss Hessian of the network; len(v) must equal p."""
    v = np.asarray(v, dtype=np.float64)
    if v.size != network.param_count(spec):
        raise ShapeMismatchError(
            f"direction has length {v.size}, parameters have {network.param_count(spec)}"
        )
    return hvp_of(_bound_grad(spec, data, loss), theta, v)


def dense_hessian(spec, theta, data, loss=losses.LossKind(),
                  config=CurvatureConfig(), return_asymmetry=False):
    """Full (p, p) Hessian of the training loss at theta."""
    return dense_hessian_of(
        _bound_grad(spec, data, loss),
        network._check_theta(spec, theta),
        config=config,
        return_asymmetry=return_asymmetry,
    )


def gradient_covariance(spec, theta, data, loss=losses.LossKind()):
    """(1/n) sum_i g_i g_i^T over single-sample gradients at the true labels;
    positive semidefinite by construction."""
    grads = network.per_sample_gradients(spec, theta, data.X, data.y)
    return (grads.T @ grads) / data.n


def taylor_residual(spec, theta, data, x, decomp, loss=losses.LossKind()):
    """Taylor remainder of the training loss along the normalized
    reinforcing gradient of the input x."""
    direction = losses.reinforcing_gradient(spec, theta, x)

    def loss_fn(t):
        return losses.batch_loss(spec, t, data, loss)

    return taylor_residual_of(loss_fn, _bound_grad(spec, data, loss), theta, direction, decomp)


def spectrum_outliers(eigenvalues, n_classes):
    """Count leading eigenvalues separated from the bulk.

    Picks k in [1, min(3 * n_classes, p - 1)] maximizing the descending gap
    lambda_k - lambda_{k+1}; ties go to the smallest k.
    """
    lam = np.asarray(eigenvalues, dtype=np.float64)
    if lam.size < 2:
        raise ValueError("need at least two eigenvalues")
    k_hi = min(3 * int(n_classes), lam.size - 1)
    gaps = lam[:k_hi] - lam[1:k_hi + 1]
    return int(np.argmax(gaps)) + 1
