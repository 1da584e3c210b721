"""Generalization measure from eigenvector alignment counts, classical
flatness measures, and decision-boundary margin estimation."""

from dataclasses import dataclass, field

import numpy as np

from . import losses
from .alignment import alignment_matrix
from .errors import NoProgressError

LOW_CONFIDENCE_ALIGNMENT = 0.99


@dataclass(frozen=True)
class GeneralizationReport:
    """Alignment-count measure G with the classical measures it is compared
    against, plus the metadata needed to reproduce the run."""

    G: float
    epsilon: float
    mean_abs_alignment: np.ndarray
    trace: float
    lambda_max: float
    param_norm: float
    outlier_count: int
    metadata: dict = field(default_factory=dict)


@dataclass(frozen=True)
class MarginEstimate:
    """Smaller L2 distance from the optimized boundary point to the two
    extreme-alignment training samples."""

    x_b: np.ndarray
    x_t_min: np.ndarray
    x_t_max: np.ndarray
    d_min: float
    d_max: float
    margin: float
    achieved_alignment: float
    iterations: int
    low_confidence: bool


def generalization_measure(am, epsilon):
    """Mean absolute alignment per eigenvector and the fraction above epsilon.

    `am` must cover all p eigenvectors, otherwise the fraction is meaningless.
    """
    m = np.mean(np.abs(am.values), axis=0)
    return m, float(np.count_nonzero(m > epsilon) / m.size)


def classical_measures(decomp, theta):
    """(trace, lambda_max, ||theta||_2) of a converged model."""
    return (
        float(np.sum(decomp.eigenvalues)),
        float(decomp.eigenvalues[0]),
        float(np.linalg.norm(theta)),
    )


def select_extreme_samples(a1, data):
    """Indices of the samples with minimal and maximal signed top-eigenvector
    alignment; ties go to the smallest sample index."""
    a1 = np.asarray(a1)
    if a1.size < 2:
        raise ValueError("need at least two samples")
    return int(np.argmin(a1)), int(np.argmax(a1))


def data_bounds(x, expand=0.1):
    """Axis-aligned bounding box of the rows of x, widened per side by
    `expand` times the box extent."""
    lo = np.min(x, axis=0)
    hi = np.max(x, axis=0)
    pad = expand * (hi - lo)
    return lo - pad, hi + pad


def _abs_top_alignment(spec, theta, v1):
    v1 = np.asarray(v1, dtype=np.float64)
    v1 = v1 / np.linalg.norm(v1)

    def f(x):
        g = losses.reinforcing_gradient(spec, theta, x)
        norm = np.linalg.norm(g)
        if norm < 1e-12:
            return 0.0
        return abs(float(np.dot(g, v1))) / norm

    return f


@dataclass(frozen=True)
class BoundarySearchResult:
    x_b: np.ndarray
    achieved_alignment: float
    iterations: int


def find_boundary_point(spec, theta, v1, x_start, bounds, max_iter=500,
                        target=0.999, fd_step=1e-4, step_size=0.05):
    """Hill-climb |A_1(x)| over input coordinates toward the boundary.

    Ascends the finite-difference input gradient of the absolute
    top-eigenvector alignment with step halving on non-improvement, clipped
    to the bounds box. Stops at `target` alignment or `max_iter`. Raises
    NoProgressError when no step ever improved on the starting value.
    """
    lo, hi = (np.asarray(b, dtype=np.float64) for b in bounds)
    x = np.clip(np.asarray(x_start, dtype=np.float64), lo, hi)
    if not np.allclose(x, x_start):
        raise ValueError("x_start must lie within bounds")
    f = _abs_top_alignment(spec, theta, v1)
    best = f(x)
    start_value = best
    if best >= target:
        return BoundarySearchResult(x.copy(), best, 0)
    step = step_size
    iterations = 0
    improved = False
    d = x.size
    for _ in range(max_iter):
        iterations += 1
        grad = np.empty(d)
        for i in range(d):
            e = np.zeros(d)
            e[i] = fd_step
            grad[i] = (f(x + e) - f(x - e)) / (2.0 * fd_step)
        norm = np.linalg.norm(grad)
        if norm < 1e-14:
            break
        candidate = np.clip(x + step * grad / norm, lo, hi)
        value = f(candidate)
        if value > best:
            x, best, improved = candidate, value, True
            if best >= target:
                break
        else:
            step /= 2.0
            if step < 1e-9:
                break
    if not improved and best < target:
        raise NoProgressError(
            f"alignment stuck at {start_value:.4f} after {iterations} iterations",
            x_start=np.asarray(x_start, dtype=np.float64),
            achieved=start_value,
            iterations=iterations,
        )
    return BoundarySearchResult(x, best, iterations)


def estimate_margin(spec, theta, decomp, data, bounds=None, max_iter=500,
                    target=0.999):
    """Margin of the learned boundary from the extreme-alignment samples.

    The boundary point search starts at the midpoint of the two extremes and
    the margin is the smaller of the two distances to them. Estimates whose
    achieved alignment stays below 0.99 are flagged low-confidence.
    """
    am = alignment_matrix(spec, theta, data, decomp, k=1)
    i_min, i_max = select_extreme_samples(am.values[:, 0], data)
    x_t_min = data.X[i_min].copy()
    x_t_max = data.X[i_max].copy()
    if bounds is None:
        bounds = data_bounds(data.X)
    start = (x_t_min + x_t_max) / 2.0
    result = find_boundary_point(
        spec, theta, decomp.eigenvectors[:, 0], start, bounds,
        max_iter=max_iter, target=target,
    )
    d_min = float(np.linalg.norm(result.x_b - x_t_min))
    d_max = float(np.linalg.norm(result.x_b - x_t_max))
    return MarginEstimate(
        x_b=result.x_b,
        x_t_min=x_t_min,
        x_t_max=x_t_max,
        d_min=d_min,
        d_max=d_max,
        margin=min(d_min, d_max),
        achieved_alignment=result.achieved_alignment,
        iterations=result.iterations,
        low_confidence=result.achieved_alignment < LOW_CONFIDENCE_ALIGNMENT,
    )
