"""Cosine alignment between reinforcing gradients and Hessian eigenvectors,
over training sets and 2-D input grids, plus the random-direction noise
floor and a grid-based boundary scan."""

from dataclasses import dataclass

import numpy as np

from . import losses, network
from .datasets import GridSpec
from .errors import WrongDimError

ZERO_GRAD_TOL = 1e-12
GRID_CHUNK = 2048


@dataclass(frozen=True)
class AlignmentMatrix:
    """(n, k) alignments; entry (s, i) pairs sample s with eigenvector
    eigen_indices[i]. Zero-gradient samples give all-zero rows."""

    values: np.ndarray
    eigen_indices: np.ndarray
    sample_ids: np.ndarray


@dataclass(frozen=True)
class GridField:
    """Per-node class predictions and per-eigenvector alignment fields on a
    2-D grid; values[i] is indexed [iy, ix]."""

    grid: GridSpec
    values: np.ndarray        # (k, resolution, resolution)
    predictions: np.ndarray   # (resolution, resolution)
    eigen_indices: np.ndarray


def _normalized_rows(grads):
    """Rows scaled to unit norm; zero rows stay zero (flagged separately)."""
    norms = np.linalg.norm(grads, axis=1)
    zero = norms < ZERO_GRAD_TOL
    safe = np.where(zero, 1.0, norms)
    return grads / safe[:, None], zero


def alignment(spec, theta, x, v, return_zero_flag=False):
    """cos(reinforcing gradient of x, v); exactly 0 for a vanished gradient."""
    g = losses.reinforcing_gradient(spec, theta, x)
    norm_g = np.linalg.norm(g)
    v = np.asarray(v, dtype=np.float64)
    if norm_g < ZERO_GRAD_TOL:
        return (0.0, True) if return_zero_flag else 0.0
    value = float(np.clip(np.dot(g, v) / (norm_g * np.linalg.norm(v)), -1.0, 1.0))
    return (value, False) if return_zero_flag else value


def _alignment_block(spec, theta, x, vectors):
    grads = losses.reinforcing_gradients(spec, theta, x)
    unit, zero = _normalized_rows(grads)
    values = np.clip(unit @ vectors, -1.0, 1.0)
    values[zero] = 0.0
    return values


def alignment_matrix(spec, theta, data, decomp, k):
    """Alignments of every training sample with the top k eigenvectors."""
    if k > decomp.dim:
        raise ValueError(f"k={k} exceeds decomposition dim {decomp.dim}")
    values = _alignment_block(spec, theta, data.X, decomp.top(k))
    return AlignmentMatrix(values, np.arange(k), np.arange(data.n))


def grid_alignment_field(spec, theta, decomp, k, grid):
    """Predictions and top-k alignments over every node of a 2-D grid."""
    if spec.n_inputs != 2:
        raise WrongDimError("grid fields require 2-D inputs")
    nodes = grid.nodes()
    res = grid.resolution
    vectors = decomp.top(k)
    values = np.empty((nodes.shape[0], k))
    predictions = np.empty(nodes.shape[0], dtype=np.intp)
    for start in range(0, nodes.shape[0], GRID_CHUNK):  # bound per-sample grad memory
        chunk = nodes[start:start + GRID_CHUNK]
        values[start:start + GRID_CHUNK] = _alignment_block(spec, theta, chunk, vectors)
        predictions[start:start + GRID_CHUNK] = network.predict(spec, theta, chunk)
    return GridField(
        grid,
        np.moveaxis(values.reshape(res, res, k), 2, 0),
        predictions.reshape(res, res),
        np.arange(k),
    )


def random_direction_epsilon(spec, theta, data, n_directions=5, seed=0,
                             aggregate="mean_of_max"):
    """Noise floor for alignment: cosine of training reinforcing gradients
    against seeded random unit directions in parameter space.

    mean_of_max (default): average over directions of the maximum |cos|
    attained by any sample. max_of_mean: the swapped aggregation.
    """
    if n_directions < 1:
        raise ValueError("n_directions must be >= 1")
    if aggregate not in ("mean_of_max", "max_of_mean"):
        raise ValueError("aggregate must be mean_of_max or max_of_mean")
    rng = np.random.default_rng(seed)
    grads = losses.reinforcing_gradients(spec, theta, data.X)
    unit, zero = _normalized_rows(grads)
    p = unit.shape[1]
    directions = rng.standard_normal((p, n_directions))
    directions /= np.linalg.norm(directions, axis=0)
    cosines = np.abs(unit @ directions)  # (n, R)
    cosines[zero] = 0.0
    if aggregate == "mean_of_max":
        return float(np.mean(np.max(cosines, axis=0)))
    return float(np.max(np.mean(cosines, axis=1)))


@dataclass(frozen=True)
class BoundaryScan:
    """Midpoints of grid edges whose endpoints are predicted differently.

    cell_count (the number of such edges) is a crude boundary-length and
    complexity proxy at fixed resolution.
    """

    points: np.ndarray
    cell_count: int
    grid: GridSpec

    def nearest_distance(self, query):
        """L2 distance from query to the closest detected boundary point."""
        query = np.asarray(query, dtype=np.float64)
        if self.points.shape[0] == 0:
            return float("inf")
        return float(np.min(np.linalg.norm(self.points - query, axis=1)))


def boundary_scan_2d(spec, theta, grid):
    """Scan a 2-D grid for prediction changes along both axes."""
    if spec.n_inputs != 2:
        raise WrongDimError("boundary scan requires 2-D inputs")
    nodes = grid.nodes()
    res = grid.resolution
    preds = network.predict(spec, theta, nodes).reshape(res, res)
    xs, ys = grid.axes()
    gx, gy = np.meshgrid(xs, ys)
    points = []
    horiz = preds[:, :-1] != preds[:, 1:]
    if np.any(horiz):
        mx = (gx[:, :-1] + gx[:, 1:]) / 2.0
        points.append(np.column_stack([mx[horiz], gy[:, :-1][horiz]]))
    vert = preds[:-1, :] != preds[1:, :]
    if np.any(vert):
        my = (gy[:-1, :] + gy[1:, :]) / 2.0
        points.append(np.column_stack([gx[:-1, :][vert], my[vert]]))
    stacked = np.vstack(points) if points else np.empty((0, 2))
    return BoundaryScan(stacked, stacked.shape[0], grid)
