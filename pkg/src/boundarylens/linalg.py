"""Dense vector/matrix primitives and a symmetric eigensolver with a
deterministic sign convention.

All arithmetic is 64-bit floating point. Values are immutable after
construction and safe to share across threads.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimMismatchError, NotSymmetricError, TooLargeError, ZeroVectorError

ZERO_NORM_TOL = 1e-12
SYMMETRY_TOL = 1e-9
DEFAULT_P_MAX = 5000


def cosine_similarity(a, b):
    """Cosine of the angle between two vectors, clamped to [-1, 1]."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimMismatchError(f"vector lengths differ: {a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na < ZERO_NORM_TOL or nb < ZERO_NORM_TOL:
        raise ZeroVectorError("cosine similarity undefined for a zero vector")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def check_symmetric(matrix, tol=SYMMETRY_TOL):
    """Raise NotSymmetricError unless |M - M^T| stays within the tolerance."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NotSymmetricError(f"expected a square matrix, got shape {m.shape}")
    bound = tol * (1.0 + np.max(np.abs(m))) if m.size else tol
    asym = np.max(np.abs(m - m.T)) if m.size else 0.0
    if asym > bound:
        raise NotSymmetricError(f"max asymmetry {asym:.3e} exceeds bound {bound:.3e}")
    return m


def fix_eigenvector_signs(vectors):
    """Flip eigenvector columns so the largest-magnitude entry is non-negative.

    Ties go to the smallest row index. Makes repeated decompositions of the
    same matrix bit-stable.
    """
    v = np.array(vectors, dtype=np.float64)
    lead = np.argmax(np.abs(v), axis=0)  # first occurrence wins ties
    flip = v[lead, np.arange(v.shape[1])] < 0
    v[:, flip] *= -1.0
    return v


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues in descending order with orthonormal eigenvector columns.

    Column i of ``eigenvectors`` pairs with ``eigenvalues[i]``. ``residual``
    is the largest ||M v_i - lambda_i v_i||_2 observed at construction.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residual: float

    @property
    def dim(self):
        return self.eigenvectors.shape[0]

    def top(self, k):
        """First k eigenvector columns as a (dim, k) array."""
        return self.eigenvectors[:, :k]


def eigh_symmetric(matrix, p_max=DEFAULT_P_MAX):
    """Full eigendecomposition of a symmetric matrix.

    Eigenvalues come out descending; eigenvector signs follow the
    largest-magnitude-entry-non-negative convention so identical inputs give
    bit-identical outputs.
    """
    m = check_symmetric(matrix)
    if m.shape[0] > p_max:
        raise TooLargeError(f"dim {m.shape[0]} exceeds p_max {p_max}")
    values, vectors = np.linalg.eigh(m)
    values = values[::-1].copy()
    vectors = fix_eigenvector_signs(vectors[:, ::-1])
    residual = float(np.max(np.linalg.norm(m @ vectors - vectors * values, axis=0))) if m.size else 0.0
    return SpectralDecomposition(values, vectors, residual)


def subspace_overlap(a, b, k):
    """Index-matched |cos| overlap of the top-k eigenvectors of two decompositions."""
    if a.dim != b.dim:
        raise DimMismatchError(f"decomposition dims differ: {a.dim} vs {b.dim}")
    if k > a.dim:
        raise DimMismatchError(f"k={k} exceeds dim {a.dim}")
    overlaps = np.abs(np.sum(a.eigenvectors[:, :k] * b.eigenvectors[:, :k], axis=0))
    return np.clip(overlaps, 0.0, 1.0)
