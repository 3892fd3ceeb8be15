"""
Similarity and distance measures used by the detector and its baselines.

All measures return a plain float. For the cosine family larger means closer;
for manhattan and euclidean smaller means closer. The `*_to_columns` forms
score one vector against every column of a matrix and back the KNN baselines.
"""
import numpy as np
from scipy.spatial.distance import cdist
from sklearn.metrics.pairwise import cosine_similarity, manhattan_distances

from core.exceptions import DimensionMismatchError, WhitenedNullSpaceError, ZeroVectorError
from core.services.linalg import Mat, Vec, WhiteningMatrix, as_vec


def _pair(u, v) -> tuple[Vec, Vec]:
    u = as_vec(u)
    v = as_vec(v)
    if u.shape[0] != v.shape[0]:
        raise DimensionMismatchError(f"vector lengths differ: {u.shape[0]} vs {v.shape[0]}")
    return u, v


def _cosine_of(a: Vec, b: Vec, norm_a: float, norm_b: float) -> float:
    return float(np.dot(a, b) / (norm_a * norm_b))


def projected_cosine(a: Vec, b: Vec, operands=("u", "v")) -> float:
    """Cosine of two vectors already projected through W^t."""
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0:
        raise WhitenedNullSpaceError(operands[0])
    if norm_b == 0.0:
        raise WhitenedNullSpaceError(operands[1])
    return _cosine_of(a, b, norm_a, norm_b)


def whitened_cosine(u: Vec, v: Vec, w: WhiteningMatrix) -> float:
    """
    (W^t u)^t (W^t v) / (||W^t u|| ||W^t v||), evaluated on the k-dimensional
    projections; Sigma^-1 is never formed.
    """
    u, v = _pair(u, v)
    if u.shape[0] != w.rows:
        raise DimensionMismatchError(f"vectors have length {u.shape[0]}, whitening expects {w.rows}")
    return projected_cosine(w.project(u), w.project(v))


def cosine_to_columns(x: Vec, columns: Mat) -> np.ndarray:
    """Cosine of x with every column; zero vectors must be rejected by the caller."""
    return cosine_similarity(x[np.newaxis, :], columns.T)[0]


def manhattan_to_columns(x: Vec, columns: Mat) -> np.ndarray:
    return manhattan_distances(x[np.newaxis, :], columns.T)[0]


def euclidean_to_columns(x: Vec, columns: Mat) -> np.ndarray:
    # cdist sums squared differences, so identical vectors are exactly 0 at any d
    return cdist(x[np.newaxis, :], columns.T, metric="euclidean")[0]


def cosine(u: Vec, v: Vec) -> float:
    u, v = _pair(u, v)
    if not np.any(u) or not np.any(v):
        raise ZeroVectorError("cosine similarity is undefined for a zero vector")
    return float(cosine_to_columns(u, v[:, np.newaxis])[0])


def manhattan(u: Vec, v: Vec) -> float:
    u, v = _pair(u, v)
    return float(manhattan_to_columns(u, v[:, np.newaxis])[0])


def euclidean(u: Vec, v: Vec) -> float:
    u, v = _pair(u, v)
    return float(euclidean_to_columns(u, v[:, np.newaxis])[0])
