"""
Dense linear algebra for the detector.

Samples are stored as columns: a d x c matrix holds c vectors of dimension d.
When d is far larger than c (786432 for 512x512x3 images) the d x d covariance
is never formed; `pca_gram_trick` works on the c x c Gram matrix X^t X instead.
`covariance_unbiased` and `eigh_symmetric` on d x d input exist for small
problems and reference checks.
"""
import logging
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy import linalg as sla

from core.exceptions import (
    DegenerateDataError,
    DimensionMismatchError,
    EigenConvergenceError,
    EmptySampleSetError,
    InsufficientSamplesError,
    NegativeEigenvalueError,
    NonFiniteValueError,
    NotSymmetricError,
)
from core.schemas import TruncationPolicy

logger = logging.getLogger(__name__)

Vec = NDArray[np.float64]
Mat = NDArray[np.float64]

SYMMETRY_TOL = 1e-10
NEGATIVE_EIGENVALUE_TOL = 1e-8


def as_vec(values) -> Vec:
    vec = np.asarray(values, dtype=np.float64)
    if vec.ndim != 1 or vec.size < 1:
        raise DimensionMismatchError(f"expected a non-empty 1-D vector, got shape {vec.shape}")
    if not np.all(np.isfinite(vec)):
        raise NonFiniteValueError("vector contains NaN or Inf")
    return vec


def as_mat(values) -> Mat:
    mat = np.asarray(values, dtype=np.float64)
    if mat.ndim != 2:
        raise DimensionMismatchError(f"expected a 2-D matrix, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise NonFiniteValueError("matrix contains NaN or Inf")
    return mat


@dataclass(frozen=True)
class EigenSystem:
    """Eigenvalues in descending order and the matching orthonormal eigenvectors as columns."""

    values: Vec
    vectors: Mat

    @property
    def rank(self) -> int:
        return int(self.values.shape[0])


@dataclass(frozen=True)
class WhiteningMatrix:
    """W = Phi Lambda^(-1/2) restricted to the retained eigenpairs."""

    w: Mat
    eigenvalues: Vec

    @property
    def rows(self) -> int:
        return int(self.w.shape[0])

    @property
    def retained_rank(self) -> int:
        return int(self.w.shape[1])

    def project(self, x: Vec) -> Vec:
        return self.w.T @ x


def column_mean(x: Mat) -> Vec:
    x = as_mat(x)
    if x.shape[0] == 0 or x.shape[1] == 0:
        raise EmptySampleSetError()
    return x.mean(axis=1)


def center_columns(x: Mat, mu: Vec) -> Mat:
    x = as_mat(x)
    mu = as_vec(mu)
    if mu.shape[0] != x.shape[0]:
        raise DimensionMismatchError(f"mean has length {mu.shape[0]}, matrix has {x.shape[0]} rows")
    return x - mu[:, np.newaxis]


def covariance_unbiased(x_centered: Mat) -> Mat:
    """Sigma = X X^t / (c - 1). Materializes d x d; only for small d."""
    x_centered = as_mat(x_centered)
    d, c = x_centered.shape
    if c < 2:
        raise InsufficientSamplesError()
    if d > c:
        logger.debug(f"Materializing a {d}x{d} covariance from {c} samples")
    return (x_centered @ x_centered.T) / (c - 1)


def eigh_symmetric(a: Mat) -> EigenSystem:
    a = as_mat(a)
    if a.shape[0] != a.shape[1]:
        raise NotSymmetricError(f"matrix is not square: {a.shape}")
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    asymmetry = float(np.max(np.abs(a - a.T))) if a.size else 0.0
    if asymmetry > SYMMETRY_TOL * scale:
        raise NotSymmetricError(f"matrix is not symmetric (max |A - A^t| = {asymmetry:.3e})")

    try:
        values, vectors = sla.eigh(a, check_finite=False)
    except sla.LinAlgError as exc:
        raise EigenConvergenceError(f"symmetric eigensolver did not converge: {exc}") from exc

    # LAPACK returns ascending order
    values = values[::-1].copy()
    vectors = vectors[:, ::-1].copy()

    lambda_max = float(np.max(np.abs(values))) if values.size else 0.0
    floor = -NEGATIVE_EIGENVALUE_TOL * lambda_max
    if values.size and values[-1] < floor:
        raise NegativeEigenvalueError(
            f"eigenvalue {values[-1]:.6e} is below {floor:.6e}; matrix is not positive semidefinite"
        )
    np.clip(values, 0.0, None, out=values)
    return EigenSystem(values=values, vectors=vectors)


def pca_gram_trick(x_centered: Mat, policy: TruncationPolicy | None = None) -> EigenSystem:
    """
    Eigenpairs of Sigma = X X^t / (c - 1) computed from the c x c matrix X^t X.

    For an eigenvector v of X^t X with eigenvalue lambda, X v is an eigenvector of
    X X^t with the same eigenvalue but norm sqrt(lambda), so every mapped vector is
    divided by ||X v||. Eigenvalues are scaled by 1 / (c - 1). Only eigenvalues above
    the truncation threshold are kept, and never more than c - 1 of them.
    """
    x_centered = as_mat(x_centered)
    policy = policy or TruncationPolicy()
    d, c = x_centered.shape
    if c < 2:
        raise InsufficientSamplesError()

    gram = x_centered.T @ x_centered
    gram = (gram + gram.T) / 2.0
    gram_es = eigh_symmetric(gram)

    values = gram_es.values / (c - 1)
    if values.size == 0 or values[0] <= 0.0:
        raise DegenerateDataError()
    keep = values > policy.threshold(float(values[0]))
    keep[c - 1:] = False
    if not keep.any():
        raise DegenerateDataError()

    mapped = x_centered @ gram_es.vectors[:, keep]
    norms = np.linalg.norm(mapped, axis=0)
    if np.any(norms == 0.0):
        raise DegenerateDataError()
    vectors = mapped / norms

    logger.info(f"Gram PCA: d={d}, c={c}, retained {int(keep.sum())} of {c} eigenpairs")
    return EigenSystem(values=values[keep], vectors=vectors)


def whitening_matrix(es: EigenSystem, policy: TruncationPolicy | None = None) -> WhiteningMatrix:
    policy = policy or TruncationPolicy()
    values = np.asarray(es.values, dtype=np.float64)
    if values.size == 0:
        raise DegenerateDataError("no eigenvalue survives truncation")
    keep = values > policy.threshold(float(values.max()))
    if not keep.any():
        raise DegenerateDataError("no eigenvalue survives truncation")
    w = np.ascontiguousarray(es.vectors[:, keep] / np.sqrt(values[keep]))
    return WhiteningMatrix(w=w, eigenvalues=values[keep].copy())


def explained_variance_ratio(es: EigenSystem) -> Vec:
    total = float(es.values.sum())
    if total <= 0.0:
        raise DegenerateDataError()
    return es.values / total


def components_for_variance(es: EigenSystem, fraction: float) -> int:
    """Smallest k whose leading eigenvalues hold at least `fraction` of the retained variance."""
    cumulative = np.cumsum(explained_variance_ratio(es))
    k = int(np.searchsorted(cumulative, fraction - 1e-12) + 1)
    return min(k, es.rank)
