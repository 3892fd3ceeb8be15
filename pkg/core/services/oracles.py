"""
Brute-force reference implementations for small problems.

These materialize the d x d covariance, decompose it directly with
numpy.linalg.eigh and apply the formulas literally. They share no code with
the production path beyond numpy, so agreement between the two is evidence
that the Gram-matrix route and the projected similarity are right.
"""
import numpy as np

from core.schemas import Label

RELATIVE_FLOOR = 1e-10


def direct_covariance(x_centered) -> np.ndarray:
    x_centered = np.asarray(x_centered, dtype=np.float64)
    return x_centered @ x_centered.T / (x_centered.shape[1] - 1)


def direct_spectrum(sigma) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of sigma above RELATIVE_FLOOR * lambda_max, in descending order."""
    values, vectors = np.linalg.eigh(sigma)
    values, vectors = values[::-1], vectors[:, ::-1]
    keep = values > RELATIVE_FLOOR * values[0]
    return values[keep], vectors[:, keep]


def direct_whitening(x_normal, x_rosacea) -> tuple[np.ndarray, np.ndarray]:
    """(W, Sigma) for the pooled training data, W = Phi Lambda^(-1/2)."""
    x = np.hstack([x_normal, x_rosacea]).astype(np.float64)
    x = x - x.mean(axis=1, keepdims=True)
    sigma = direct_covariance(x)
    values, vectors = direct_spectrum(sigma)
    return vectors / np.sqrt(values), sigma


def literal_whitened_cosine(u, v, w) -> float:
    a = w.T @ u
    b = w.T @ v
    return float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))


def inverse_form_whitened_cosine(u, v, w, sigma) -> float:
    """u^t Sigma^-1 v / (||W^t u|| ||W^t v||) with an explicit inverse; sigma must be full rank."""
    return float(u @ np.linalg.inv(sigma) @ v / (np.linalg.norm(w.T @ u) * np.linalg.norm(w.T @ v)))


def brute_force_detector(x_normal, x_rosacea, queries) -> list[tuple[Label, float, float]]:
    """
    Train and classify every column of `queries` with the formulas written out:
    raw class means, covariance from grand-mean-centered data, strict < for Rosacea.
    """
    x_normal = np.asarray(x_normal, dtype=np.float64)
    x_rosacea = np.asarray(x_rosacea, dtype=np.float64)
    mean_normal = x_normal.sum(axis=1) / x_normal.shape[1]
    mean_rosacea = x_rosacea.sum(axis=1) / x_rosacea.shape[1]
    w, _ = direct_whitening(x_normal, x_rosacea)

    results = []
    for query in np.asarray(queries, dtype=np.float64).T:
        sim_normal = literal_whitened_cosine(query, mean_normal, w)
        sim_rosacea = literal_whitened_cosine(query, mean_rosacea, w)
        label = Label.ROSACEA if sim_normal < sim_rosacea else Label.NORMAL
        results.append((label, sim_normal, sim_rosacea))
    return results


def brute_force_knn(x, labels, query, k=1) -> Label:
    """KNN-L2 by explicit sorting; equal distances keep the lower index."""
    distances = np.sqrt(((np.asarray(x) - np.asarray(query)[:, np.newaxis]) ** 2).sum(axis=0))
    order = sorted(range(len(labels)), key=lambda i: (distances[i], i))[:k]
    rosacea = sum(1 for i in order if Label(labels[i]) == Label.ROSACEA)
    return Label.ROSACEA if rosacea > k - rosacea else Label.NORMAL
