"""
Numerical self-checks run by `manage.py selftest`.

Each check compares the production path against a brute-force reference on
seeded random problems and returns a CheckResult. The transcript depends
only on the seed.
"""
import logging
from dataclasses import dataclass

import numpy as np

from core.schemas import TruncationPolicy
from core.services import oracles
from core.services.classifiers import predict, train_whitened_cosine
from core.services.evaluation import ConfusionMatrix, metrics
from core.services.linalg import (
    EigenSystem,
    center_columns,
    column_mean,
    covariance_unbiased,
    pca_gram_trick,
    whitening_matrix,
)
from core.services.similarity import whitened_cosine

logger = logging.getLogger(__name__)

EIGENVALUE_RTOL = 1e-8
EIGENVECTOR_ATOL = 1e-6
WHITENING_ATOL = 1e-6
INVERSE_FORM_ATOL = 1e-6
SPECTRAL_GAP = 1e-6
TIE_MARGIN = 1e-9


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def random_centered(rng, d, c) -> np.ndarray:
    x = rng.standard_normal((d, c)) * rng.uniform(0.5, 3.0, size=(d, 1))
    return center_columns(x, column_mean(x))


def _gram_spectrum(x_centered, perturb) -> EigenSystem:
    es = pca_gram_trick(x_centered)
    if perturb:
        es = EigenSystem(values=es.values * (1.0 + perturb), vectors=es.vectors)
    return es


def check_gram_vs_direct(seed: int, trials: int = 120, perturb: float = 0.0) -> CheckResult:
    rng = np.random.default_rng([seed, 1])
    worst_value = 0.0
    worst_vector = 0.0
    for _ in range(trials):
        d = int(rng.integers(1, 65))
        c = int(rng.integers(2, 17))
        x_centered = random_centered(rng, d, c)
        es = _gram_spectrum(x_centered, perturb)
        direct_values, direct_vectors = oracles.direct_spectrum(oracles.direct_covariance(x_centered))
        if direct_values.shape[0] != es.rank:
            return CheckResult("gram-vs-direct", False, f"rank {es.rank} != direct rank {direct_values.shape[0]} (d={d}, c={c})")
        worst_value = max(worst_value, float(np.max(np.abs(es.values - direct_values) / direct_values)))
        gaps = np.abs(np.diff(direct_values)) / direct_values[0]
        if gaps.size == 0 or gaps.min() > SPECTRAL_GAP:
            signs = np.sign(np.sum(es.vectors * direct_vectors, axis=0))
            worst_vector = max(worst_vector, float(np.max(np.abs(es.vectors * signs - direct_vectors))))
    passed = worst_value <= EIGENVALUE_RTOL and worst_vector <= EIGENVECTOR_ATOL
    return CheckResult(
        "gram-vs-direct",
        passed,
        f"{trials} matrices, max eigenvalue rel err {worst_value:.1e}, max eigenvector err {worst_vector:.1e}",
    )


def check_whitening_identity(seed: int, trials: int = 25) -> CheckResult:
    rng = np.random.default_rng([seed, 2])
    worst = 0.0
    for _ in range(trials):
        d = int(rng.integers(2, 33))
        c = int(rng.integers(3, 25))
        x_centered = random_centered(rng, d, c)
        w = whitening_matrix(pca_gram_trick(x_centered)).w
        sigma = covariance_unbiased(x_centered)
        worst = max(worst, float(np.max(np.abs(w.T @ sigma @ w - np.eye(w.shape[1])))))
    return CheckResult("whitening-identity", worst <= WHITENING_ATOL, f"{trials} training sets, max |W^t S W - I| {worst:.1e}")


def check_inverse_form(seed: int, trials: int = 25) -> CheckResult:
    rng = np.random.default_rng([seed, 3])
    worst = 0.0
    for _ in range(trials):
        d = int(rng.integers(2, 21))
        c = d + int(rng.integers(5, 20))
        x_centered = random_centered(rng, d, c)
        w = whitening_matrix(pca_gram_trick(x_centered))
        sigma = covariance_unbiased(x_centered)
        u, v = rng.standard_normal(d), rng.standard_normal(d)
        expected = oracles.inverse_form_whitened_cosine(u, v, w.w, sigma)
        worst = max(worst, abs(whitened_cosine(u, v, w) - expected))
    return CheckResult("projected-vs-inverse-form", worst <= INVERSE_FORM_ATOL, f"{trials} full-rank instances, max diff {worst:.1e}")


def check_detector_oracle(seed: int, trials: int = 60, queries: int = 6) -> CheckResult:
    rng = np.random.default_rng([seed, 4])
    compared = 0
    for _ in range(trials):
        d = int(rng.integers(2, 11))
        n = int(rng.integers(1, 5))
        m = int(rng.integers(1, 9 - n))
        shift = rng.standard_normal(d)
        x_normal = rng.standard_normal((d, n)) + shift[:, np.newaxis]
        x_rosacea = rng.standard_normal((d, m)) - shift[:, np.newaxis]
        tests = rng.standard_normal((d, queries)) * 2.0
        model = train_whitened_cosine(x_normal, x_rosacea, TruncationPolicy(rel_tol=oracles.RELATIVE_FLOOR))
        expected = oracles.brute_force_detector(x_normal, x_rosacea, tests)
        for column, (label, sim_normal, sim_rosacea) in enumerate(expected):
            if abs(sim_normal - sim_rosacea) < TIE_MARGIN:
                continue
            got = predict(model, tests[:, column])
            compared += 1
            if got.label != label:
                return CheckResult(
                    "detector-vs-brute-force", False,
                    f"label {got.label} != {label} (d={d}, n={n}, m={m}, query {column})",
                )
    return CheckResult("detector-vs-brute-force", True, f"{trials} instances, {compared} queries agree")


def check_metric_arithmetic() -> CheckResult:
    report = metrics(ConfusionMatrix(tp=48, tn=150, fp=0, fn=2))
    got = tuple(round(value, 2) for value in (report.accuracy, report.recall, report.precision, report.f1))
    expected = (0.99, 0.96, 1.0, 0.98)
    passed = got == expected and abs(report.f1 - 0.97959) < 1e-5
    return CheckResult("metric-arithmetic", passed, f"tp=48 tn=150 fp=0 fn=2 -> {got}")


def run_checks(seed: int = 0, perturb_eigenvalues: float = 0.0) -> list[CheckResult]:
    """`perturb_eigenvalues` scales the Gram spectrum by (1 + value); it exists to prove the checks can fail."""
    results = [
        check_gram_vs_direct(seed, perturb=perturb_eigenvalues),
        check_whitening_identity(seed),
        check_inverse_form(seed),
        check_detector_oracle(seed),
        check_metric_arithmetic(),
    ]
    for result in results:
        if not result.passed:
            logger.error(f"Self-test {result.name} failed: {result.detail}")
    return results
