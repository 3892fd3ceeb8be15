"""
Two-class detectors: the whitened-cosine nearest-class-mean detector and the
KNN / PCA baselines it is compared against.

Ties always resolve to Normal: the detector answers Rosacea only when the
query is strictly more similar to the rosacea mean, and KNN votes follow the
same rule.
"""
import logging
from dataclasses import dataclass
from enum import StrEnum
from functools import cached_property

import numpy as np

from core.exceptions import (
    DimensionMismatchError,
    EmptySampleSetError,
    ParameterError,
    WhitenedNullSpaceError,
    ZeroVectorError,
)
from core.schemas import Label, PreprocessSpec, TruncationPolicy
from core.services.linalg import (
    Mat,
    Vec,
    WhiteningMatrix,
    as_mat,
    as_vec,
    center_columns,
    column_mean,
    components_for_variance,
    pca_gram_trick,
    whitening_matrix,
)
from core.services.similarity import (
    cosine_to_columns,
    euclidean,
    euclidean_to_columns,
    manhattan_to_columns,
    projected_cosine,
)
from core.utils import map_ordered

logger = logging.getLogger(__name__)


class KnnMetric(StrEnum):
    L1 = "l1"
    L2 = "l2"
    COSINE = "cosine"


class PcaHead(StrEnum):
    KNN_L2 = "knn-l2"
    NEAREST_MEAN = "nearest-mean"


@dataclass(frozen=True)
class Prediction:
    """
    label plus the per-class scores it was derived from. For the whitened-cosine
    detector the scores are similarities; for KNN they are the mean metric value of
    each class among the k neighbours (NaN when a class has none); for the PCA
    nearest-mean head they are L2 distances to the projected class means.
    """

    label: Label
    sim_normal: float
    sim_rosacea: float


def decide(sim_normal: float, sim_rosacea: float) -> Label:
    if sim_normal < sim_rosacea:
        return Label.ROSACEA
    return Label.NORMAL


def _split_classes(x_normal, x_rosacea) -> tuple[Mat, Mat]:
    x_normal = as_mat(x_normal)
    x_rosacea = as_mat(x_rosacea)
    if x_normal.shape[0] != x_rosacea.shape[0]:
        raise DimensionMismatchError(
            f"normal samples have {x_normal.shape[0]} rows, rosacea samples have {x_rosacea.shape[0]}"
        )
    if x_normal.shape[1] < 1 or x_rosacea.shape[1] < 1:
        raise EmptySampleSetError("both classes need at least one training sample")
    return x_normal, x_rosacea


def _check_query(x, d: int) -> Vec:
    x = as_vec(x)
    if x.shape[0] != d:
        raise DimensionMismatchError(f"query has length {x.shape[0]}, model expects {d}")
    return x


# Whitened cosine detector

@dataclass(frozen=True)
class WhitenedCosineModel:
    grand_mean: Vec
    mean_normal: Vec
    mean_rosacea: Vec
    whitening: WhiteningMatrix
    train_counts: tuple[int, int]
    preprocess: PreprocessSpec | None = None

    @property
    def dimension(self) -> int:
        return int(self.grand_mean.shape[0])

    @cached_property
    def _projected_means(self) -> dict[bool, tuple[Vec, Vec]]:
        return {}

    def projected_means(self, center: bool) -> tuple[Vec, Vec]:
        cache = self._projected_means
        if center not in cache:
            mean_normal, mean_rosacea = self.mean_normal, self.mean_rosacea
            if center:
                mean_normal = mean_normal - self.grand_mean
                mean_rosacea = mean_rosacea - self.grand_mean
            cache[center] = (self.whitening.project(mean_normal), self.whitening.project(mean_rosacea))
        return cache[center]

    def predict(self, x: Vec, center: bool = False) -> Prediction:
        return predict(self, x, center=center)


def train_whitened_cosine(
    x_normal: Mat,
    x_rosacea: Mat,
    policy: TruncationPolicy | None = None,
    preprocess: PreprocessSpec | None = None,
) -> WhitenedCosineModel:
    x_normal, x_rosacea = _split_classes(x_normal, x_rosacea)
    n, m = x_normal.shape[1], x_rosacea.shape[1]

    x = np.concatenate([x_normal, x_rosacea], axis=1)
    mean_normal = column_mean(x_normal)
    mean_rosacea = column_mean(x_rosacea)
    grand_mean = column_mean(x)
    x_centered = center_columns(x, grand_mean)
    del x

    spectrum = pca_gram_trick(x_centered, policy)
    whitening = whitening_matrix(spectrum, policy)
    logger.info(
        f"Trained whitened cosine detector: d={x_centered.shape[0]}, n={n}, m={m}, "
        f"retained rank {whitening.retained_rank}"
    )
    return WhitenedCosineModel(
        grand_mean=grand_mean,
        mean_normal=mean_normal,
        mean_rosacea=mean_rosacea,
        whitening=whitening,
        train_counts=(n, m),
        preprocess=preprocess,
    )


def predict(model: WhitenedCosineModel, x: Vec, center: bool = False) -> Prediction:
    """
    Compare the query with both class means under whitened cosine similarity.
    The means enter raw unless `center` is set, in which case query and means are
    shifted by the grand mean first.
    """
    x = _check_query(x, model.dimension)
    if center:
        x = x - model.grand_mean
    query = model.whitening.project(x)
    mean_normal, mean_rosacea = model.projected_means(center)
    try:
        sim_normal = projected_cosine(query, mean_normal, operands=("query", "mean_normal"))
        sim_rosacea = projected_cosine(query, mean_rosacea, operands=("query", "mean_rosacea"))
    except WhitenedNullSpaceError as exc:
        logger.warning(f"Whitened cosine undefined: {exc}")
        raise
    return Prediction(label=decide(sim_normal, sim_rosacea), sim_normal=sim_normal, sim_rosacea=sim_rosacea)


# KNN baselines

@dataclass(frozen=True)
class KnnModel:
    training_columns: Mat
    labels: tuple[Label, ...]
    k: int
    metric: KnnMetric
    preprocess: PreprocessSpec | None = None

    @property
    def dimension(self) -> int:
        return int(self.training_columns.shape[0])

    def predict(self, x: Vec) -> Prediction:
        return predict_knn(self, x)


def train_knn(
    x: Mat,
    labels,
    k: int = 1,
    metric: KnnMetric = KnnMetric.L2,
    preprocess: PreprocessSpec | None = None,
) -> KnnModel:
    """Lazy learner: validates and stores the training columns by value."""
    x = as_mat(x)
    labels = tuple(Label(label) for label in labels)
    metric = KnnMetric(metric)
    count = x.shape[1]
    if count == 0:
        raise EmptySampleSetError()
    if len(labels) != count:
        raise DimensionMismatchError(f"{len(labels)} labels for {count} samples")
    if k < 1 or k > count:
        raise ParameterError(f"k must be between 1 and {count}, got {k}")
    if k % 2 == 0:
        logger.warning(f"KNN with even k={k}; tied votes resolve to {Label.NORMAL}")
    if metric == KnnMetric.COSINE and np.any(np.linalg.norm(x, axis=0) == 0.0):
        raise ZeroVectorError("cosine metric cannot rank a zero training vector")
    return KnnModel(
        training_columns=np.array(x, order="C", copy=True), labels=labels, k=k, metric=metric, preprocess=preprocess,
    )


def _neighbour_scores(model: KnnModel, x: Vec) -> tuple[np.ndarray, np.ndarray]:
    """Metric value for every training column, and the stable rank order (ties keep lower index)."""
    if model.metric == KnnMetric.COSINE:
        if np.linalg.norm(x) == 0.0:
            raise ZeroVectorError("cosine metric cannot rank a zero query vector")
        scores = cosine_to_columns(x, model.training_columns)
        return scores, np.argsort(-scores, kind="stable")
    if model.metric == KnnMetric.L1:
        scores = manhattan_to_columns(x, model.training_columns)
    else:
        scores = euclidean_to_columns(x, model.training_columns)
    return scores, np.argsort(scores, kind="stable")


def predict_knn(model: KnnModel, x: Vec) -> Prediction:
    x = _check_query(x, model.dimension)
    scores, order = _neighbour_scores(model, x)
    neighbours = order[:model.k]

    per_class = {Label.NORMAL: [], Label.ROSACEA: []}
    for index in neighbours:
        per_class[model.labels[index]].append(float(scores[index]))
    normal_votes = len(per_class[Label.NORMAL])
    rosacea_votes = len(per_class[Label.ROSACEA])
    label = Label.ROSACEA if rosacea_votes > normal_votes else Label.NORMAL

    def mean_or_nan(values):
        return float(np.mean(values)) if values else float("nan")

    return Prediction(
        label=label,
        sim_normal=mean_or_nan(per_class[Label.NORMAL]),
        sim_rosacea=mean_or_nan(per_class[Label.ROSACEA]),
    )


# PCA pipelines

@dataclass(frozen=True)
class NearestMeanModel:
    """Nearest class mean under L2; scores are distances, so the smaller one wins."""

    mean_normal: Vec
    mean_rosacea: Vec

    def predict(self, z: Vec) -> Prediction:
        distance_normal = euclidean(z, self.mean_normal)
        distance_rosacea = euclidean(z, self.mean_rosacea)
        label = Label.ROSACEA if distance_rosacea < distance_normal else Label.NORMAL
        return Prediction(label=label, sim_normal=distance_normal, sim_rosacea=distance_rosacea)


@dataclass(frozen=True)
class PcaPipelineModel:
    projection: Mat
    grand_mean: Vec
    eigenvalues: Vec
    head: PcaHead
    inner: KnnModel | NearestMeanModel
    preprocess: PreprocessSpec | None = None

    @property
    def dimension(self) -> int:
        return int(self.projection.shape[0])

    @property
    def components(self) -> int:
        return int(self.projection.shape[1])

    def project(self, x: Vec) -> Vec:
        x = _check_query(x, self.dimension)
        return self.projection.T @ (x - self.grand_mean)

    def predict(self, x: Vec) -> Prediction:
        return self.inner.predict(self.project(x))


def train_pca_pipeline(
    x_normal: Mat,
    x_rosacea: Mat,
    k_components: int | None = None,
    head: PcaHead = PcaHead.KNN_L2,
    knn_k: int = 1,
    variance: float = 0.95,
    policy: TruncationPolicy | None = None,
    preprocess: PreprocessSpec | None = None,
) -> PcaPipelineModel:
    """
    Class-independent PCA on the pooled, centered training data followed by either
    KNN-L2 or nearest class mean in the projected space. Without `k_components` the
    smallest basis holding `variance` of the retained spectrum is used.
    """
    head = PcaHead(head)
    if k_components is not None and k_components < 1:
        raise ParameterError(f"component count must be at least 1, got {k_components}")
    x_normal, x_rosacea = _split_classes(x_normal, x_rosacea)
    n, m = x_normal.shape[1], x_rosacea.shape[1]

    x = np.concatenate([x_normal, x_rosacea], axis=1)
    grand_mean = column_mean(x)
    x_centered = center_columns(x, grand_mean)
    del x
    spectrum = pca_gram_trick(x_centered, policy)

    if k_components is None:
        k_components = components_for_variance(spectrum, variance)
    elif k_components > spectrum.rank:
        raise ParameterError(f"{k_components} components requested, only {spectrum.rank} available")

    projection = np.array(spectrum.vectors[:, :k_components], order="C", copy=True)
    projected = projection.T @ x_centered
    if head == PcaHead.KNN_L2:
        labels = [Label.NORMAL] * n + [Label.ROSACEA] * m
        inner = train_knn(projected, labels, k=knn_k, metric=KnnMetric.L2)
    else:
        inner = NearestMeanModel(
            mean_normal=column_mean(projected[:, :n]),
            mean_rosacea=column_mean(projected[:, n:]),
        )
    logger.info(f"Trained PCA pipeline ({head}) with {k_components} of {spectrum.rank} components")
    return PcaPipelineModel(
        projection=projection,
        grand_mean=grand_mean,
        eigenvalues=spectrum.values[:k_components].copy(),
        head=head,
        inner=inner,
        preprocess=preprocess,
    )


def predict_batch(model, x: Mat, **kwargs) -> list[Prediction]:
    """Predict every column of x; runs on the worker pool, results follow column order."""
    x = as_mat(x)
    return map_ordered(lambda column: model.predict(x[:, column], **kwargs), range(x.shape[1]))
