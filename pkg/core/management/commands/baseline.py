import logging

import numpy as np

from core.management.base import DetectorCommand, positive_int
from core.schemas import Label, RunConfig
from core.services.classifiers import (
    KnnMetric,
    PcaHead,
    train_knn,
    train_pca_pipeline,
    train_whitened_cosine,
)
from core.services.dataset import split_by_label
from core.services.evaluation import METHOD_NAMES, evaluate_model, render_report
from core.services.model_file import save_model

logger = logging.getLogger(__name__)

KNN_METRICS = {"knn-l1": KnnMetric.L1, "knn-l2": KnnMetric.L2, "knn-cos": KnnMetric.COSINE}
PCA_HEADS = {"pca-knn": PcaHead.KNN_L2, "pca-mean": PcaHead.NEAREST_MEAN}
ALL_METHODS = ("knn-l1", "knn-l2", "knn-cos", "pca-knn", "pca-mean", "whitened-cosine")


def train_method(key: str, x_normal, x_rosacea, config: RunConfig, preprocess=None):
    if key in KNN_METRICS:
        x = np.concatenate([x_normal, x_rosacea], axis=1)
        labels = [Label.NORMAL] * x_normal.shape[1] + [Label.ROSACEA] * x_rosacea.shape[1]
        return train_knn(x, labels, k=config.knn_k, metric=KNN_METRICS[key], preprocess=preprocess)
    if key in PCA_HEADS:
        return train_pca_pipeline(
            x_normal,
            x_rosacea,
            k_components=config.pca_components,
            head=PCA_HEADS[key],
            knn_k=config.knn_k,
            variance=config.pca_variance,
            policy=config.truncation,
            preprocess=preprocess,
        )
    return train_whitened_cosine(x_normal, x_rosacea, config.truncation, preprocess=preprocess)


class Command(DetectorCommand):
    help = "Train and evaluate the KNN / PCA baselines (and the detector itself with --method all)."

    def add_arguments(self, parser):
        parser.add_argument("--method", required=True, choices=[*ALL_METHODS[:-1], "all"])
        parser.add_argument("--k", type=positive_int, help="Neighbours for KNN heads (default WCS_KNN_K)")
        parser.add_argument("--components", type=positive_int,
                            help="PCA components (default: smallest count holding WCS_PCA_VARIANCE)")
        parser.add_argument("--train-normal-dir")
        parser.add_argument("--train-rosacea-dir")
        parser.add_argument("--train-csv")
        parser.add_argument("--test-normal-dir")
        parser.add_argument("--test-rosacea-dir")
        parser.add_argument("--test-csv")
        self.add_image_arguments(parser)
        parser.add_argument("--rank-tol", type=float, help="Relative eigenvalue truncation (default WCS_RANK_TOL)")
        parser.add_argument("--out", help="Write the trained baseline model here (single method only)")
        self.add_format_argument(parser)

    def run(self, *args, **options):
        config = self.run_config(
            knn_k=options["k"],
            pca_components=options["components"],
            rank_tol=options["rank_tol"],
            output_format=options["format"],
        )
        methods = ALL_METHODS if options["method"] == "all" else (options["method"],)
        if options["out"] and len(methods) > 1:
            raise self.usage_error("--out needs a single --method")

        images = not (options["train_csv"] and options["test_csv"])
        spec = self.preprocess_spec(options) if images else None
        x_train, train_labels, preprocess = self.load_labeled(
            options["train_normal_dir"], options["train_rosacea_dir"], options["train_csv"], spec, prefix="--train-",
        )
        x_test, test_labels, _ = self.load_labeled(
            options["test_normal_dir"], options["test_rosacea_dir"], options["test_csv"], spec, prefix="--test-",
        )
        self.both_classes(train_labels, "training data")
        self.both_classes(test_labels, "test data")
        uses_knn = any(key in KNN_METRICS or key == "pca-knn" for key in methods)
        if uses_knn and config.knn_k > x_train.shape[1]:
            raise self.usage_error(f"--k {config.knn_k} exceeds the {x_train.shape[1]} training samples")
        train_normal, train_rosacea = split_by_label(x_train, train_labels)
        test_normal, test_rosacea = split_by_label(x_test, test_labels)

        reports = []
        for key in methods:
            model = train_method(key, train_normal, train_rosacea, config, preprocess=preprocess)
            logger.info(f"Evaluating {METHOD_NAMES[key]}")
            reports.append(evaluate_model(
                model, test_normal, test_rosacea, METHOD_NAMES[key], **self.predict_options(model, config),
            ))
            if options["out"]:
                save_model(model, options["out"])
        self.stdout.write(render_report(reports, config.output_format), ending="")
