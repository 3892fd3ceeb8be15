import logging

from core.management.base import DetectorCommand, ratio
from core.services.classifiers import train_whitened_cosine
from core.services.dataset import split_by_label, split_indices
from core.services.evaluation import evaluate_model, render_report
from core.services.model_file import save_model

logger = logging.getLogger(__name__)

TOP_EIGENVALUES = 5


class Command(DetectorCommand):
    help = "Train the whitened cosine detector on a normal/rosacea dataset and write a model file."

    def add_arguments(self, parser):
        parser.add_argument("--normal-dir", help="Directory of normal images")
        parser.add_argument("--rosacea-dir", help="Directory of rosacea images")
        parser.add_argument("--csv", help="Labeled vectors (label,v1,...,vd) instead of image directories")
        parser.add_argument("--out", required=True, help="Model file to write")
        self.add_image_arguments(parser)
        parser.add_argument("--rank-tol", type=float, help="Relative eigenvalue truncation (default WCS_RANK_TOL)")
        parser.add_argument("--abs-tol", type=float, help="Absolute eigenvalue floor (default WCS_ABS_TOL)")
        parser.add_argument("--holdout", action="store_true", help="Hold out a validation part and report metrics on it")
        parser.add_argument("--split-ratio", type=ratio, help="Training share per class for --holdout, e.g. 5/6")
        parser.add_argument("--split-seed", type=int, help="Seed of the --holdout split")
        self.add_format_argument(parser)

    def run(self, *args, **options):
        config = self.run_config(
            rank_tol=options["rank_tol"],
            abs_tol=options["abs_tol"],
            split_ratio=options["split_ratio"],
            split_seed=options["split_seed"],
            output_format=options["format"],
        )
        spec = None if options["csv"] else self.preprocess_spec(options)
        x, labels, preprocess = self.load_labeled(options["normal_dir"], options["rosacea_dir"], options["csv"], spec)
        self.both_classes(labels, "training data")

        validation = None
        if options["holdout"]:
            train, held_out = split_indices(labels, config.split_ratio, config.split_seed)
            validation = (x[:, held_out], [labels[i] for i in held_out])
            x, labels = x[:, train], [labels[i] for i in train]

        x_normal, x_rosacea = split_by_label(x, labels)
        model = train_whitened_cosine(x_normal, x_rosacea, config.truncation, preprocess=preprocess)
        save_model(model, options["out"])
        logger.info(f"Model written to {options['out']}")

        n, m = model.train_counts
        eigenvalues = model.whitening.eigenvalues
        shares = eigenvalues / eigenvalues.sum()
        top = eigenvalues[:TOP_EIGENVALUES]
        self.stdout.write(f"d={model.dimension} n={n} m={m} retained_rank={model.whitening.retained_rank}")
        self.stdout.write("top eigenvalues: " + " ".join(f"{value:.6e}" for value in top))
        self.stdout.write("explained variance: " + " ".join(f"{share:.4f}" for share in shares[:TOP_EIGENVALUES]))
        self.stdout.write(f"model: {options['out']}")

        if validation is not None:
            x_val, labels_val = validation
            val_normal, val_rosacea = split_by_label(x_val, labels_val)
            report = evaluate_model(
                model, val_normal, val_rosacea, "Whitened cosine similarity",
                **self.predict_options(model, config),
            )
            self.stdout.write(f"validation ({val_normal.shape[1]} normal, {val_rosacea.shape[1]} rosacea):")
            self.stdout.write(render_report([report], config.output_format), ending="")
