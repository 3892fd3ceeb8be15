from core.management.base import DetectorCommand
from core.services.dataset import split_by_label
from core.services.evaluation import METHOD_NAMES, evaluate_model, method_key, render_report
from core.services.model_file import load_model


class Command(DetectorCommand):
    help = "Evaluate a trained model on a labeled test set (accuracy, recall, precision, F1)."

    def add_arguments(self, parser):
        parser.add_argument("--model", required=True, help="Model file written by train or baseline")
        parser.add_argument("--normal-dir", help="Directory of normal test images")
        parser.add_argument("--rosacea-dir", help="Directory of rosacea test images")
        parser.add_argument("--csv", help="Labeled test vectors instead of image directories")
        self.add_format_argument(parser)
        parser.add_argument("--center-at-predict", action="store_true", default=None,
                            help="Center query and class means by the grand mean before comparing")

    def run(self, *args, **options):
        config = self.run_config(output_format=options["format"], center_at_predict=options["center_at_predict"])
        model = load_model(self.require_file(options["model"], "--model"))
        spec = None if options["csv"] else self.image_spec_for(model)
        x, labels, _ = self.load_labeled(options["normal_dir"], options["rosacea_dir"], options["csv"], spec)
        self.both_classes(labels, "test data")

        x_normal, x_rosacea = split_by_label(x, labels)
        report = evaluate_model(
            model, x_normal, x_rosacea, METHOD_NAMES[method_key(model)], **self.predict_options(model, config),
        )
        self.stdout.write(render_report([report], config.output_format), ending="")
        if config.output_format == "text":
            counts = report.counts
            self.stdout.write(f"tp={counts.tp} tn={counts.tn} fp={counts.fp} fn={counts.fn}")
