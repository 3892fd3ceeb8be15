import json
import logging
import math

from django.core.management.base import CommandError

from core.exceptions import DetectorError
from core.management.base import RUNTIME_ERROR, DetectorCommand
from core.services.dataset import load_csv_vectors, load_image_vector
from core.services.model_file import load_model
from core.utils import map_ordered

logger = logging.getLogger(__name__)


def _score(value: float):
    return None if math.isnan(value) else value


def _fixed(value: float) -> str:
    return "n/a" if math.isnan(value) else f"{value:.4f}"


class Command(DetectorCommand):
    help = "Classify images (or CSV vectors) with a trained model, printing both class scores."

    def add_arguments(self, parser):
        parser.add_argument("paths", nargs="*", help="Image files to classify")
        parser.add_argument("--model", required=True, help="Model file written by train or baseline")
        parser.add_argument("--csv", help="Vectors to classify (label,v1,...,vd); any label text is accepted and unused")
        parser.add_argument("--format", choices=["text", "json"], default="text")
        parser.add_argument("--center-at-predict", action="store_true", default=None,
                            help="Center query and class means by the grand mean before comparing")

    def run(self, *args, **options):
        config = self.run_config(center_at_predict=options["center_at_predict"])
        model = load_model(self.require_file(options["model"], "--model"))
        predict_options = self.predict_options(model, config)

        if options["csv"] and options["paths"]:
            raise self.usage_error("pass either image paths or --csv, not both")
        if options["csv"]:
            x, _ = load_csv_vectors(self.require_file(options["csv"], "--csv"), labeled=False)
            names = [f"{options['csv']}:{index + 1}" for index in range(x.shape[1])]
            queries = [lambda column=column: x[:, column] for column in range(x.shape[1])]
        elif options["paths"]:
            spec = self.image_spec_for(model)
            names = list(options["paths"])
            queries = [lambda path=path: load_image_vector(path, spec) for path in names]
        else:
            raise self.usage_error("nothing to classify: pass image paths or --csv")

        def classify(query):
            try:
                return model.predict(query(), **predict_options), None
            except DetectorError as exc:
                return None, str(exc)

        outcomes = map_ordered(classify, queries)
        failed = 0
        records = []
        for name, (prediction, error) in zip(names, outcomes):
            if error is not None:
                failed += 1
                logger.error(f"Cannot classify {name}: {error}")
                self.stderr.write(f"{name}: error: {error}")
                records.append({"path": name, "error": error})
                continue
            records.append({
                "path": name,
                "label": str(prediction.label),
                "sim_normal": _score(prediction.sim_normal),
                "sim_rosacea": _score(prediction.sim_rosacea),
            })
            if options["format"] == "text":
                self.stdout.write(
                    f"{name}: {prediction.label} "
                    f"sim_normal={_fixed(prediction.sim_normal)} sim_rosacea={_fixed(prediction.sim_rosacea)}"
                )
        if options["format"] == "json":
            self.stdout.write(json.dumps(records, indent=2))
        if failed:
            raise CommandError(f"{failed} of {len(names)} inputs could not be classified", returncode=RUNTIME_ERROR)
