import argparse
import logging
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError
from pydantic import ValidationError

from core.exceptions import DetectorError
from core.schemas import Label, PreprocessSpec, RunConfig
from core.services.classifiers import WhitenedCosineModel
from core.services.dataset import load_csv_vectors, load_image_matrix, scan_directories

RUNTIME_ERROR = 1
USAGE_ERROR = 2


def positive_int(value):
    try:
        number = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{value!r} is not an integer") from None
    if number < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {number}")
    return number


def ratio(value):
    """Accepts a float or a fraction such as 5/6."""
    try:
        if "/" in value:
            numerator, denominator = value.split("/", 1)
            return float(numerator) / float(denominator)
        return float(value)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"{value!r} is not a ratio") from None


class DetectorCommand(BaseCommand):
    """
    Base for the detector commands. Subclasses implement run(); detector errors
    become exit code 1, bad flags and missing inputs exit code 2.
    """

    def handle(self, *args, **options):
        if options.get("verbosity", 1) >= 2:
            logging.getLogger("core").setLevel(logging.INFO)
        try:
            return self.run(*args, **options)
        except DetectorError as exc:
            raise CommandError(str(exc), returncode=RUNTIME_ERROR) from exc

    def run(self, *args, **options):
        raise NotImplementedError

    def usage_error(self, message):
        return CommandError(message, returncode=USAGE_ERROR)

    def run_config(self, **overrides) -> RunConfig:
        try:
            return RunConfig.from_settings(**overrides)
        except ValidationError as exc:
            raise self.usage_error(f"invalid configuration: {exc}") from exc

    @staticmethod
    def add_image_arguments(parser):
        parser.add_argument("--width", type=positive_int, help="Image width after resizing (default WCS_IMAGE_WIDTH)")
        parser.add_argument("--height", type=positive_int, help="Image height after resizing (default WCS_IMAGE_HEIGHT)")
        parser.add_argument("--pixel-scale", choices=["unit", "raw"], default="unit", help="unit divides pixels by 255")

    @staticmethod
    def add_format_argument(parser):
        parser.add_argument("--format", choices=["text", "json", "csv"], help="Report format (default WCS_REPORT_FORMAT)")

    def preprocess_spec(self, options) -> PreprocessSpec:
        try:
            return PreprocessSpec(
                width=options.get("width") or settings.WCS_IMAGE_WIDTH,
                height=options.get("height") or settings.WCS_IMAGE_HEIGHT,
                pixel_scale=options.get("pixel_scale") or "unit",
            )
        except ValidationError as exc:
            raise self.usage_error(f"invalid image geometry: {exc}") from exc

    def require_dir(self, path, flag) -> Path:
        if not path:
            raise self.usage_error(f"{flag} is required")
        path = Path(path)
        if not path.is_dir():
            raise self.usage_error(f"{flag}: directory not found: {path}")
        return path

    def require_file(self, path, flag) -> Path:
        if not path:
            raise self.usage_error(f"{flag} is required")
        path = Path(path)
        if not path.is_file():
            raise self.usage_error(f"{flag}: file not found: {path}")
        return path

    def load_labeled(self, normal_dir, rosacea_dir, csv_path, spec, prefix="--"):
        """
        Labeled samples from either a CSV fixture or a pair of class directories.
        Returns (x, labels, preprocess); preprocess is None for CSV input.
        """
        if csv_path:
            if normal_dir or rosacea_dir:
                raise self.usage_error(f"use either {prefix}csv or the class directories, not both")
            x, labels = load_csv_vectors(self.require_file(csv_path, f"{prefix}csv"))
            return x, labels, None
        normal_dir = self.require_dir(normal_dir, f"{prefix}normal-dir")
        rosacea_dir = self.require_dir(rosacea_dir, f"{prefix}rosacea-dir")
        manifest = scan_directories(normal_dir, rosacea_dir)
        x = load_image_matrix([entry.path for entry in manifest.entries], spec)
        return x, [entry.label for entry in manifest.entries], spec

    def both_classes(self, labels, what):
        for label in Label:
            if label not in labels:
                raise CommandError(f"{what} has no {label} samples", returncode=RUNTIME_ERROR)

    def predict_options(self, model, config: RunConfig) -> dict:
        if isinstance(model, WhitenedCosineModel):
            return {"center": config.center_at_predict}
        return {}

    def image_spec_for(self, model) -> PreprocessSpec:
        """Image geometry a model was trained with; plain-vector models cannot read images."""
        spec = getattr(model, "preprocess", None)
        if spec is None:
            raise CommandError(
                "model was trained on plain vectors and has no image geometry; pass vectors with --csv",
                returncode=RUNTIME_ERROR,
            )
        return spec
