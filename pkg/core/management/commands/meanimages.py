from django.core.management.base import CommandError

from core.management.base import RUNTIME_ERROR, DetectorCommand
from core.services.classifiers import WhitenedCosineModel
from core.services.dataset import save_mean_images
from core.services.model_file import load_model


class Command(DetectorCommand):
    help = "Write the normal and rosacea class means of a trained detector as PNG images."

    def add_arguments(self, parser):
        parser.add_argument("--model", required=True, help="Model file written by train")
        parser.add_argument("--out-dir", required=True, help="Directory for normal_mean.png and rosacea_mean.png")

    def run(self, *args, **options):
        model = load_model(self.require_file(options["model"], "--model"))
        if not isinstance(model, WhitenedCosineModel):
            raise CommandError("mean images need a whitened cosine model written by train", returncode=RUNTIME_ERROR)
        spec = self.image_spec_for(model)
        for path in save_mean_images(model.mean_normal, model.mean_rosacea, spec, options["out_dir"]):
            self.stdout.write(str(path))
