import argparse

from django.core.management.base import CommandError

from core.management.base import RUNTIME_ERROR, DetectorCommand
from core.services.selftest import run_checks


class Command(DetectorCommand):
    help = "Check the Gram-matrix PCA, whitening and scoring against brute-force references."

    def add_arguments(self, parser):
        parser.add_argument("--seed", type=int, default=0, help="Seed of the random problems")
        parser.add_argument("--perturb-eigenvalues", type=float, default=0.0, help=argparse.SUPPRESS)

    def run(self, *args, **options):
        results = run_checks(seed=options["seed"], perturb_eigenvalues=options["perturb_eigenvalues"])
        for result in results:
            status = "PASS" if result.passed else "FAIL"
            self.stdout.write(f"{status} {result.name}: {result.detail}")
        failed = [result.name for result in results if not result.passed]
        if failed:
            raise CommandError(f"self-test failed: {', '.join(failed)}", returncode=RUNTIME_ERROR)
        self.stdout.write(f"all {len(results)} checks passed")
