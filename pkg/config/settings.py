"""
Django settings for the whitened-cosine detector.

The project has no web surface and no database: Django provides the command
framework, configuration and test runner. Every detector knob can be set
from the environment; command-line flags override these defaults.
"""
import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

DEBUG = os.environ.get('DEBUG', '0') == '1'
SECRET_KEY = os.environ.get('SECRET_KEY', 'whitened-cosine-detector-local-key')

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    "core",
]

DATABASES = {}

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True


# Logging

WCS_LOG_LEVEL = os.environ.get("WCS_LOG_LEVEL", "WARNING").upper()

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "plain": {
            "format": "%(asctime)s %(levelname)s %(name)s: %(message)s",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "plain",
        },
    },
    "loggers": {
        "core": {
            "handlers": ["console"],
            "level": WCS_LOG_LEVEL,
            "propagate": False,
        },
    },
}


# Detector defaults

# Eigenvalue truncation: keep lambda > max(WCS_RANK_TOL * lambda_max, WCS_ABS_TOL).
WCS_RANK_TOL = float(os.environ.get("WCS_RANK_TOL", "1e-10"))
WCS_ABS_TOL = float(os.environ.get("WCS_ABS_TOL", "1e-20"))

# Center the query and the class means by the grand mean before comparing.
WCS_CENTER_AT_PREDICT = os.environ.get("WCS_CENTER_AT_PREDICT", "0").lower() in ("true", "1", "yes")

WCS_KNN_K = int(os.environ.get("WCS_KNN_K", "1"))

# Fraction of retained variance the PCA baselines keep when no component count is given.
WCS_PCA_VARIANCE = float(os.environ.get("WCS_PCA_VARIANCE", "0.95"))

WCS_SPLIT_RATIO = float(os.environ.get("WCS_SPLIT_RATIO", str(5 / 6)))
WCS_SPLIT_SEED = int(os.environ.get("WCS_SPLIT_SEED", "0"))

WCS_REPORT_FORMAT = os.environ.get("WCS_REPORT_FORMAT", "text")

WCS_IMAGE_WIDTH = int(os.environ.get("WCS_IMAGE_WIDTH", "512"))
WCS_IMAGE_HEIGHT = int(os.environ.get("WCS_IMAGE_HEIGHT", "512"))

# Caps the file-ingestion and batch-prediction thread pool; unset means os.cpu_count().
WCS_THREADS = os.environ.get("WCS_THREADS")
