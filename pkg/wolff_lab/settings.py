import os
from pathlib import Path

# BASE DIR
BASE_DIR = Path(__file__).resolve().parent.parent

# Only used by Django internals (signing); the lab has no web surface.
SECRET_KEY = os.environ.get("LAB_SECRET_KEY", "wolff-lab-insecure-local-key")

DEBUG = False

ALLOWED_HOSTS = []

# Application definition
INSTALLED_APPS = [
    # Custom apps
    'core.apps.CoreConfig',
    'measure',
    'wolff',
    'solver',
    'km',
    'verifier',
    'logs',
]

# Flat files only: no database is configured.
DATABASES = {}

# Default primary key field type
DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

USE_TZ = True
TIME_ZONE = 'UTC'

# ===== Numerical defaults =====
LAB_DEFAULTS = {
    "kappa": 0.1,                  # selection level for A_j
    "eps_split": 0.1,              # L' / L'' split threshold
    "eps_reg": 1e-8,               # gradient regularization of the flux
    "tol_root": 1e-6,              # bisection tolerance, relative to the cap gap
    "tol_newton": 1e-9,            # gradient-norm tolerance, scaled by h^n
    "max_newton_iterations": 100,
    "gamma_cap": 100.0,
    "j_max": 40,
    "wolff_rel_tol": 1e-10,
    "wolff_max_depth": 40,
    "wolff_max_evaluations": 4_000_000,
    "ball_mass_depth": 4,          # dyadic subdivision levels per boundary cell
    "refinement_tolerance": 0.25,
}

# ===== Parameter validation =====
LAB_PARAMS_VALIDATORS = [
    {"NAME": "core.validators.DegenerateExponentValidator"},
    {"NAME": "core.validators.DimensionValidator", "OPTIONS": {"dimensions": (1, 2)}},
    {"NAME": "core.validators.LambdaRangeValidator"},
    {"NAME": "core.validators.OpenUnitIntervalValidator", "OPTIONS": {"field": "kappa", "label": "κ"}},
    {"NAME": "core.validators.OpenUnitIntervalValidator", "OPTIONS": {"field": "eps_split", "label": "ε"}},
    {"NAME": "core.validators.CutoffExponentValidator"},
    {"NAME": "core.validators.StructureConstantsValidator"},
    {"NAME": "core.validators.ToleranceValidator"},
    {"NAME": "core.validators.DomainGeometryValidator", "OPTIONS": {"min_cells": 4}},
]

# Logging (includes an 'audit' logger for scenario events)
LAB_LOG_FILE = os.environ.get("LAB_LOG_FILE", str(BASE_DIR / 'logs' / 'lab.log'))

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '%(asctime)s %(levelname)s %(name)s %(message)s',
        },
    },
    'handlers': {
        'file': {
            'level': 'INFO',
            'class': 'logging.FileHandler',
            'filename': LAB_LOG_FILE,
            'formatter': 'plain',
            'delay': True,
        },
        'console': {
            'level': 'WARNING',
            'class': 'logging.StreamHandler',
            'formatter': 'plain',
        },
    },
    'loggers': {
        'django': {
            'handlers': ['file'],
            'level': 'INFO',
            'propagate': True,
        },
        'lab': {
            'handlers': ['file', 'console'],
            'level': 'INFO',
            'propagate': False,
        },
        'audit': {                         # used by logs/utils.py
            'handlers': ['file'],
            'level': 'INFO',
            'propagate': False,
        },
    },
}
