import logging
import os
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# Not used for signing anything; Django refuses to start without one.
SECRET_KEY = os.getenv('SECRET_KEY', 'hamepi-local-only')

DEBUG = os.getenv('DEBUG', 'False') == 'True'

ALLOWED_HOSTS = []


# Verification / simulation defaults (overridable per command)

HAMEPI_SEED = int(os.getenv('HAMEPI_SEED', '0'))
HAMEPI_POINTS = int(os.getenv('HAMEPI_POINTS', '1000'))
HAMEPI_TOL = float(os.getenv('HAMEPI_TOL', '1e-10'))
HAMEPI_WORKERS = int(os.getenv('HAMEPI_WORKERS', '1'))

# off | info | debug
HAMEPI_LOG = os.getenv('HAMEPI_LOG', 'off').strip().lower()

_LOG_LEVELS = {
    'off': logging.CRITICAL + 10,
    'info': 'INFO',
    'debug': 'DEBUG',
}


# Application definition

INSTALLED_APPS = [
    "rest_framework",
    "expressions",
    "poisson",
    "compartments",
    "coupling",
    "bihamiltonian",
    "solver",
    "cli",
]

# No persistence: the dummy backend is enough for commands and SimpleTestCase.
DATABASES = {}

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True


# Logging

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'loggers': {
        app: {
            'handlers': ['console'],
            'level': _LOG_LEVELS.get(HAMEPI_LOG, logging.CRITICAL + 10),
            'propagate': False,
        }
        for app in ("expressions", "poisson", "compartments", "coupling", "bihamiltonian", "solver", "cli")
    },
}
