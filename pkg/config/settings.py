"""
Django settings for the variable-size GAN pipeline.

The project has no web surface: Django provides the settings layer, logging
and the management-command CLI (``python manage.py <subcommand>``).

Every tunable below can be overridden from the environment or a ``.env``
file through python-decouple.
"""

from pathlib import Path
from decouple import config
import os

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = config('SECRET_KEY', default='gan-local-only-not-a-secret')

DEBUG = config('DEBUG', default=False, cast=bool)

ALLOWED_HOSTS = []

# Application definition

INSTALLED_APPS = [
    'apps.core',
    'apps.autodiff',
    'apps.resize',
    'apps.networks',
    'apps.datasets',
    'apps.metrics',
    'apps.training',
]

# No ORM models anywhere; runs never touch a database.
DATABASES = {}

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

USE_TZ = True
TIME_ZONE = 'UTC'


# Threading
# numpy reads these when it is first imported, which happens after settings load.

ANYSIZE_THREADS = config('ANYSIZE_THREADS', default=1, cast=int)
for _thread_var in ('OMP_NUM_THREADS', 'OPENBLAS_NUM_THREADS', 'MKL_NUM_THREADS'):
    os.environ.setdefault(_thread_var, str(ANYSIZE_THREADS))


# Pipeline defaults

ANYSIZE_SEED = config('ANYSIZE_SEED', default=0, cast=int)
ANYSIZE_MAX_SIZE = config('ANYSIZE_MAX_SIZE', default=128, cast=int)
ANYSIZE_BASE_SIZE = config('ANYSIZE_BASE_SIZE', default=4, cast=int)
ANYSIZE_SCHEDULE_STAGES = config('ANYSIZE_SCHEDULE_STAGES', default=5, cast=int)
ANYSIZE_Z_DIM = config('ANYSIZE_Z_DIM', default=100, cast=int)

ANYSIZE_BATCH_SIZE = config('ANYSIZE_BATCH_SIZE', default=16, cast=int)
ANYSIZE_EPOCHS = config('ANYSIZE_EPOCHS', default=180, cast=int)
ANYSIZE_CHECKPOINT_INTERVAL = config('ANYSIZE_CHECKPOINT_INTERVAL', default=10, cast=int)

# Adam (DCGAN convention)
ANYSIZE_LEARNING_RATE = config('ANYSIZE_LEARNING_RATE', default=2e-4, cast=float)
ANYSIZE_BETA1 = config('ANYSIZE_BETA1', default=0.5, cast=float)
ANYSIZE_BETA2 = config('ANYSIZE_BETA2', default=0.999, cast=float)
ANYSIZE_ADAM_EPS = config('ANYSIZE_ADAM_EPS', default=1e-8, cast=float)

ANYSIZE_GRADCHECK_THRESHOLD = config('ANYSIZE_GRADCHECK_THRESHOLD', default=1e-4, cast=float)

ANYSIZE_OUTPUT_DIR = Path(config('ANYSIZE_OUTPUT_DIR', default=str(BASE_DIR / 'runs')))


# Logging configuration

LOG_DIR = BASE_DIR / 'logs'
LOG_DIR.mkdir(exist_ok=True)

ANYSIZE_LOG_LEVEL = config('ANYSIZE_LOG_LEVEL', default='INFO')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {process:d} {thread:d} {message}',
            'style': '{',
        },
        'simple': {
            'format': '{levelname} {asctime} {name} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'level': 'INFO',
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
        'file': {
            'level': 'ERROR',
            'class': 'logging.FileHandler',
            'filename': LOG_DIR / 'errors.log',
            'formatter': 'verbose',
        },
    },
    'loggers': {
        'django': {
            'handlers': ['console', 'file'],
            'level': 'WARNING',
            'propagate': False,
        },
        'apps': {
            'handlers': ['console', 'file'],
            'level': ANYSIZE_LOG_LEVEL,
            'propagate': False,
        },
        'apps.training': {
            'handlers': ['console', 'file'],
            'level': ANYSIZE_LOG_LEVEL,
            'propagate': False,
        },
    },
    'root': {
        'handlers': ['console'],
        'level': 'WARNING',
    },
}
