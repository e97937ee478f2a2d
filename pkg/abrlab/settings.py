"""
Django settings for abrlab project.

abrlab has no web surface and no database: Django provides the settings layer,
logging configuration, management commands and the test runner.
"""

from pathlib import Path
import environ

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# Initialize environment variables
env = environ.Env(
    DEBUG=(bool, False),
    ABR_LOG_LEVEL=(str, 'INFO'),
    ABR_SWEEP_WORKERS=(int, 1),
    ABR_REFERENCE_EPISODES=(int, 100),
    ABR_LANDSCAPE_GRID=(int, 401),
)

# Read .env file if it exists
environ.Env.read_env(BASE_DIR / '.env')

# Nothing is signed or served; Django still insists on a key.
SECRET_KEY = env('SECRET_KEY', default='abrlab-offline-not-a-secret')

DEBUG = env('DEBUG')

ALLOWED_HOSTS = []

# Application definition
INSTALLED_APPS = [
    'django.contrib.contenttypes',
    'django.contrib.auth',
    # Third-party apps
    'rest_framework',
    # abrlab apps
    'core',
    'nn',
    'envs',
    'data',
    'abr',
    'baselines',
    'oracle',
    'harness',
]

# No models anywhere, so no database either.
DATABASES = {}

# Internationalization
LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = False
USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# =============================================================================
# ABR RUN SETTINGS
# =============================================================================

# Output root for every CLI artifact; ABR_OUT_DIR overrides it.
ABR_OUT_DIR = Path(env('ABR_OUT_DIR', default=str(BASE_DIR / 'runs')))

# Parallel workers used by `sweep` (process-level).
ABR_SWEEP_WORKERS = env('ABR_SWEEP_WORKERS')

# Episodes used to measure random/expert reference returns per environment.
ABR_REFERENCE_EPISODES = env('ABR_REFERENCE_EPISODES')

# Default number of cells of the oracle/landscape action grid.
ABR_LANDSCAPE_GRID = env('ABR_LANDSCAPE_GRID')

# Logging configuration - everything goes to stderr via the console handler
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': 'WARNING',
    },
    'loggers': {
        'django': {
            'handlers': ['console'],
            'level': 'WARNING',
            'propagate': False,
        },
        'core': {
            'handlers': ['console'],
            'level': env('ABR_LOG_LEVEL'),
            'propagate': False,
        },
        'nn': {
            'handlers': ['console'],
            'level': env('ABR_LOG_LEVEL'),
            'propagate': False,
        },
        'envs': {
            'handlers': ['console'],
            'level': env('ABR_LOG_LEVEL'),
            'propagate': False,
        },
        'data': {
            'handlers': ['console'],
            'level': env('ABR_LOG_LEVEL'),
            'propagate': False,
        },
        'abr': {
            'handlers': ['console'],
            'level': env('ABR_LOG_LEVEL'),
            'propagate': False,
        },
        'baselines': {
            'handlers': ['console'],
            'level': env('ABR_LOG_LEVEL'),
            'propagate': False,
        },
        'oracle': {
            'handlers': ['console'],
            'level': env('ABR_LOG_LEVEL'),
            'propagate': False,
        },
        'harness': {
            'handlers': ['console'],
            'level': env('ABR_LOG_LEVEL'),
            'propagate': False,
        },
    },
}
