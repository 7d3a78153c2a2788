"""
Django settings for core project.

The project hosts a single app, ``solvgeom``, which computes the geometry of the
solvable Lie groups G_A = R^n x_A R and of their ideal boundaries, and runs the
verification campaigns through management commands.

Every tunable value is read through python-decouple, so an ``.env`` file or the
process environment can override it without touching this module.
"""

from pathlib import Path

from decouple import Csv, config

from core.apps.custom_apps import CUSTOM_APPS
from core.apps.install_apps import DJANGO_APPS
from core.apps.third_party_apps import THIRD_PARTY_APPS

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# Campaign reports land here unless --out is given
REPORTS_DIR = config('REPORTS_DIR', default=str(BASE_DIR / 'reports'))

# Campaign config used when --config is not given
CAMPAIGN_CONFIG = config('CAMPAIGN_CONFIG', default=str(BASE_DIR / 'campaigns' / 'default.json'))


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = config('SECRET_KEY', default='solvgeom-local-campaigns-only')

DEBUG = config('DEBUG', default=False, cast=bool)

ALLOWED_HOSTS = config('ALLOWED_HOSTS', default='', cast=Csv())


# Application definition

INSTALLED_APPS = DJANGO_APPS + THIRD_PARTY_APPS + CUSTOM_APPS

MIDDLEWARE = []


# Database
# Nothing is persisted: campaigns write report files only.

DATABASES = {}


# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# REST Framework configuration (serializers only, no API views)
REST_FRAMEWORK = {
    'COERCE_DECIMAL_TO_STRING': False,
    'UNAUTHENTICATED_USER': None,
}


# =============================================================================
# GEOMETRY DEFAULTS
# =============================================================================
# Constants without a canonical value live here with documented defaults.
# None means "derive from the spectrum" (see solvgeom.services.group_geometry).

SOLVGEOM = {
    # Height tolerance of the D_e root solve
    'ROOT_TOL': config('SOLVGEOM_ROOT_TOL', default=1e-12, cast=float),
    # Relative tolerance for geodesic distances
    'DISTANCE_TOL': config('SOLVGEOM_DISTANCE_TOL', default=1e-6, cast=float),
    # Waypoint ladder of the discrete energy minimization
    'MIN_WAYPOINTS': config('SOLVGEOM_MIN_WAYPOINTS', default=16, cast=int),
    'MAX_WAYPOINTS': config('SOLVGEOM_MAX_WAYPOINTS', default=256, cast=int),
    # Relative shooting/energy disagreement that raises a diagnostic flag
    'DISAGREEMENT_FLAG': config('SOLVGEOM_DISAGREEMENT_FLAG', default=1e-3, cast=float),
    # Integrator tolerances for the geodesic ODE
    'ODE_RTOL': config('SOLVGEOM_ODE_RTOL', default=1e-11, cast=float),
    'ODE_ATOL': config('SOLVGEOM_ODE_ATOL', default=1e-12, cast=float),
    # Hyperbolicity reference, visual parameters and the Busemann cocycle constant
    'DELTA_HAT': config('SOLVGEOM_DELTA_HAT', default=None, cast=lambda v: None if v in (None, '', 'None') else float(v)),
    'EPSILON0': config('SOLVGEOM_EPSILON0', default=None, cast=lambda v: None if v in (None, '', 'None') else float(v)),
    'EPSILON1': config('SOLVGEOM_EPSILON1', default=None, cast=lambda v: None if v in (None, '', 'None') else float(v)),
    'PARAMETER_C': config('SOLVGEOM_PARAMETER_C', default=1.0, cast=float),
    # Heights used to stabilize Gromov products of boundary points
    'GROMOV_HEIGHTS': config('SOLVGEOM_GROMOV_HEIGHTS', default='10,15,20', cast=Csv(float)),
    # Depth below the D_e height at which boundary geodesics are truncated
    'BOUNDARY_DEPTH': config('SOLVGEOM_BOUNDARY_DEPTH', default=6.0, cast=float),
    # Distortion analysis
    'PROFILE_SLACK': config('SOLVGEOM_PROFILE_SLACK', default=0.1, cast=float),
    'PROFILE_BINS': config('SOLVGEOM_PROFILE_BINS', default=32, cast=int),
    'PROFILE_RANGE': (1e-3, 1e3),
    'LEAF_TOL': config('SOLVGEOM_LEAF_TOL', default=1e-9, cast=float),
    'DIVERGENCE_FACTOR': config('SOLVGEOM_DIVERGENCE_FACTOR', default=4.0, cast=float),
    'BILIPSCHITZ_LIMIT': config('SOLVGEOM_BILIPSCHITZ_LIMIT', default=100.0, cast=float),
    # Spread of t(f(p)) - t(p) below which a sampled group map counts as height-respecting
    'HEIGHT_SPREAD_LIMIT': config('SOLVGEOM_HEIGHT_SPREAD_LIMIT', default=1.0, cast=float),
    # Modulus solver
    'MODULUS_RTOL': config('SOLVGEOM_MODULUS_RTOL', default=1e-6, cast=float),
    'MODULUS_MAX_ITER': config('SOLVGEOM_MODULUS_MAX_ITER', default=5000, cast=int),
    'MODULUS_MAX_CURVES': config('SOLVGEOM_MODULUS_MAX_CURVES', default=100000, cast=int),
    # Witness records kept per check in a report
    'MAX_WITNESSES': config('SOLVGEOM_MAX_WITNESSES', default=8, cast=int),
}


# =============================================================================
# CELERY
# =============================================================================
# Campaign shards are celery tasks. The defaults execute them in-process so a
# desk run needs no broker; point the broker at a real server to fan out.

CELERY_BROKER_URL = config('CELERY_BROKER_URL', default='memory://')
CELERY_RESULT_BACKEND = config('CELERY_RESULT_BACKEND', default='cache+memory://')
CELERY_TASK_ALWAYS_EAGER = config('CELERY_TASK_ALWAYS_EAGER', default=True, cast=bool)
CELERY_TASK_EAGER_PROPAGATES = True
CELERY_TASK_SERIALIZER = 'json'
CELERY_RESULT_SERIALIZER = 'json'
CELERY_ACCEPT_CONTENT = ['json']


# Logging configuration
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '{levelname} {name} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'plain',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': 'WARNING',
    },
    'loggers': {
        'solvgeom': {
            'handlers': ['console'],
            'level': config('LOG_LEVEL', default='INFO'),
            'propagate': False,
        },
    },
}
