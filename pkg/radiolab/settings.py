from pathlib import Path

import dj_database_url

BASE_DIR = Path(__file__).resolve().parent.parent

# Results must not depend on the environment, so nothing here reads os.environ.
SECRET_KEY = 'radiolab-local-only-not-used-for-serving'

DEBUG = False

ALLOWED_HOSTS = []

# Application definition
INSTALLED_APPS = [
    'amc',
]

# --- DATABASE CONFIG ---
# SQLite next to manage.py; only the run registry lives here
DATABASES = {
    'default': dj_database_url.parse(
        'sqlite:///' + str(BASE_DIR / 'runs.sqlite3'),
        conn_max_age=600
    )
}

# --- INTERNATIONALIZATION ---
LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = False
USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# --- LOGGING ---
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '%(asctime)s [%(levelname)s] %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'plain',
        },
    },
    'loggers': {
        'amc': {
            'handlers': ['console'],
            'level': 'INFO',
            'propagate': False,
        },
    },
}

# --- TESTS ---
# Desk-scale acceptance runs are tagged 'slow' and skipped unless asked for
TEST_RUNNER = 'amc.runner.RadioTestRunner'

# --- AMC ---
AMC_TOOL_VERSION = '1.0.0'
