"""
Celery application for core project.

Campaign shards are dispatched as tasks of this app; see solvgeom.tasks.
"""

import os

from celery import Celery

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'core.settings')

app = Celery('core')

# All CELERY_* names in core.settings configure the app
app.config_from_object('django.conf:settings', namespace='CELERY')

app.autodiscover_tasks()
