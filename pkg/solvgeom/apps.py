from django.apps import AppConfig


class SolvgeomConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'solvgeom'
    verbose_name = 'Solvable group geometry'

    def ready(self):
        """
        Import tasks when the app is ready.
        This ensures the campaign shard task is registered with the celery app.
        """
        import solvgeom.tasks  # noqa: F401
