DJANGO_APPS = [
    'django.contrib.contenttypes',
    'django.contrib.auth',
]
