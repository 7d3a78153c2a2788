THIRD_PARTY_APPS = [
    'rest_framework',
]
