CUSTOM_APPS = [
    'solvgeom',
]
