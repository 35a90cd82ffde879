from django.apps import AppConfig


class PoissonConfig(AppConfig):
    name = 'poisson'
