from django.apps import AppConfig


class ExpressionsConfig(AppConfig):
    name = 'expressions'
