from django.apps import AppConfig


class BihamiltonianConfig(AppConfig):
    name = 'bihamiltonian'
