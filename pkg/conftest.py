import os

import django

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "hamepi.settings")
django.setup()
