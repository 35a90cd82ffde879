from django.conf import settings

from cli import runners
from cli.base import HamepiCommand
from cli.serializers import SweepSerializer


class Command(HamepiCommand):
    help = "Run one model over a parameter grid; writes sweep.json."
    serializer_class = SweepSerializer
    report_name = "sweep"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--workers", type=int, help=f"worker processes (default {settings.HAMEPI_WORKERS})")

    def run(self, data, out, options):
        workers = max(1, self.option(options, data, "workers", settings.HAMEPI_WORKERS))
        report, duplicates = runners.sweep(data, workers)
        if duplicates:
            self.stderr.write(self.style.WARNING(f"dropped {duplicates} duplicate grid points"))
        return report
