from cli import runners
from cli.base import HamepiCommand
from cli.serializers import ExactSerializer


class Command(HamepiCommand):
    help = "Exact solution of an SIR-family model against adaptive integration; writes exact.csv and exact.json."
    serializer_class = ExactSerializer
    report_name = "exact"

    def run(self, data, out, options):
        return runners.exact(data, out)
