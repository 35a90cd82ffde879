from cli import runners
from cli.base import HamepiCommand
from cli.serializers import SimulateSerializer


class Command(HamepiCommand):
    help = "Integrate one model; writes trajectory.csv and diagnostics.json."
    serializer_class = SimulateSerializer
    report_name = "diagnostics"

    def run(self, data, out, options):
        return runners.simulate(data, out)
