from cli import runners
from cli.base import HamepiCommand
from cli.serializers import CoupleSerializer


class Command(HamepiCommand):
    help = "Integrate N interacting populations; writes population_<a>.csv, totals.csv and couple.json."
    serializer_class = CoupleSerializer
    report_name = "couple"

    def run(self, data, out, options):
        return runners.couple(data, out)
