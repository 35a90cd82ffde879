from django.conf import settings

from cli import runners
from cli.base import HamepiCommand
from cli.serializers import VerifySerializer

COLUMNS = ("structure", "points", "max jacobi", "max vector field", "max casimir")


def _cell(value):
    return "-" if value is None else f"{value:.3e}"


def structure_table(rows):
    """One line per structure under a header; absent checks print as '-'."""
    width = max([len(COLUMNS[0]), *(len(row["structure"]) for row in rows)])
    lines = [f"{COLUMNS[0]:<{width}}  {COLUMNS[1]:>7}  {COLUMNS[2]:>10}  {COLUMNS[3]:>16}  {COLUMNS[4]:>11}"]
    for row in rows:
        lines.append(
            f"{row['structure']:<{width}}  {row['points']:>7d}  {_cell(row['jacobi']):>10}  "
            f"{_cell(row['vector_field']):>16}  {_cell(row['casimir']):>11}"
        )
    return lines


class Command(HamepiCommand):
    help = "Check the Poisson identities of a model or interacting system on seeded sample points."
    serializer_class = VerifySerializer
    report_name = "verify"

    def run(self, data, out, options):
        seed = self.option(options, data, "seed", settings.HAMEPI_SEED)
        points = self.option(options, data, "points", settings.HAMEPI_POINTS)
        tol = self.option(options, data, "tol", settings.HAMEPI_TOL)
        return runners.verify(data, seed, points, tol)

    def render(self, report, text):
        header, *body = structure_table(report["structures"])
        self.stdout.write(self.style.MIGRATE_HEADING(header))
        for line in body:
            self.stdout.write(line)
        style = self.style.SUCCESS if report["status"] == "PASS" else self.style.ERROR
        self.stderr.write(style(f"{report['subject']}: {report['status']}"))
