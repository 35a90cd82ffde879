# cli/base.py
import json
import logging
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from expressions.exceptions import DomainError

from .config import load_config, validate
from .exceptions import ConfigError

logger = logging.getLogger(__name__)

VALIDATION_EXIT = 2
DOMAIN_EXIT = 3


def dump_json(report):
    return json.dumps(report, indent=2, sort_keys=True)


class HamepiCommand(BaseCommand):
    """
    Shared front end: read --config, validate it with `serializer_class`,
    call `run`, write its report as JSON next to the command's CSV files.

    Exit codes: 2 for config and precondition errors, 3 for runtime domain
    errors (a log of a non-positive number, a horizon overrun, ...).
    """
    serializer_class = None
    report_name = ""

    def add_arguments(self, parser):
        parser.add_argument("--config", required=True, help="JSON/YAML file or inline JSON")
        parser.add_argument("--out", default=".", help="output directory")
        parser.add_argument("--seed", type=int, help=f"sample seed (default {settings.HAMEPI_SEED})")
        parser.add_argument("--points", type=int, help=f"sample points (default {settings.HAMEPI_POINTS})")
        parser.add_argument("--tol", type=float, help=f"tolerance (default {settings.HAMEPI_TOL})")

    def handle(self, *args, **options):
        try:
            data = validate(self.serializer_class, load_config(options["config"]))
            out = Path(options["out"])
            out.mkdir(parents=True, exist_ok=True)
            report = self.run(data, out, options)
        except ConfigError as exc:
            raise CommandError(str(exc), returncode=VALIDATION_EXIT) from exc
        except DomainError as exc:
            raise CommandError(str(exc), returncode=DOMAIN_EXIT) from exc
        except ValueError as exc:
            raise CommandError(str(exc), returncode=VALIDATION_EXIT) from exc
        text = dump_json(report)
        (out / f"{self.report_name}.json").write_text(text + "\n", encoding="utf-8")
        self.render(report, text)

    def run(self, data, out, options):
        raise NotImplementedError

    def render(self, report, text):
        """Console output; the JSON report itself by default."""
        self.stdout.write(text)

    @staticmethod
    def option(options, data, name, default):
        """Command line beats config beats settings."""
        if options.get(name) is not None:
            return options[name]
        if data.get(name) is not None:
            return data[name]
        return default
