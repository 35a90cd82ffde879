"""`hamepi` front end: python -m hamepi simulate|exact|verify|couple|sweep ..."""
import os
import sys

COMMANDS = ("simulate", "exact", "verify", "couple", "sweep")


def main(argv=None):
    argv = list(sys.argv if argv is None else argv)
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'hamepi.settings')
    if len(argv) < 2 or argv[1] not in COMMANDS:
        sys.stderr.write(f"usage: hamepi {{{'|'.join(COMMANDS)}}} --config <path> [options]\n")
        sys.exit(2)
    try:
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError(
            "Couldn't import Django. Are you sure it's installed and "
            "available on your PYTHONPATH environment variable?"
        ) from exc
    execute_from_command_line(["hamepi", *argv[1:]])


if __name__ == '__main__':
    main()
