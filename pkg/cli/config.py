# cli/config.py
"""Reading run configs and turning serializer errors into field paths."""
import json
import logging
from pathlib import Path

import yaml
from rest_framework import serializers

from .exceptions import ConfigError

logger = logging.getLogger(__name__)

YAML_SUFFIXES = (".yaml", ".yml")


def load_config(source):
    """
    A config is inline JSON (text starting with '{') or a path to a JSON or
    YAML file.
    """
    text = str(source).strip()
    try:
        if text.startswith("{"):
            data = json.loads(text)
        else:
            path = Path(text)
            with path.open(encoding="utf-8") as handle:
                if path.suffix.lower() in YAML_SUFFIXES:
                    data = yaml.safe_load(handle)
                else:
                    data = json.load(handle)
    except OSError as exc:
        raise ConfigError(f"config: cannot read {text}: {exc.strerror or exc}") from exc
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"config: not valid JSON or YAML ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigError("config: top level must be a mapping")
    logger.debug("loaded config with keys %s", sorted(data))
    return data


def flatten_errors(detail, prefix=""):
    """DRF error detail -> ["populations.0.flows.1.rate: message", ...]."""
    if isinstance(detail, dict):
        messages = []
        for key, value in detail.items():
            if key in ("non_field_errors", "__all__"):
                path = prefix
            else:
                path = f"{prefix}.{key}" if prefix else str(key)
            messages.extend(flatten_errors(value, path))
        return messages
    if isinstance(detail, list):
        if all(not isinstance(item, (dict, list)) for item in detail):
            return [f"{prefix or 'config'}: {item}" for item in detail]
        messages = []
        for index, item in enumerate(detail):
            if item:
                messages.extend(flatten_errors(item, f"{prefix}.{index}" if prefix else str(index)))
        return messages
    return [f"{prefix or 'config'}: {detail}"]


def validate(serializer_class, data, **context):
    serializer = serializer_class(data=data, context=context)
    try:
        serializer.is_valid(raise_exception=True)
    except serializers.ValidationError as exc:
        raise ConfigError(flatten_errors(exc.detail)) from exc
    return serializer.validated_data
