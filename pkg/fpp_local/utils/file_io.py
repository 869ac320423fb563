import csv
import json
import pathlib
from collections.abc import Iterable, Sequence
from typing import Any

import yaml

from fpp_local.core.errors import ConfigError


def read_yaml(path: str | pathlib.Path) -> Any:
    with open(path, encoding="utf-8") as f:
        return yaml.safe_load(f)


def read_config_data(path: str | pathlib.Path) -> dict:
    """Raw config mapping from a ``.json`` file or, for any other suffix, YAML."""
    path = pathlib.Path(path)
    try:
        if path.suffix.lower() == ".json":
            data = json.loads(path.read_text(encoding="utf-8"))
        else:
            data = read_yaml(path)
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {path}") from e
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigError(f"malformed config {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a mapping")
    return data


def write_json(data: Any, path: str | pathlib.Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, sort_keys=True, allow_nan=True)
        f.write("\n")


def write_csv(
    header: Sequence[str], rows: Iterable[Sequence[Any]], path: str | pathlib.Path
) -> None:
    """CSV with floats in ``repr`` form so reruns are byte-identical."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(x) if isinstance(x, float) else x for x in row])
