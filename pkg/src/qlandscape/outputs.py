"""CSV artifacts with a config comment header, written atomically."""

from __future__ import annotations

import math
import os
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig, config_items


def format_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        return format(v, ".17g")
    return str(value)


def header_lines(cfg: ExperimentConfig, extra: dict | None = None) -> list[str]:
    lines = [f"# qlandscape {__version__}"]
    lines += [f"# {section}.{key} = {value}" for section, key, value in config_items(cfg)]
    for key, value in (extra or {}).items():
        lines.append(f"# {key} = {format_cell(value)}")
    return lines


def render_csv(columns, rows, cfg: ExperimentConfig, extra: dict | None = None) -> str:
    lines = header_lines(cfg, extra)
    lines.append(",".join(columns))
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"row has {len(row)} cells, header has {len(columns)}")
        lines.append(",".join(format_cell(v) for v in row))
    return "\n".join(lines) + "\n"


def write_atomic(path: Path, text: str) -> Path:
    """Write to a temp file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_csv(path, columns, rows, cfg: ExperimentConfig, extra: dict | None = None) -> Path:
    return write_atomic(Path(path), render_csv(columns, rows, cfg, extra))


def read_csv(path) -> tuple[dict[str, str], list[str], list[list[str]]]:
    """Parse a file written by :func:`write_csv`: (header entries, columns, rows)."""
    meta: dict[str, str] = {}
    columns: list[str] = []
    rows: list[list[str]] = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("#"):
            body = line[1:].strip()
            if " = " in body:
                key, value = body.split(" = ", 1)
                meta[key] = value
            continue
        if not columns:
            columns = line.split(",")
        else:
            rows.append(line.split(","))
    return meta, columns, rows
