"""
Byte-deterministic writers for JSON documents, JSON lines and CSV files.

Floats are written with Python's shortest round-trip repr, so a value read
back with json.loads/float() is bit-identical to the one written.
"""
import csv
import json
import math
from pathlib import Path

import numpy as np


def to_builtin(value):
    """Recursively convert numpy containers/scalars into JSON-friendly builtins."""
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, dict):
        return {str(k): to_builtin(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_builtin(v) for v in value]
    if isinstance(value, Path):
        return str(value)
    return value


def json_line(data):
    """Compact single-line JSON with sorted keys."""
    return json.dumps(to_builtin(data), sort_keys=True, separators=(',', ':'), allow_nan=False)


def dump_json(path, data, indent=2):
    """Write a JSON document with sorted keys and a trailing newline."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(to_builtin(data), sort_keys=True, indent=indent, allow_nan=False)
    path.write_text(text + '\n', encoding='utf-8')
    return path


def load_json(path):
    with open(path, encoding='utf-8') as handle:
        return json.load(handle)


def format_cell(value):
    """CSV cell text: repr for floats, empty string for None/NaN."""
    if value is None:
        return ''
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return ''
        return repr(value)
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def write_csv(path, header, rows):
    """Write rows (sequences aligned with header) as a `\\n`-terminated CSV."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='', encoding='utf-8') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_cell(v) for v in row])
    return path


def read_csv(path):
    """Read a CSV written by write_csv into a list of dicts (strings)."""
    with open(path, newline='', encoding='utf-8') as handle:
        return list(csv.DictReader(handle))
