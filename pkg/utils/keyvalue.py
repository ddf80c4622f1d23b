"""
Key-Value Text Files

Flat `key = value` files used for experiment configs, run manifests and field
metadata sidecars. Blank lines and `#` comments are ignored; keys keep their
dotted section prefixes (solve.newton_tol = 1e-9).
"""

from pathlib import Path
from typing import Dict, Mapping, Tuple

import numpy as np


def format_value(value) -> str:
    """Render a value deterministically; floats use the shortest round-trip form"""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (tuple, list)):
        return ", ".join(format_value(v) for v in value)
    return str(value)


def parse_lines(text: str, source: str = "<string>") -> Tuple[Dict[str, str], Dict[str, int]]:
    """
    Split key = value lines

    Returns:
        tuple: (values by key, line number by key)

    Raises:
        ValueError: on a line without '=' or an empty or repeated key
    """
    values: Dict[str, str] = {}
    lines: Dict[str, int] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{source}:{number}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ValueError(f"{source}:{number}: empty key")
        if key in values:
            raise ValueError(f"{source}:{number}: duplicate key {key!r} (first on line {lines[key]})")
        values[key] = value
        lines[key] = number
    return values, lines


def read_key_values(path) -> Dict[str, str]:
    path = Path(path)
    values, _ = parse_lines(path.read_text(encoding="utf-8"), source=str(path))
    return values


def write_key_values(path, mapping: Mapping[str, object]) -> Path:
    """Write entries in insertion order, one `key = value` line each"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = "".join(f"{key} = {format_value(value)}\n" for key, value in mapping.items())
    path.write_text(text, encoding="utf-8")
    return path
