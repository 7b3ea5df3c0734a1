"""Deterministic JSON/CSV/SVG output and bundled JSON schemas.

Floats are always written with 17 significant digits (``%.17g``) so that
identical inputs give byte-identical files and every value round-trips.
"""

from __future__ import annotations

import json
import math
from functools import lru_cache
from importlib import resources
from typing import Iterable, Sequence
from xml.sax.saxutils import escape

import jsonschema
import numpy as np

FLOAT_FORMAT = "%.17g"


def format_float(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite value {x!r}")
    return FLOAT_FORMAT % x


def _encode(obj, indent: int, level: int) -> str:
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{json.dumps(str(k))}: {_encode(obj[k], indent, level + 1)}" for k in sorted(obj)]
        return "{" + pad + ("," + pad).join(items) + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        return "[" + pad + ("," + pad).join(_encode(v, indent, level + 1) for v in obj) + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON text with sorted keys and fixed float formatting."""
    return _encode(obj, indent, 0) + "\n"


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    def cell(v):
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, (float, np.floating)):
            return format_float(v)
        if v is None:
            return ""
        text = str(v)
        if any(ch in text for ch in ',"\n'):
            text = '"' + text.replace('"', '""') + '"'
        return text

    lines = [",".join(header)]
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"row has {len(row)} cells, header has {len(header)}")
        lines.append(",".join(cell(v) for v in row))
    return "\n".join(lines) + "\n"


def matrix_csv(matrix: np.ndarray) -> str:
    """Dense row-major matrix; first row and column hold the positions."""
    n = matrix.shape[0]
    header = ["p"] + [str(i) for i in range(n)]
    return csv_text(header, ([i] + [float(v) for v in matrix[i]] for i in range(n)))


def shade(sim: float) -> int:
    """Grey level for a similarity: ``round(255 * (1 - sim))``, half up, clamped to 0..255.

    1 maps to black, 0 and below to white.
    """
    return min(255, max(0, math.floor(255.0 * (1.0 - float(sim)) + 0.5)))


def heatmap_svg(matrix: np.ndarray, cell: int = 4, title: str = "") -> str:
    n = matrix.shape[0]
    size = n * cell
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}" shape-rendering="crispEdges">',
    ]
    if title:
        out.append(f"<title>{escape(title)}</title>")
    for i in range(n):
        for j in range(n):
            g = shade(matrix[i, j])
            out.append(
                f'<rect x="{j * cell}" y="{i * cell}" width="{cell}" height="{cell}" fill="rgb({g},{g},{g})"/>'
            )
    out.append("</svg>")
    return "\n".join(out) + "\n"


SCHEMA_NAMES = (
    "config",
    "diagnostics",
    "strategy",
    "intrinsic",
    "similarity",
    "compare",
    "norepeat",
    "verify",
)


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    text = resources.files("riflex").joinpath("data", "schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def validate(instance, name: str) -> None:
    """Raise ``jsonschema.ValidationError`` unless ``instance`` matches schema ``name``."""
    jsonschema.validate(instance, load_schema(name), cls=jsonschema.Draft202012Validator)
