"""Deterministic CSV emission for the workbench artifacts.

Floats are serialized at full precision (17 significant digits) in a compact
scientific form, e.g. 1.0000000000000000e0, so that identical runs produce
byte-identical files.  NaN/inf never serialize; they are schema violations.
"""
from __future__ import annotations

import math
import os
from typing import Iterable, Sequence

from .errors import CsvSchemaError

KINDS = ("float", "int", "str")


def format_float(x: float) -> str:
    """17-significant-digit scientific notation with a bare exponent."""
    if not math.isfinite(x):
        raise CsvSchemaError(f"non-finite value {x!r} cannot be serialized")
    mantissa, _, exp = f"{float(x):.16e}".partition("e")
    return f"{mantissa}e{int(exp)}"


def _quote(s: str) -> str:
    if any(ch in s for ch in (",", '"', "\n", "\r")):
        return '"' + s.replace('"', '""') + '"'
    return s


def format_cell(value, kind: str) -> str:
    if kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise CsvSchemaError(f"expected a number, got {value!r}")
        return format_float(float(value))
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            # numpy integer scalars pass through int()
            try:
                as_int = int(value)
            except (TypeError, ValueError):
                raise CsvSchemaError(f"expected an integer, got {value!r}") from None
            if as_int != value:
                raise CsvSchemaError(f"expected an integer, got {value!r}")
            return str(as_int)
        return str(int(value))
    if kind == "str":
        return _quote(str(value))
    raise CsvSchemaError(f"unknown column kind {kind!r}")


def emit_csv(rows: Iterable[Sequence], schema: Sequence[tuple[str, str]],
             path: str) -> None:
    """Write rows under a (name, kind) column schema; header always present."""
    for name, kind in schema:
        if kind not in KINDS:
            raise CsvSchemaError(f"column {name!r} has unknown kind {kind!r}")
    lines = [",".join(name for name, _ in schema)]
    for row in rows:
        if len(row) != len(schema):
            raise CsvSchemaError(
                f"row of width {len(row)} does not match schema of width {len(schema)}")
        lines.append(",".join(format_cell(v, kind)
                              for v, (_, kind) in zip(row, schema)))
    data = "\n".join(lines) + "\n"
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(data)
