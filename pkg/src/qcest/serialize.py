"""Deterministic JSON/CSV rendering shared by the file formats and reports.

Reals are rendered with 17 significant digits, which round-trips IEEE-754
doubles exactly; dict key order is preserved, so identical inputs produce
byte-identical output.
"""

from __future__ import annotations

import json

import numpy as np


def fmt_real(x) -> str:
    x = float(x)
    if x == 0.0:
        x = 0.0  # normalise -0.0
    return format(x, ".17g")


def complex_pair(z) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def dumps(obj, indent: int = 0) -> str:
    """Render JSON with fixed key order and 17-significant-digit reals."""
    pad = " " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = ",\n".join(
            f'{pad}  {json.dumps(str(k))}: {dumps(v, indent + 2)}' for k, v in obj.items())
        return "{\n" + items + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if len(obj) == 0:
            return "[]"
        flat = all(isinstance(v, (int, float, np.floating, np.integer)) and not isinstance(v, bool)
                   for v in obj)
        if flat:
            return "[" + ", ".join(_scalar(v) for v in obj) + "]"
        items = ",\n".join(f"{pad}  {dumps(v, indent + 2)}" for v in obj)
        return "[\n" + items + "\n" + pad + "]"
    return _scalar(obj)


def _scalar(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return "null"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt_real(v)
    if isinstance(v, str):
        return json.dumps(v)
    raise TypeError(f"cannot serialise {type(v)}")


def dump_json(obj, path=None) -> str:
    text = dumps(obj) + "\n"
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


def dump_csv(header: list[str], rows: list[list], path=None) -> str:
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, (float, np.floating)):
                cells.append(fmt_real(v))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    text = "\n".join(lines) + "\n"
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text
