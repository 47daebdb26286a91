"""Versioned text serialization of parameter dicts.

Layout::

    format=paxnn/1
    block <name> <rows> <cols>
    <row of whitespace-separated decimals>
    ...

Values are written with 17 significant digits, so float64 round-trips are
bit-exact. 1-D arrays are stored as a single row (``rows == 1``) and come
back 1-D; every 2-D block keeps its shape. Blocks are sorted by name so
equal dicts always produce identical bytes.
"""

from __future__ import annotations

import io

import numpy as np

from ..errors import ParseError

FORMAT_LINE = "format=paxnn/1"


def dumps_params(params: dict) -> str:
    out = io.StringIO()
    out.write(FORMAT_LINE + "\n")
    for name in sorted(params):
        a = np.asarray(params[name], dtype=np.float64)
        if a.ndim == 1:
            rows = [a]
            out.write(f"block {name} 1 {a.shape[0]}\n")
        elif a.ndim == 2:
            rows = a
            out.write(f"block {name} {a.shape[0]} {a.shape[1]}\n")
        else:
            raise ParseError(f"block {name!r} has unsupported ndim {a.ndim}")
        for row in rows:
            out.write(" ".join(f"{v:.17g}" for v in row) + "\n")
    return out.getvalue()


def write_params(path, params: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_params(params))


def loads_params(text: str) -> dict:
    lines = text.splitlines()
    if not lines or lines[0].strip() != FORMAT_LINE:
        raise ParseError(f"missing or unsupported format header (want {FORMAT_LINE!r})")
    params = {}
    ln = 1
    while ln < len(lines):
        line = lines[ln].strip()
        if not line:
            ln += 1
            continue
        parts = line.split()
        if len(parts) != 4 or parts[0] != "block":
            raise ParseError("malformed block header", [(ln + 1, line)])
        name, rows, cols = parts[1], int(parts[2]), int(parts[3])
        values = []
        ln += 1
        for r in range(rows):
            if ln >= len(lines):
                raise ParseError(f"block {name!r} truncated", [(ln, "<eof>")])
            try:
                row = np.array([float(v) for v in lines[ln].split()], dtype=np.float64)
            except ValueError:
                raise ParseError(f"block {name!r} has a non-numeric value",
                                 [(ln + 1, lines[ln][:60])])
            if row.shape[0] != cols:
                raise ParseError(
                    f"block {name!r} row has {row.shape[0]} values, expected {cols}",
                    [(ln + 1, lines[ln][:60])])
            values.append(row)
            ln += 1
        a = np.vstack(values) if rows > 1 else values[0].reshape(1, -1)
        params[name] = a[0] if rows == 1 else a
    return params


def read_params(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return loads_params(fh.read())
