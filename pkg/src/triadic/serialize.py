"""Plain-text parameter files for the neural models.

Layout::

    # triadic-params v1
    {"kind": ..., ...}              one line of JSON metadata
    <name> <rows> <cols>            block header, then ``rows`` lines of
    <v00> <v01> ...                 space-separated floats in row-major order

Vectors are stored as ``1 x n`` blocks.  Floats use ``repr`` so a save/load
round trip is exact.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Mapping

import numpy as np

MAGIC = "# triadic-params v1"


def save_params(path: str | Path, meta: Mapping[str, Any], blocks: Mapping[str, np.ndarray]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [MAGIC, json.dumps(dict(meta), sort_keys=True)]
    for name, arr in blocks.items():
        arr = np.atleast_2d(np.asarray(arr, dtype=float))
        lines.append(f"{name} {arr.shape[0]} {arr.shape[1]}")
        lines.extend(" ".join(repr(float(v)) for v in row) for row in arr)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def load_params(path: str | Path) -> tuple[dict[str, Any], dict[str, np.ndarray]]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != MAGIC:
        raise ValueError(f"{path}: not a parameter file")
    meta = json.loads(lines[1])
    blocks: dict[str, np.ndarray] = {}
    pos = 2
    while pos < len(lines):
        name, rows, cols = lines[pos].split()
        rows, cols = int(rows), int(cols)
        data = [[float(v) for v in lines[pos + 1 + r].split()] for r in range(rows)]
        blocks[name] = np.array(data, dtype=float).reshape(rows, cols)
        pos += 1 + rows
    return meta, blocks
