"""CSV readers and writers for networks and result tables.

Floats are written with ``repr`` so files round-trip exactly and reruns
produce byte-identical artifacts.
"""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Any, Iterable, Sequence

from .errors import ParseError
from .graph import (
    EDGE_COLUMNS,
    NODE_COLUMNS,
    LoadReport,
    SignedDigraph,
    load_network_report,
)

_GENDER_LETTERS = {"male": "M", "female": "F", "nonbinary": "NB"}


def _fmt(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_rows(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def read_rows(path: str | Path, columns: Sequence[str]) -> list[dict[str, str]]:
    """Read a CSV with a mandatory header that must contain ``columns``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ParseError(1, f"{path}: missing header")
        missing = [c for c in columns if c not in reader.fieldnames]
        if missing:
            raise ParseError(1, f"{path}: header lacks columns {missing}")
        rows = []
        for line, rec in enumerate(reader, start=2):
            if None in rec or any(v is None for v in rec.values()):
                raise ParseError(line, f"{path}: wrong number of fields")
            rows.append(rec)
        return rows


def read_network(nodes_path: str | Path, edges_path: str | Path) -> tuple[SignedDigraph, LoadReport]:
    """Load the nodes and edges CSV files; errors name the file line number."""
    nodes = read_rows(nodes_path, NODE_COLUMNS)
    edges = read_rows(edges_path, EDGE_COLUMNS)
    return load_network_report(nodes, edges, first_row=2)


def _answers(prosociality: float) -> tuple[int, int, int]:
    # canonical answers: the first s questions answered selfishly
    s = round(3 * (1 - prosociality))
    return tuple(1 if k < s else 0 for k in range(3))  # type: ignore[return-value]


def write_network(g: SignedDigraph, nodes_path: str | Path, edges_path: str | Path) -> None:
    """Write ``g`` in the nodes/edges CSV schemas.

    Only the prosociality level is stored on a node, so the individual answers
    are written in a canonical form with the same score.
    """
    node_rows = []
    for n in g.nodes:
        a = g.attributes(n)
        node_rows.append(
            [a.student_id, a.school_id, a.course, a.class_group,
             _GENDER_LETTERS[a.gender], a.crt, *_answers(a.prosociality)]
        )
    write_rows(nodes_path, NODE_COLUMNS, node_rows)
    write_rows(edges_path, EDGE_COLUMNS, ([i, j, w] for i, j, w in g.edges()))
