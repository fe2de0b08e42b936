import itertools

import numpy as np
import pytest

from triadic.graph import SignedDigraph, StudentAttributes

FIG1_EDGES = [
    (0, 5, 2), (5, 1, 2),
    (0, 6, -1), (6, 1, 2),
    (0, 3, 1), (1, 3, -2),
    (2, 0, 1), (4, 1, -1),
]


@pytest.fixture
def fig1():
    """Seven-node example: two directed two-paths from 0 to 1, plus 0 -> 3 <- 1."""
    return SignedDigraph(FIG1_EDGES + [(0, 1, 2)], nodes=range(7))


def random_signed_graph(n, density, seed):
    rng = np.random.default_rng(seed)
    mask = rng.random((n, n)) < density
    np.fill_diagonal(mask, False)
    weights = rng.choice([-2, -1, 1, 2], size=(n, n))
    edges = [(int(a), int(b), int(weights[a, b])) for a, b in zip(*np.nonzero(mask))]
    return SignedDigraph(edges, nodes=range(n))


def brute_force_paths(g):
    """(influence, count) for every ordered pair by enumerating every middle node."""
    W = {(i, j): w for i, j, w in g.edges()}
    result = {}
    for i, j in itertools.permutations(g.nodes, 2):
        total = count = 0
        for k in g.nodes:
            if (i, k) in W and (k, j) in W:
                total += W[i, k] * W[k, j]
                count += 1
        result[i, j] = (total, count)
    return result


def student(sid, school="s1", course=1, gender="male", crt=0, prosociality=1.0, group="A"):
    return StudentAttributes(sid, school, course, group, gender, crt, prosociality)


def node_record(sid, school="s1", course=1, gender="M", crt=1, q=(0, 0, 0), group="A"):
    return {"student_id": sid, "school_id": school, "course": str(course), "class_group": group,
            "gender": gender, "crt": str(crt), "q1": str(q[0]), "q2": str(q[1]), "q3": str(q[2])}


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(criterion: int, ok: bool, detail: str) -> bool:
    """Store and print one pass/fail line for an acceptance criterion."""
    ACCEPTANCE[criterion] = (bool(ok), detail)
    print(f"criterion {criterion:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    return bool(ok)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[criterion]
        terminalreporter.write_line(f"criterion {criterion:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
