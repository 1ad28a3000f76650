import itertools
from fractions import Fraction

import numpy as np
import pytest
from scipy.optimize import linprog

LAPLACIAN = "D1^2 + D2^2"
HEAT = "i*D1 + D2^2"
WAVE = "D1^2 - D2^2"
FOURTH = "D1^4 + D2^4 + D1^2*D2^3"


def lp_member(points, alpha) -> bool:
    """Is ``alpha`` a convex combination of ``points``?  Feasibility LP."""
    pts = np.asarray(points, dtype=float)
    m, n = pts.shape
    A_eq = np.vstack([pts.T, np.ones((1, m))])
    b_eq = np.concatenate([np.asarray(alpha, dtype=float), [1.0]])
    res = linprog(np.zeros(m), A_eq=A_eq, b_eq=b_eq, bounds=[(0, None)] * m, method="highs")
    return res.status == 0


def hull_2d_facets(points):
    """Brute force: lines through point pairs whose normal keeps every point on the ``<= 1`` side."""
    pts = [tuple(Fraction(v) for v in p) for p in points if any(p)]
    out = set()
    for p, r in itertools.combinations(pts, 2):
        det = p[0] * r[1] - p[1] * r[0]
        if det == 0:
            continue
        a = ((r[1] - p[1]) / det, (p[0] - r[0]) / det)
        if all(x[0] * a[0] + x[1] * a[1] <= 1 for x in pts):
            out.add(a)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for num in sorted(results):
            terminalreporter.write_line(results[num])
