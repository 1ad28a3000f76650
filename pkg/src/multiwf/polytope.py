"""Exact Newton polyhedra of operator supports.

The Newton polyhedron of a support ``S`` is ``conv({0} u S)``.  Facets not
through the origin are written ``<alpha, a> <= 1``; the set of those normals
``a`` is what the rest of the package calls the facet set.  Facets through
the origin other than the coordinate hyperplanes are kept separately as
``cone_facets`` (``<alpha, b> <= 0``); a regular polyhedron has none.

All arithmetic is over :class:`fractions.Fraction`.  The hull is found by
plain enumeration of ``n``-subsets, which is fine for the small supports of
differential operators (a few dozen points, ``n <= 6``).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Iterable, Sequence

import numpy as np

from .symbol import OperatorSymbol

__all__ = [
    "NewtonPolyhedron",
    "RegularityReport",
    "DegeneratePolyhedronError",
    "support_of",
    "newton_polyhedron",
    "contains",
    "is_regular",
    "polyhedron_of",
]

MultiIndex = tuple[int, ...]
RatVec = tuple[Fraction, ...]


class DegeneratePolyhedronError(ValueError):
    pass


@dataclass(frozen=True)
class NewtonPolyhedron:
    n: int
    vertices: tuple[MultiIndex, ...]
    facets: tuple[RatVec, ...]
    cone_facets: tuple[tuple[int, ...], ...] = ()
    degenerate: bool = False

    @property
    def nonzero_vertices(self) -> tuple[MultiIndex, ...]:
        return tuple(v for v in self.vertices if any(v))

    @property
    def regular(self) -> bool:
        return (
            not self.degenerate
            and not self.cone_facets
            and bool(self.facets)
            and all(c > 0 for a in self.facets for c in a)
        )

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "vertices": [list(v) for v in self.vertices],
            "facets": [[_fmt(c) for c in a] for a in self.facets],
            "cone_facets": [list(b) for b in self.cone_facets],
            "degenerate": self.degenerate,
            "regular": self.regular,
        }


@dataclass(frozen=True)
class RegularityReport:
    operator_constant_support: bool
    polyhedron_regular: bool
    witness: dict | None = field(default=None)

    @property
    def regular(self) -> bool:
        return self.operator_constant_support and self.polyhedron_regular

    def to_dict(self) -> dict:
        return {
            "operator_constant_support": self.operator_constant_support,
            "polyhedron_regular": self.polyhedron_regular,
            "regular": self.regular,
            "witness": self.witness,
        }


def _fmt(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


# ---------------------------------------------------------------------------
# exact linear algebra


def _rref(rows: list[list[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    m = [list(r) for r in rows]
    pivots = []
    r = 0
    ncols = len(m[0]) if m else 0
    for c in range(ncols):
        p = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if p is None:
            continue
        m[r], m[p] = m[p], m[r]
        pv = m[r][c]
        m[r] = [v / pv for v in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m, pivots


def _rank(vectors: Sequence[Sequence]) -> int:
    if not vectors:
        return 0
    return len(_rref([[Fraction(v) for v in row] for row in vectors])[1])


def _solve_ones(points: Sequence[MultiIndex]) -> RatVec | None:
    """Unique ``a`` with ``<p, a> = 1`` for every ``p``, or None if singular."""
    n = len(points[0])
    aug = [[Fraction(v) for v in p] + [Fraction(1)] for p in points]
    m, piv = _rref(aug)
    if piv != list(range(n)):
        return None
    return tuple(m[i][n] for i in range(n))


def _null_vector(points: Sequence[MultiIndex]) -> tuple[int, ...] | None:
    """Primitive integer normal of the hyperplane through 0 and ``n-1`` points."""
    n = len(points[0])
    m, piv = _rref([[Fraction(v) for v in p] for p in points])
    if len(piv) != n - 1:
        return None
    free = next(c for c in range(n) if c not in piv)
    vec = [Fraction(0)] * n
    vec[free] = Fraction(1)
    for row, c in zip(m, piv):
        vec[c] = -row[free]
    den = 1
    for v in vec:
        den = den * v.denominator // gcd(den, v.denominator)
    ints = [int(v * den) for v in vec]
    g = 0
    for v in ints:
        g = gcd(g, abs(v))
    return tuple(v // g for v in ints)


def _dot(p: Sequence, a: Sequence) -> Fraction:
    return sum((Fraction(x) * y for x, y in zip(p, a)), Fraction(0))


# ---------------------------------------------------------------------------


def support_of(P: OperatorSymbol) -> set[MultiIndex]:
    """Multi-indices of the terms of ``P`` (zero coefficients were pruned at parse)."""
    return set(P.alphas)


def _full_dim_hull(n: int, pts: list[MultiIndex]) -> tuple[list[RatVec], list[tuple[int, ...]]]:
    nonzero = [p for p in pts if any(p)]
    facets: dict[RatVec, None] = {}
    for combo in itertools.combinations(nonzero, n):
        a = _solve_ones(combo)
        if a is None or a in facets:
            continue
        if all(_dot(p, a) <= 1 for p in nonzero):
            facets[a] = None
    cones: dict[tuple[int, ...], None] = {}
    if n >= 2:
        for combo in itertools.combinations(nonzero, n - 1):
            b = _null_vector(combo)
            if b is None:
                continue
            vals = [_dot(p, b) for p in nonzero]
            if all(v <= 0 for v in vals):
                pass
            elif all(v >= 0 for v in vals):
                b = tuple(-c for c in b)
            else:
                continue
            # coordinate halfspaces alpha_j >= 0 are implicit
            if sum(1 for c in b if c != 0) == 1:
                continue
            cones[b] = None
    return sorted(facets), sorted(cones)


def _vertices_full(n, pts, facets, cones) -> list[MultiIndex]:
    out = []
    for p in pts:
        tight = [list(a) for a in facets if _dot(p, a) == 1]
        tight += [list(b) for b in cones if _dot(p, b) == 0]
        tight += [[1 if k == j else 0 for k in range(n)] for j in range(n) if p[j] == 0]
        if _rank(tight) == n:
            out.append(p)
    return out


def _vertices_degenerate(n: int, pts: list[MultiIndex]) -> list[MultiIndex]:
    nonzero = [p for p in pts if any(p)]
    r = _rank(nonzero)
    if r == 0:
        return [(0,) * n]
    for cols in itertools.combinations(range(n), r):
        proj = [tuple(p[c] for c in cols) for p in nonzero]
        if _rank(proj) == r:
            break
    sub = newton_polyhedron(proj, r)
    keep = set(sub.vertices)
    return [p for p in pts if tuple(p[c] for c in cols) in keep]


def newton_polyhedron(S: Iterable[Sequence[int]], n: int) -> NewtonPolyhedron:
    """Exact vertices and facet normals of ``conv({0} u S)``.

    A hull that is not full-dimensional is returned with ``degenerate=True``
    and an empty facet set.
    """
    pts = {(0,) * n}
    for s in S:
        s = tuple(int(v) for v in s)
        if len(s) != n or any(v < 0 for v in s):
            raise ValueError(f"support point {s} is not in Z_+^{n}")
        pts.add(s)
    pts_l = sorted(pts)
    if _rank([p for p in pts_l if any(p)]) < n:
        verts = _vertices_degenerate(n, pts_l)
        return NewtonPolyhedron(n, tuple(sorted(verts)), (), (), True)
    facets, cones = _full_dim_hull(n, pts_l)
    verts = _vertices_full(n, pts_l, facets, cones)
    return NewtonPolyhedron(n, tuple(sorted(verts)), tuple(facets), tuple(cones), False)


def polyhedron_of(P: OperatorSymbol) -> NewtonPolyhedron:
    return newton_polyhedron(support_of(P), P.n)


def contains(NP: NewtonPolyhedron, alpha: Sequence) -> bool:
    """Facet membership test ``alpha >= 0`` and ``<alpha, a> <= 1`` for all facets."""
    if NP.degenerate:
        raise DegeneratePolyhedronError("membership via facets needs a full-dimensional polyhedron")
    alpha = [Fraction(v) for v in alpha]
    if any(v < 0 for v in alpha):
        return False
    if any(_dot(alpha, b) > 0 for b in NP.cone_facets):
        return False
    return all(_dot(alpha, a) <= 1 for a in NP.facets)


def is_regular(P: OperatorSymbol, domain_points=None) -> RegularityReport:
    """Regularity verdict for ``P``.

    ``domain_points`` (shape ``(m, n)``), if given, are points of the domain at
    which every coefficient must be nonzero for the support to be constant;
    without them the support is taken as constant on the region where the
    coefficients do not vanish.
    """
    const_support = True
    witness = None
    if domain_points is not None:
        x = np.asarray(domain_points, dtype=float)
        for coef, alpha in P.terms:
            vals = np.abs(coef.evaluate(x))
            if np.any(vals < 1e-13):
                const_support = False
                k = int(np.argmin(vals))
                witness = {"reason": "coefficient vanishes", "alpha": list(alpha), "x": x[k].tolist()}
                break
    NP = polyhedron_of(P)
    if NP.degenerate:
        return RegularityReport(const_support, False, witness or {"reason": "hull not full-dimensional"})
    if NP.cone_facets:
        b = NP.cone_facets[0]
        return RegularityReport(
            const_support, False, witness or {"reason": "facet through the origin", "normal": list(b)}
        )
    for a in NP.facets:
        for j, c in enumerate(a):
            if c <= 0:
                return RegularityReport(
                    const_support,
                    False,
                    witness or {"reason": "non-positive facet component", "facet": [_fmt(v) for v in a], "coordinate": j + 1},
                )
    return RegularityReport(const_support, True, witness)
