"""Anisotropy data, order function, frequency weights and quasiconic sectors."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.stats import qmc

from .polytope import NewtonPolyhedron, _dot, _fmt

__all__ = [
    "AnisotropyData",
    "QuasiconicSector",
    "IrregularPolyhedronError",
    "anisotropy",
    "k_of",
    "weight_P",
    "weight_q",
    "dilate",
    "q_normalize",
    "sector_contains",
    "quasisphere_samples",
    "DEFAULT_SECTOR_RADIUS",
]

DEFAULT_SECTOR_RADIUS = 0.15


class IrregularPolyhedronError(ValueError):
    pass


@dataclass(frozen=True)
class AnisotropyData:
    mu_j: tuple[Fraction, ...]
    mu: Fraction
    q: tuple[Fraction, ...]

    @property
    def q_float(self) -> np.ndarray:
        return np.array([float(v) for v in self.q])

    def to_dict(self) -> dict:
        return {
            "mu_j": [_fmt(v) for v in self.mu_j],
            "mu": _fmt(self.mu),
            "q": [_fmt(v) for v in self.q],
        }


def _require_regular(NP: NewtonPolyhedron) -> None:
    if not NP.regular:
        raise IrregularPolyhedronError("the Newton polyhedron is not regular")


def anisotropy(NP: NewtonPolyhedron) -> AnisotropyData:
    """``mu_j = max_a 1/a_j``, ``mu = max_j mu_j``, ``q_j = mu / mu_j``."""
    _require_regular(NP)
    mu_j = tuple(max(1 / a[j] for a in NP.facets) for j in range(NP.n))
    mu = max(mu_j)
    return AnisotropyData(mu_j, mu, tuple(mu / m for m in mu_j))


def k_of(NP: NewtonPolyhedron, alpha: Sequence) -> Fraction:
    """Order function: the smallest ``t`` with ``alpha / t`` in the polyhedron."""
    _require_regular(NP)
    if not any(alpha):
        return Fraction(0)
    return max(_dot(alpha, a) for a in NP.facets)


def weight_P(NP: NewtonPolyhedron, data: AnisotropyData, xi) -> np.ndarray:
    """``(sum_i |xi^(2 s_i)|^(1/mu))^(1/2)`` over the nonzero vertices ``s_i``.

    Works on arrays of shape ``(..., n)``.
    """
    xi = np.abs(np.asarray(xi, dtype=float))
    mu = float(data.mu)
    total = np.zeros(xi.shape[:-1])
    with np.errstate(divide="ignore"):
        logx = np.log(xi)
    for v in NP.nonzero_vertices:
        expo = np.zeros(xi.shape[:-1])
        for j, s in enumerate(v):
            if s:
                expo = expo + (2.0 * s / mu) * logx[..., j]
        total = total + np.exp(expo)
    return np.sqrt(total)


def weight_q(q, xi) -> np.ndarray:
    """``(sum_j |xi_j|^(2/q_j))^(1/2)``."""
    q = np.asarray([float(v) for v in q])
    xi = np.abs(np.asarray(xi, dtype=float))
    return np.sqrt(np.sum(xi ** (2.0 / q), axis=-1))


def dilate(q, t, xi) -> np.ndarray:
    """Quasihomogeneous dilation ``xi_j -> t^q_j xi_j``; ``t`` may be an array."""
    q = np.asarray([float(v) for v in q])
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("dilation parameter must be positive")
    return np.asarray(xi, dtype=float) * t[..., None] ** q


def q_normalize(q, xi) -> np.ndarray:
    """Project onto the unit q-quasisphere along the dilation orbit."""
    r = weight_q(q, xi)
    if np.any(r == 0):
        raise ValueError("the origin has no quasiconic direction")
    return dilate(q, 1.0 / r, xi)


@dataclass(frozen=True)
class QuasiconicSector:
    """Dilation-invariant neighbourhood of a direction.

    Contains ``xi`` iff its projection on the unit q-quasisphere lies within
    Euclidean distance ``radius`` of ``anchor``.
    """

    q: tuple
    anchor: tuple[float, ...]
    radius: float = DEFAULT_SECTOR_RADIUS

    @classmethod
    def around(cls, q, direction, radius: float = DEFAULT_SECTOR_RADIUS) -> "QuasiconicSector":
        if radius <= 0:
            raise ValueError("sector radius must be positive")
        anchor = q_normalize(q, np.asarray(direction, dtype=float))
        return cls(tuple(q), tuple(float(v) for v in anchor), float(radius))

    def contains(self, xi) -> np.ndarray:
        return sector_contains(self, xi)

    def to_dict(self) -> dict:
        return {
            "q": [_fmt(Fraction(v)) if isinstance(v, Fraction) else v for v in self.q],
            "anchor": list(self.anchor),
            "radius": self.radius,
        }


def sector_contains(sector: QuasiconicSector, xi):
    xi = np.asarray(xi, dtype=float)
    proj = q_normalize(sector.q, xi)
    d = np.linalg.norm(proj - np.asarray(sector.anchor), axis=-1)
    out = d <= sector.radius
    return bool(out) if out.ndim == 0 else out


def quasisphere_samples(q, count: int, seed: int = 0) -> np.ndarray:
    """Deterministic points of the unit q-quasisphere.

    A unit Euclidean vector ``w`` maps to ``sign(w_j)|w_j|^q_j``, which lies
    on ``|.|_q = 1``.  In two dimensions ``w`` runs over ``count`` equally
    spaced angles starting at 0; otherwise a scrambled Halton sequence
    pushed through the normal quantile function is used.
    """
    q = np.asarray([float(v) for v in q])
    n = len(q)
    if n == 1:
        w = np.array([[1.0], [-1.0]])
    elif n == 2:
        th = 2 * np.pi * np.arange(count) / count
        w = np.stack([np.cos(th), np.sin(th)], axis=-1)
    else:
        from scipy.special import ndtri

        u = qmc.Halton(d=n, scramble=True, seed=seed).random(count)
        w = ndtri(np.clip(u, 1e-12, 1 - 1e-12))
        w /= np.linalg.norm(w, axis=-1, keepdims=True)
    return np.sign(w) * np.abs(w) ** q


def sector_samples(sector: QuasiconicSector, count: int, seed: int = 0) -> np.ndarray:
    """Points of the sector on the unit q-quasisphere (anchor included)."""
    n = len(sector.anchor)
    anchor = np.asarray(sector.anchor)
    u = qmc.Halton(d=n, scramble=True, seed=seed).random(4 * count)
    cand = anchor + sector.radius * (2 * u - 1)
    cand = cand[np.linalg.norm(cand, axis=-1) > 0]
    proj = q_normalize(sector.q, cand)
    keep = proj[np.linalg.norm(proj - anchor, axis=-1) <= sector.radius][: count - 1]
    return np.vstack([anchor[None, :], keep])
