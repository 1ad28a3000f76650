"""Sampling certificates for multi-quasiellipticity and the symbol estimates.

Every verdict here is empirical: a statement about a fixed, seeded set of
sample points on a ladder of quasispherical shells ``|xi|_q = r``.  Reports
carry the ladder, the sample counts and the worst sample found.
"""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.stats import qmc

from .polytope import NewtonPolyhedron, _dot, _fmt, polyhedron_of
from .symbol import OperatorSymbol, ZERO, diff_coef
from .weights import (
    AnisotropyData,
    QuasiconicSector,
    anisotropy,
    dilate,
    quasisphere_samples,
    sector_samples,
    weight_P,
)

__all__ = [
    "SigmaParams",
    "EstimateReport",
    "IrregularOperatorError",
    "check_multi_quasielliptic",
    "check_sigma",
    "fit_sigma_params",
    "gevrey_index_s_prime",
    "principal_part",
    "characteristic_sample",
    "operator_geometry",
    "DEFAULT_LADDER",
]

DEFAULT_LADDER = (1e1, 1e2, 1e3, 1e4)
STABLE_REL = 0.05
VANISH_REL = 1e-10
MQE_FLOOR = 1e-12


class IrregularOperatorError(ValueError):
    pass


def operator_geometry(P: OperatorSymbol) -> tuple[NewtonPolyhedron, AnisotropyData]:
    NP = polyhedron_of(P)
    if not NP.regular:
        raise IrregularOperatorError(f"operator {P} has an irregular Newton polyhedron")
    return NP, anisotropy(NP)


@dataclass(frozen=True)
class SigmaParams:
    rho: float
    delta: float
    mu_prime: float
    s: float = 1.0
    alpha_max: int = 4
    beta_max: int | None = None

    def validate(self, mu) -> None:
        mu = float(mu)
        if not 0 <= self.delta < self.rho <= 1:
            raise ValueError(f"need 0 <= delta < rho <= 1, got rho={self.rho}, delta={self.delta}")
        if not self.delta * mu < self.mu_prime <= mu + 1e-12:
            raise ValueError(f"need delta*mu < mu' <= mu, got mu'={self.mu_prime}, mu={mu}")
        if self.s < 1:
            raise ValueError("Gevrey index s must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class EstimateReport:
    verdict: str
    c_est: float | None
    worst_point: dict | None
    samples_used: int
    radius_ladder: list[float]
    details: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.verdict == "holds"

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "c_est": self.c_est,
            "worst_point": self.worst_point,
            "samples_used": self.samples_used,
            "radius_ladder": list(self.radius_ladder),
            "details": self.details,
        }


def _check_ladder(ladder) -> list[float]:
    ladder = sorted(float(r) for r in ladder)
    if not ladder:
        raise ValueError("empty radius ladder")
    if ladder[0] <= 0:
        raise ValueError("ladder radii must be positive")
    return ladder


def _point(x, xi, alpha=None, beta=None) -> dict:
    n = len(xi)
    return {
        "x": [float(v) for v in x],
        "xi": [float(v) for v in xi],
        "alpha": list(alpha) if alpha is not None else [0] * n,
        "beta": list(beta) if beta is not None else [0] * n,
    }


def check_multi_quasielliptic(
    P: OperatorSymbol,
    x0=None,
    ladder: Sequence[float] = DEFAULT_LADDER,
    samples_per_sphere: int = 4096,
    seed: int = 0,
) -> EstimateReport:
    """Sample ``m(r) = min |P(x0, xi)| / |xi|_P^mu`` on the shells ``|xi|_q = r``.

    ``holds`` when ``m`` is above a positive floor and moves by less than 5%
    between the two largest radii (``c_est = 1/m`` there); ``fails`` when
    ``P`` vanishes at a sample; ``inconclusive`` otherwise.
    """
    ladder = _check_ladder(ladder)
    NP, data = operator_geometry(P)
    x0 = np.zeros(P.n) if x0 is None else np.asarray(x0, dtype=float)
    mu = float(data.mu)
    eta = quasisphere_samples(data.q, samples_per_sphere, seed)
    mins = []
    worst = None
    worst_ratio = np.inf
    for r in ladder:
        xi = dilate(data.q, r, eta)
        ratio = np.abs(P.evaluate(x0, xi)) / weight_P(NP, data, xi) ** mu
        k = int(np.argmin(ratio))
        mins.append(float(ratio[k]))
        if ratio[k] < worst_ratio:
            worst_ratio = float(ratio[k])
            worst = _point(x0, xi[k])
    details = {"min_ratio": mins, "seed": seed}
    used = len(ladder) * len(eta)
    if worst_ratio < VANISH_REL:
        return EstimateReport("fails", None, worst, used, ladder, details)
    last = mins[-1]
    stable = len(mins) >= 2 and abs(last - mins[-2]) < STABLE_REL * last
    if last > MQE_FLOOR and stable:
        return EstimateReport("holds", 1.0 / last, worst, used, ladder, details)
    return EstimateReport("inconclusive", 1.0 / last if last > 0 else None, worst, used, ladder, details)


# ---------------------------------------------------------------------------
# condition on the symbol estimates


def _multi_indices(n: int, max_order: int):
    for total in range(max_order + 1):
        for c in itertools.product(range(total + 1), repeat=n):
            if sum(c) == total:
                yield c


class _SigmaSamples:
    """Symbol data at fixed samples, reused across parameter choices."""

    def __init__(self, P, x0, sector, U_radius, ladder, samples, seed, alpha_max, beta_max, x_samples=64):
        self.P = P
        self.NP, self.data = operator_geometry(P)
        n = P.n
        mu = float(self.data.mu)
        self.ladder = ladder
        x0 = np.asarray(x0, dtype=float)
        if P.constant_coefficients:
            xs = x0[None, :]
        else:
            u = qmc.Halton(d=n, scramble=True, seed=seed).random(8 * x_samples)
            v = 2 * u - 1
            v = v[np.linalg.norm(v, axis=-1) <= 1][: x_samples - 1]
            xs = np.vstack([x0[None, :], x0 + U_radius * v])
        self.xs = xs
        eta = sector_samples(sector, samples, seed)
        self.eta = eta
        if beta_max is None:
            beta_max = int(mu)
        alphas = list(_multi_indices(n, alpha_max)) if not P.constant_coefficients else [(0,) * n]
        betas = list(_multi_indices(n, beta_max))
        self.pairs = []
        for a in alphas:
            if not any(diff_coef(c, a) != ZERO for c, _ in P.terms):
                continue
            for b in betas:
                if (any(a) or any(b)) and any(all(bj <= gj for bj, gj in zip(b, g)) for g in P.alphas):
                    self.pairs.append((a, b))
        qf = self.data.q_float
        X = xs[:, None, :]
        self.shells = []
        for r in ladder:
            xi = dilate(self.data.q, r, eta)
            Xi = xi[None, :, :]
            absP = np.abs(P.evaluate(X, Xi))
            wP = np.broadcast_to(weight_P(self.NP, self.data, Xi), absP.shape)
            derivs = {pr: np.abs(P.derivative(pr[0], pr[1], X, Xi)) for pr in self.pairs}
            self.shells.append((xi, absP, wP, derivs))
        self.qf = qf
        self.mu = mu
        self.count = len(xs) * len(eta) * len(ladder)

    def evaluate(self, params: SigmaParams) -> EstimateReport:
        mu, s = self.mu, params.s
        fam1, fam2 = [], []
        worst1 = worst2 = None
        best1 = best2 = -np.inf
        vanished = None
        for xi, absP, wP, derivs in self.shells:
            tiny = absP <= VANISH_REL * wP ** mu
            if np.any(tiny):
                i, j = np.unravel_index(int(np.argmax(tiny)), tiny.shape)
                vanished = _point(self.xs[i], xi[j])
                break
            r1 = wP ** params.mu_prime / absP
            k = np.unravel_index(int(np.argmax(r1)), r1.shape)
            fam1.append(float(r1[k]))
            if r1[k] > best1:
                best1 = float(r1[k])
                worst1 = _point(self.xs[k[0]], xi[k[1]])
            shell_max = 0.0
            for (a, b), d in derivs.items():
                aq = float(np.dot(a, self.qf))
                logw = s * mu * aq * np.log(aq) if aq > 0 else 0.0
                expo = params.delta * sum(a) - params.rho * sum(b)
                ratio = d / (absP * wP ** expo)
                k = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
                val = float(np.exp((np.log(ratio[k]) - logw) / (sum(a) + 1))) if ratio[k] > 0 else 0.0
                if val > shell_max:
                    shell_max = val
                if val > best2:
                    best2 = val
                    worst2 = _point(self.xs[k[0]], xi[k[1]], a, b)
            fam2.append(shell_max)
        details = {"params": params.to_dict(), "pairs_checked": len(self.pairs)}
        if vanished is not None:
            details["reason"] = "symbol vanishes in the sector"
            return EstimateReport("fails", None, vanished, self.count, list(self.ladder), details)
        details["lower_bound_constants"] = fam1
        details["derivative_constants"] = fam2
        v1, v2 = _stability(fam1), _stability(fam2)
        details["excess"] = max(_excess(fam1), _excess(fam2))
        c_est = max(fam1 + fam2)
        worst = worst1 if best1 >= best2 else worst2
        if v1 == "holds" and v2 == "holds":
            return EstimateReport("holds", c_est, worst, self.count, list(self.ladder), details)
        verdict = "fails" if "fails" in (v1, v2) else "inconclusive"
        return EstimateReport(verdict, c_est, worst, self.count, list(self.ladder), details)


def _excess(seq: list[float]) -> float:
    if len(seq) < 2:
        return 1.0
    prev = max(seq[:-1])
    return float("inf") if prev == 0 and seq[-1] > 0 else (seq[-1] / prev if prev > 0 else 0.0)


def _stability(seq: list[float]) -> str:
    """``holds`` when the top shell needs no larger constant than the ones below."""
    if len(seq) < 2 or not np.all(np.isfinite(seq)):
        return "inconclusive"
    if _excess(seq) <= 1 + STABLE_REL:
        return "holds"
    if len(seq) >= 3 and seq[-1] > (1 + STABLE_REL) * seq[-2] > (1 + STABLE_REL) ** 2 * seq[-3]:
        return "fails"
    return "inconclusive"


def _default_sector(P, xi0, sector):
    if sector is not None:
        return sector
    _, data = operator_geometry(P)
    return QuasiconicSector.around(data.q, xi0)


def check_sigma(
    P: OperatorSymbol,
    x0,
    xi0,
    params: SigmaParams,
    sector: QuasiconicSector | None = None,
    U_radius: float = 0.5,
    ladder: Sequence[float] = DEFAULT_LADDER,
    samples: int = 256,
    seed: int = 0,
) -> EstimateReport:
    """Test the lower bound and the derivative-quotient bounds on ``U x sector``.

    The lower bound ``|xi|_P^mu' <= c |P|`` and the quotients
    ``|d_x^a d_xi^b P| <= c^(|a|+1) <a,q>^(s mu <a,q>) |P| |xi|_P^(delta|a| - rho|b|)``
    are turned into per-shell constants.  Both families must stop growing at
    the top of the ladder for ``holds``.
    """
    _, data = operator_geometry(P)
    params.validate(data.mu)
    ladder = _check_ladder(ladder)
    sector = _default_sector(P, xi0, sector)
    smp = _SigmaSamples(P, x0, sector, U_radius, ladder, samples, seed, params.alpha_max, params.beta_max)
    rep = smp.evaluate(params)
    rep.details["sector"] = sector.to_dict()
    rep.details["seed"] = seed
    return rep


DEFAULT_RHO_GRID = (0.25, 0.5, 0.75, 1.0)
DEFAULT_DELTA_GRID = (0.0, 0.25, 0.5)
DEFAULT_MU_PRIME_FRACTIONS = (0.25, 0.5, 0.75, 1.0)


def fit_sigma_params(
    P: OperatorSymbol,
    x0,
    xi0,
    s: float = 1.0,
    rho_grid: Sequence[float] = DEFAULT_RHO_GRID,
    delta_grid: Sequence[float] = DEFAULT_DELTA_GRID,
    mu_prime_grid: Sequence[float] | None = None,
    sector: QuasiconicSector | None = None,
    U_radius: float = 0.5,
    ladder: Sequence[float] = DEFAULT_LADDER,
    samples: int = 256,
    seed: int = 0,
    alpha_max: int = 4,
    beta_max: int | None = None,
) -> tuple[SigmaParams, EstimateReport]:
    """Grid search for the best parameters at which ``check_sigma`` holds.

    Preference order: largest ``mu'``, then largest ``rho``, then smallest
    ``delta``.  ``mu_prime_grid`` defaults to ``mu * (1/4, 1/2, 3/4, 1)``.
    If nothing holds, the candidate closest to holding is returned with an
    ``inconclusive`` (or ``fails``) report.
    """
    _, data = operator_geometry(P)
    mu = float(data.mu)
    if mu_prime_grid is None:
        mu_prime_grid = [f * mu for f in DEFAULT_MU_PRIME_FRACTIONS]
    cands = []
    for mp, rho, delta in itertools.product(mu_prime_grid, rho_grid, delta_grid):
        p = SigmaParams(float(rho), float(delta), float(mp), s, alpha_max, beta_max)
        try:
            p.validate(mu)
        except ValueError:
            continue
        cands.append(p)
    if not cands:
        raise ValueError("no admissible grid point")
    cands.sort(key=lambda p: (-p.mu_prime, -p.rho, p.delta))
    ladder = _check_ladder(ladder)
    sector = _default_sector(P, xi0, sector)
    smp = _SigmaSamples(P, x0, sector, U_radius, ladder, samples, seed, alpha_max, beta_max)
    closest = None
    for p in cands:
        rep = smp.evaluate(p)
        rep.details["sector"] = sector.to_dict()
        rep.details["seed"] = seed
        if rep.holds:
            return p, rep
        ex = rep.details.get("excess", float("inf"))
        if closest is None or ex < closest[0]:
            closest = (ex, p, rep)
    _, p, rep = closest
    if rep.verdict != "fails":
        rep.verdict = "inconclusive"
    rep.details["no_grid_point_holds"] = True
    return p, rep


def gevrey_index_s_prime(s, rho, delta, mu, mu_prime):
    """``max(s mu / (mu' - delta mu), s / (rho - delta))``.

    Exact when all inputs are ints or Fractions; floats give a float.
    """
    if rho == delta or mu_prime == delta * mu:
        raise ValueError("need rho > delta and mu' > delta*mu")
    if not (0 <= delta < rho <= 1 and delta * mu < mu_prime <= mu):
        raise ValueError("parameters outside 0 <= delta < rho <= 1, delta*mu < mu' <= mu")
    vals = (s, rho, delta, mu, mu_prime)
    if all(isinstance(v, (int, Fraction)) for v in vals):
        s, rho, delta, mu, mu_prime = (Fraction(v) for v in vals)
    return max(s * mu / (mu_prime - delta * mu), s / (rho - delta))


def principal_part(P: OperatorSymbol, a=None) -> OperatorSymbol:
    """Terms of ``P`` lying on the facet ``<alpha, a> = 1``.

    ``a`` defaults to the single facet of a quasihomogeneous polyhedron.
    """
    NP, _ = operator_geometry(P)
    if a is None:
        if len(NP.facets) != 1:
            raise ValueError("polyhedron has several facets; pass one explicitly")
        a = NP.facets[0]
    a = tuple(Fraction(v) for v in a)
    if a not in NP.facets:
        raise ValueError(f"{[_fmt(v) for v in a]} is not a facet normal of the polyhedron")
    return P.sub_symbol([al for al in P.alphas if _dot(al, a) == 1])


def _cyclic_clusters(idx: np.ndarray, total: int) -> list[list[int]]:
    if idx.size == 0:
        return []
    idx = sorted(int(i) for i in idx)
    groups = [[idx[0]]]
    for i in idx[1:]:
        if i - groups[-1][-1] <= 1:
            groups[-1].append(i)
        else:
            groups.append([i])
    if len(groups) > 1 and groups[0][0] == 0 and groups[-1][-1] == total - 1:
        groups[0] = groups.pop() + groups[0]
    return groups


def characteristic_sample(
    P: OperatorSymbol,
    x0=None,
    samples: int = 4096,
    threshold: float = 1e-3,
    seed: int = 0,
    radius: float = DEFAULT_LADDER[-1],
) -> dict:
    """Directions on the unit q-quasisphere where the symbol degenerates.

    For a one-facet polyhedron this is where ``|P_q(x0, eta)|`` falls below
    ``threshold`` times its maximum over the samples.  Otherwise the ratio
    ``|P(x0, xi)| / |xi|_P^mu`` at ``|xi|_q = radius`` is compared with
    ``threshold`` directly.
    """
    NP, data = operator_geometry(P)
    x0 = np.zeros(P.n) if x0 is None else np.asarray(x0, dtype=float)
    eta = quasisphere_samples(data.q, samples, seed)
    if len(NP.facets) == 1:
        Pq = principal_part(P)
        vals = np.abs(Pq.evaluate(x0, eta))
        scale = float(vals.max()) if vals.size else 1.0
        hits = np.nonzero(vals < threshold * scale)[0]
        mode = "principal_part"
    else:
        xi = dilate(data.q, radius, eta)
        vals = np.abs(P.evaluate(x0, xi)) / weight_P(NP, data, xi) ** float(data.mu)
        hits = np.nonzero(vals < threshold)[0]
        mode = "mqe_ratio"
    out = {
        "mode": mode,
        "threshold": threshold,
        "samples": len(eta),
        "directions": eta[hits].tolist(),
    }
    if P.n == 2:
        centers = []
        for g in _cyclic_clusters(hits, len(eta)):
            best = min(g, key=lambda i: vals[i])
            centers.append(eta[best].tolist())
        out["clusters"] = centers
    return out
