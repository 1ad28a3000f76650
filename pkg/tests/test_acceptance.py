"""Acceptance suite: one check per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (lines appear in the terminal
summary) or directly with ``python tests/test_acceptance.py``.
"""

import contextlib
import io
import itertools
import math
import os
import sys
import time
from fractions import Fraction as F

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from conftest import HEAT, LAPLACIAN, WAVE, lp_member  # noqa: E402

from multiwf.cli import main as cli_main  # noqa: E402
from multiwf.estimates import (  # noqa: E402
    characteristic_sample,
    check_multi_quasielliptic,
    gevrey_index_s_prime,
    operator_geometry,
)
from multiwf.grid import make_field  # noqa: E402
from multiwf.polytope import contains, newton_polyhedron  # noqa: E402
from multiwf.probe import (  # noqa: E402
    fourier_decay_probe,
    inclusion_consistency,
    iterate_growth_probe,
    truncation_bound_check,
)
from multiwf.symbol import parse_operator  # noqa: E402
from multiwf.weights import QuasiconicSector, anisotropy, k_of, weight_P  # noqa: E402

SEED = 20240917
CENTER = (math.pi, math.pi)
RESULTS: dict[int, str] = {}


def _record(num, title, ok, detail, elapsed, limit):
    within = elapsed < limit
    status = "PASS" if ok and within else "FAIL"
    line = f"[{status}] criterion {num:2d} {title}: {detail} ({elapsed:.2f}s, limit {limit:g}s)"
    RESULTS[num] = line
    print(line)
    return ok and within


def _timed(fn):
    t0 = time.perf_counter()
    ok, detail = fn()
    return ok, detail, time.perf_counter() - t0


# ---------------------------------------------------------------------------


def polyhedron_exactness():
    rng = np.random.default_rng(SEED)
    mismatches = checked = built = 0
    while built < 50:
        n = int(rng.integers(2, 5))
        hi = 4 if n < 4 else 3
        S = {tuple(int(v) for v in rng.integers(0, hi, n)) for _ in range(int(rng.integers(2, 6)))}
        NP = newton_polyhedron(S, n)
        if NP.degenerate:
            continue
        built += 1
        pts = [(0,) * n] + sorted(S)
        box = [max(p[j] for p in pts) for j in range(n)]
        for alpha in itertools.product(*(range(b + 1) for b in box)):
            checked += 1
            mismatches += contains(NP, alpha) != lp_member(pts, alpha)
    return mismatches == 0, f"{mismatches} mismatches over {checked} lattice points in 50 supports"


def simplex_example():
    bad = 0
    for m in [(2, 4), (2, 4, 6)]:
        n = len(m)
        NP = newton_polyhedron([tuple(mj if i == j else 0 for i in range(n)) for j, mj in enumerate(m)], n)
        d = anisotropy(NP)
        M = max(m)
        bad += NP.facets != (tuple(F(1, mj) for mj in m),)
        bad += d.mu_j != tuple(F(mj) for mj in m)
        bad += d.mu != M
        bad += d.q != tuple(F(M, mj) for mj in m)
        for alpha in itertools.product(range(7), repeat=n):
            if sum(alpha) <= 6:
                bad += k_of(NP, alpha) != sum(F(a) * qj for a, qj in zip(alpha, d.q)) / M
    return bad == 0, f"{bad} exact mismatches for m=(2,4) and m=(2,4,6)"


def weight_identities():
    rng = np.random.default_rng(SEED)
    xi = rng.normal(size=(1000, 2)) * rng.uniform(0.1, 100, size=(1000, 1))
    NP, d = operator_geometry(parse_operator(LAPLACIAN, 2))
    e1 = np.max(np.abs(weight_P(NP, d, xi) / np.linalg.norm(xi, axis=-1) - 1))
    NP, d = operator_geometry(parse_operator(HEAT, 2))
    e2 = np.max(np.abs(weight_P(NP, d, xi) / np.sqrt(np.abs(xi[:, 0]) + xi[:, 1] ** 2) - 1))
    err = max(e1, e2)
    return err <= 1e-12, f"max relative error {err:.1e}"


def mqe_constants():
    heat = check_multi_quasielliptic(parse_operator(HEAT, 2), seed=SEED)
    lap = check_multi_quasielliptic(parse_operator(LAPLACIAN, 2), seed=SEED)
    wave = check_multi_quasielliptic(parse_operator(WAVE, 2), seed=SEED)
    ok_heat = heat.holds and math.sqrt(2) * 0.98 <= heat.c_est <= math.sqrt(2) * 1.02
    ok_lap = lap.holds and 0.999 <= lap.c_est <= 1.001
    w = np.abs(wave.worst_point["xi"]) if wave.worst_point else np.zeros(2)
    ok_wave = wave.verdict == "fails" and abs(w[0] - w[1]) <= 1e-9 * max(w.max(), 1)
    detail = f"heat c={heat.c_est:.5f}, laplacian c={lap.c_est:.5f}, wave {wave.verdict} at xi={w.round(4).tolist()}"
    return ok_heat and ok_lap and ok_wave, detail


def s_prime_formula():
    hand = [
        ((1, 1, 0, 2, 2), 1),
        ((1, 1, 0, 2, 1), 2),
        ((2, F(1, 2), 0, 3, 3), 4),
    ]
    exact = all(gevrey_index_s_prime(*args) == want for args, want in hand)
    ss = [F(1), F(3, 2), F(2), F(3)]
    mus = [F(2), F(4), F(6), F(8)]
    rhos = [F(k, 12) for k in range(1, 13)]
    deltas = [F(k, 12) for k in range(0, 12)]
    mp_fracs = [F(k, 12) for k in range(1, 13)]
    points = violations = 0

    def val(s, rho, delta, mu, mp):
        try:
            return gevrey_index_s_prime(s, rho, delta, mu, mp)
        except ValueError:
            return None

    for s, mu, rho, delta, f in itertools.product(ss, mus, rhos, deltas, mp_fracs):
        mp = f * mu
        base = val(s, rho, delta, mu, mp)
        if base is None:
            continue
        points += 1
        if base < s:
            violations += 1
        # nondecreasing in s, delta and mu; nonincreasing in rho and mu'
        for nb, sign in [
            (val(s + F(1, 2), rho, delta, mu, mp), 1),
            (val(s, rho, delta + F(1, 12), mu, mp), 1),
            (val(s, rho + F(1, 12), delta, mu, mp), -1),
            (val(s, rho, delta, mu, mp + mu / 12), -1),
            (val(s, rho, delta, mu + 2, mp), 1),
        ]:
            if nb is not None and sign * (nb - base) < 0:
                violations += 1
    ok = exact and violations == 0 and points >= 10**4
    return ok, f"hand values {'match' if exact else 'differ'}; {violations} violations over {points} lattice points"


def characteristic_sampler():
    wave = characteristic_sample(parse_operator(WAVE, 2), samples=4096)
    heat = characteristic_sample(parse_operator(HEAT, 2), samples=4096)
    lap = characteristic_sample(parse_operator(LAPLACIAN, 2), samples=4096)
    c = np.asarray(wave.get("clusters", []))
    cell = 2 * math.pi / 4096
    ok = len(c) == 4 and not heat["directions"] and not lap["directions"]
    err = float("nan")
    if len(c) == 4:
        ang = np.sort(np.mod(np.arctan2(c[:, 1], c[:, 0]), 2 * math.pi))
        err = float(np.max(np.abs(ang - (math.pi / 4 + np.arange(4) * math.pi / 2))))
        ok = ok and err <= cell
    detail = f"wave {len(c)} clusters, max angle error {err:.2e} (cell {cell:.2e}); heat {len(heat['directions'])}, laplacian {len(lap['directions'])} hits"
    return ok, detail


def truncation_sequence_bound():
    NP, d = operator_geometry(parse_operator(LAPLACIAN, 2))
    grid = make_field("gaussian", counts=512)
    rep = truncation_bound_check((CENTER, 0.4), 1.6, grid, NP, d, N_values=range(1, 9), max_order=3)
    return rep["max_margin"] <= 1.1, f"max margin {rep['max_margin']:.4f} with one C per order"


def fourier_directionality():
    P = parse_operator(LAPLACIAN, 2)
    NP, d = operator_geometry(P)
    u = make_field("jump", counts=512)
    want = {(1, 0): "not_microregular", (-1, 0): "not_microregular", (0, 1): "microregular", (0, -1): "microregular"}
    got = {}
    for direction in want:
        sec = QuasiconicSector.around(d.q, direction)
        got[direction] = fourier_decay_probe(u, CENTER, sec, NP, d, s=1, N_range=range(2, 9)).verdict
    return got == want, ", ".join(f"{k}: {v}" for k, v in got.items())


def iterate_index():
    u = make_field("spectral-gevrey", theta=0.5, n=1, counts=4096)
    rg = iterate_growth_probe(parse_operator("D1^2", 1), u, s=2, N_max=6)
    P = parse_operator(LAPLACIAN, 2)
    _, d = operator_geometry(P)
    g = make_field("gaussian", counts=512)
    rl = iterate_growth_probe(P, g, K=(CENTER, 0.4), data=d, s=1, N_max=6)
    ok = 1.7 <= rg.s_hat <= 2.3 and rl.s_hat <= 1.2 and rl.microregular
    return ok, f"gevrey s_hat={rg.s_hat:.3f}; gaussian s_hat={rl.s_hat:.3f}, {rl.verdict}"


def inclusion_matrix():
    ops = [LAPLACIAN, HEAT, WAVE]
    fields = {name: make_field(name, counts=512) for name in ("gaussian", "ridge", "packet")}
    cells = violations = inconclusive = 0
    rows = []
    for text in ops:
        P = parse_operator(text, 2)
        for name, u in fields.items():
            rep = inclusion_consistency(P, u, s=1, seed=SEED)
            cells += len(rep["cells"])
            violations += rep["violations"]
            inconclusive += rep["inconclusive_cells"]
            rows.append(f"{text}/{name}: {rep['violations']}v {rep['inconclusive_cells']}i")
    frac = inconclusive / cells
    ok = violations == 0 and frac <= 0.2 and cells == 72
    return ok, f"{cells} cells, {violations} violations, {inconclusive} inconclusive ({frac:.0%}) [{'; '.join(rows)}]"


def _cli(argv):
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        cli_main(argv)
    return buf.getvalue()


def determinism():
    runs = {
        "4": ["check-mqe", "--op", HEAT, "--seed", str(SEED), "--no-timestamp"],
        "8": ["probe-wf", "--op", LAPLACIAN, "--make", "jump", "--directions", "1,0;-1,0;0,1;0,-1",
              "--N-range", "2:8", "--seed", str(SEED), "--no-timestamp"],
        "9": ["probe-iter", "--op", "D1^2", "--dim", "1", "--make", "spectral-gevrey", "--param", "theta=0.5",
              "--param", "n=1", "--param", "counts=4096", "--s", "2", "--N-max", "6", "--seed", str(SEED),
              "--no-timestamp"],
    }
    same = {k: _cli(v) == _cli(v) for k, v in runs.items()}
    return all(same.values()), ", ".join(f"criterion {k} {'identical' if v else 'differs'}" for k, v in same.items())


CRITERIA = [
    (1, "polyhedron exactness vs LP oracle", polyhedron_exactness, 10),
    (2, "simplex example closed forms", simplex_example, 1),
    (3, "weight identities", weight_identities, 1),
    (4, "multi-quasielliptic constants", mqe_constants, 30),
    (5, "s' formula and monotonicity", s_prime_formula, 5),
    (6, "characteristic sampler", characteristic_sampler, 10),
    (7, "truncation sequence bound", truncation_sequence_bound, 30),
    (8, "Fourier probe directionality", fourier_directionality, 60),
    (9, "iterate index recovery", iterate_index, 60),
    (10, "inclusion consistency matrix", inclusion_matrix, 600),
    (11, "determinism of reports", determinism, 600),
]


@pytest.mark.parametrize("num,title,fn,limit", CRITERIA, ids=[f"criterion_{c[0]:02d}" for c in CRITERIA])
def test_criterion(num, title, fn, limit):
    ok, detail, elapsed = _timed(fn)
    assert _record(num, title, ok, detail, elapsed, limit), RESULTS[num]


if __name__ == "__main__":
    failed = 0
    for num, title, fn, limit in CRITERIA:
        ok, detail, elapsed = _timed(fn)
        failed += not _record(num, title, ok, detail, elapsed, limit)
    sys.exit(1 if failed else 0)
