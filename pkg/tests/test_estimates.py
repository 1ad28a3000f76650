import itertools
from fractions import Fraction as F

import numpy as np
import pytest

from multiwf.estimates import (
    IrregularOperatorError,
    SigmaParams,
    characteristic_sample,
    check_multi_quasielliptic,
    check_sigma,
    fit_sigma_params,
    gevrey_index_s_prime,
    principal_part,
)
from multiwf.symbol import eval_symbol, parse_operator
from multiwf.weights import dilate

from conftest import FOURTH, HEAT, LAPLACIAN, WAVE

DIAG = np.array([1.0, 1.0]) / np.sqrt(2)


def op(text):
    return parse_operator(text, 2)


def test_mqe_laplacian():
    rep = check_multi_quasielliptic(op(LAPLACIAN))
    assert rep.holds and abs(rep.c_est - 1) < 1e-3


def test_mqe_heat():
    rep = check_multi_quasielliptic(op(HEAT))
    assert rep.holds and abs(rep.c_est / np.sqrt(2) - 1) < 0.02


def test_mqe_wave_fails_on_diagonal():
    rep = check_multi_quasielliptic(op(WAVE))
    assert rep.verdict == "fails"
    xi = np.abs(rep.worst_point["xi"])
    assert xi[0] == pytest.approx(xi[1], rel=1e-9)


def test_mqe_irregular_rejected():
    with pytest.raises(IrregularOperatorError):
        check_multi_quasielliptic(op("D1^2"))


def test_sigma_laplacian_holds():
    for d in [(1, 0), (0, 1), (1, 1), (-1, 2)]:
        rep = check_sigma(op(LAPLACIAN), [0, 0], d, SigmaParams(1, 0, 2))
        assert rep.holds and rep.c_est <= 2 + 1e-9


def test_sigma_wave_diagonal_fails():
    rep = check_sigma(op(WAVE), [0, 0], DIAG, SigmaParams(1, 0, 2))
    assert not rep.holds


def test_sigma_variable_coefficients_run():
    P = op("(2 + sin(x1))*D1^2 + D2^2")
    rep = check_sigma(P, [0.1, 0.2], (1, 0), SigmaParams(1, 0, 2))
    assert rep.holds


@pytest.mark.parametrize("text", [LAPLACIAN, HEAT])
def test_fit_finds_extreme_point(text):
    params, rep = fit_sigma_params(op(text), [0, 0], (1, 1))
    assert rep.holds
    assert (params.rho, params.delta, params.mu_prime) == (1.0, 0.0, 2.0)


def test_fit_wave_diagonal_never_holds():
    _, rep = fit_sigma_params(op(WAVE), [0, 0], DIAG)
    assert rep.verdict in ("fails", "inconclusive") and rep.details["no_grid_point_holds"]


def test_s_prime_examples():
    assert gevrey_index_s_prime(1, 1, 0, 2, 2) == 1
    assert gevrey_index_s_prime(1, 1, 0, 2, 1) == 2
    assert gevrey_index_s_prime(2, F(1, 2), 0, 3, 3) == 4


def test_s_prime_rejects_degenerate():
    with pytest.raises(ValueError):
        gevrey_index_s_prime(1, F(1, 2), F(1, 2), 2, 2)
    with pytest.raises(ValueError):
        gevrey_index_s_prime(1, 1, F(1, 2), 2, 1)


def test_s_prime_monotone_lattice():
    mu = 4
    fr = [F(k, 6) for k in range(7)]
    for s, rho, delta, mp in itertools.product([1, F(3, 2), 2], fr, fr, [F(k, 2) for k in range(1, 9)]):
        if not (delta < rho and delta * mu < mp):
            continue
        base = gevrey_index_s_prime(s, rho, delta, mu, mp)
        assert base >= s
        if rho + F(1, 6) <= 1:
            assert gevrey_index_s_prime(s, rho + F(1, 6), delta, mu, mp) <= base
        if mp + F(1, 2) <= mu:
            assert gevrey_index_s_prime(s, rho, delta, mu, mp + F(1, 2)) <= base
        assert gevrey_index_s_prime(s + 1, rho, delta, mu, mp) > base


def test_principal_part_examples():
    P = op(HEAT)
    assert set(principal_part(P, (1, F(1, 2))).alphas) == {(1, 0), (0, 2)}
    assert set(principal_part(op("D1^2 + D2^2 + D1")).alphas) == {(2, 0), (0, 2)}
    assert set(principal_part(op(FOURTH), (F(1, 4), F(1, 6))).alphas) == {(4, 0), (2, 3)}
    with pytest.raises(ValueError):
        principal_part(op(FOURTH))


def test_principal_part_quasihomogeneous(rng):
    P = op("i*D1 + D2^2 + 3*D2 + 7")
    Pq = principal_part(P)
    q = (2, 1)
    xi = rng.normal(size=(20, 2))
    for t in (0.5, 3.0):
        lhs = eval_symbol(Pq, np.zeros(2), dilate(q, t, xi))
        np.testing.assert_allclose(lhs, t**2 * eval_symbol(Pq, np.zeros(2), xi), rtol=1e-12)


def test_characteristic_examples():
    assert characteristic_sample(op(HEAT))["directions"] == []
    assert characteristic_sample(op(LAPLACIAN))["directions"] == []
    out = characteristic_sample(op(WAVE), samples=4096)
    cells = 2 * np.pi / 4096
    clusters = np.asarray(out["clusters"])
    assert len(clusters) == 4
    ang = np.sort(np.mod(np.arctan2(clusters[:, 1], clusters[:, 0]), 2 * np.pi))
    np.testing.assert_allclose(ang, np.pi / 4 + np.arange(4) * np.pi / 2, atol=cells)


def test_mqe_scale_consistency():
    a = check_multi_quasielliptic(op(HEAT))
    b = check_multi_quasielliptic(op("3*i*D1 + 3*D2^2"))
    assert b.c_est == pytest.approx(a.c_est / 3, rel=1e-9)


def test_deterministic_reports():
    a = check_sigma(op(HEAT), [0, 0], (1, 1), SigmaParams(1, 0, 2), seed=4).to_dict()
    b = check_sigma(op(HEAT), [0, 0], (1, 1), SigmaParams(1, 0, 2), seed=4).to_dict()
    assert a == b
