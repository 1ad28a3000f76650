import numpy as np
import pytest

from multiwf.estimates import SigmaParams, operator_geometry
from multiwf.grid import GridField, make_field
from multiwf.probe import (
    AliasingError,
    TruncationError,
    _fit_M,
    _verdict,
    default_directions,
    fourier_decay_probe,
    inclusion_consistency,
    iterate_growth_probe,
    iterate_wavefront_probe,
    spectral_apply,
    truncation_bound_check,
    truncation_sequence,
)
from multiwf.symbol import parse_operator
from multiwf.weights import QuasiconicSector

from conftest import HEAT, LAPLACIAN

CENTER = (np.pi, np.pi)


def op(text, n=2):
    return parse_operator(text, n)


def sector(P, d):
    _, data = operator_geometry(P)
    return QuasiconicSector.around(data.q, d)


@pytest.fixture(scope="module")
def lap():
    P = op(LAPLACIAN)
    NP, data = operator_geometry(P)
    return P, NP, data


def test_verdict_rule():
    assert _verdict([1, 1, 1]) == "inconclusive"
    assert _verdict([1, 1.02, 0.3, 1.05]) == "microregular"
    assert _verdict([1, 3, 5, 8]) == "not_microregular"
    assert _verdict([1, 3, 1.1, 1.1]) == "inconclusive"


@pytest.mark.parametrize("N", [1, 3, 8])
def test_truncation_cutoff_shape(N):
    grid = make_field("gaussian", counts=256)
    chi = truncation_sequence((CENTER, 0.4), 1.6, N, grid).samples.real
    x = grid.axes()[0]
    i = int(np.argmin(np.abs(x - np.pi)))
    assert chi[i, i] == pytest.approx(1.0, abs=1e-12)
    assert chi.max() <= 1 + 1e-9 and chi.min() >= -1e-9
    inner = np.abs(x - np.pi) <= 0.4
    outer = np.abs(x - np.pi) >= 2.0 + 1e-9
    np.testing.assert_allclose(chi[np.ix_(inner, inner)], 1.0, atol=1e-9)
    np.testing.assert_allclose(chi[outer, :], 0.0, atol=1e-9)


def test_truncation_errors():
    grid = make_field("gaussian", counts=64)
    with pytest.raises(TruncationError):
        truncation_sequence((CENTER, 0.4), 1.6, 40, grid)
    with pytest.raises(TruncationError):
        truncation_sequence(((0.5, 0.5), 0.4), 1.6, 1, grid)


def test_truncation_bound_single_constant(lap):
    _, NP, data = lap
    grid = make_field("gaussian", counts=512)
    rep = truncation_bound_check((CENTER, 0.4), 1.6, grid, NP, data)
    assert rep["max_margin"] <= 1.1


def test_spectral_apply_mode():
    u = make_field("mode", k=(1, 0), counts=64)
    v = spectral_apply(op("D1"), u)
    np.testing.assert_allclose(v.samples, u.samples, atol=1e-10)
    u = make_field("mode", k=(1,), counts=64, lengths=4.0)
    v = spectral_apply(op("D1", 1), u)
    np.testing.assert_allclose(v.samples, (2 * np.pi / 4.0) * u.samples, atol=1e-10)


def test_spectral_apply_laplacian_gaussian():
    sig = 0.3
    u = make_field("gaussian", counts=256, sigma=sig, amplitude=1.0)
    d = u.points() - np.pi
    r2 = np.sum(d**2, axis=-1)
    exact = -(r2 / sig**4 - 2 / sig**2) * np.exp(-r2 / (2 * sig**2))
    v = spectral_apply(op(LAPLACIAN), u)
    np.testing.assert_allclose(v.samples, exact, atol=1e-8)


def test_spectral_apply_variable_coefficient_on_constant():
    u = GridField(2, (32, 32), (2 * np.pi,) * 2, np.ones((32, 32)))
    v = spectral_apply(op("x1*D1"), u)
    np.testing.assert_allclose(v.samples, 0, atol=1e-12)


def test_spectral_apply_linear(rng):
    a = make_field("gaussian", counts=128, sigma=0.2)
    b = make_field("packet", counts=128, sigma=0.2)
    P = op("(1 + x1)*D1^2 + i*D2")
    lhs = spectral_apply(P, GridField.like(a, 2 * a.samples - 3j * b.samples)).samples
    rhs = 2 * spectral_apply(P, a).samples - 3j * spectral_apply(P, b).samples
    np.testing.assert_allclose(lhs, rhs, atol=1e-9 * np.abs(rhs).max())


def test_aliasing_detected():
    u = make_field("mode", k=(63, 0), counts=128)
    with pytest.raises(AliasingError):
        spectral_apply(op("D1"), u, N=3)
    try:
        spectral_apply(op("D1"), u, N=3)
    except AliasingError as exc:
        assert exc.N == 3


def test_zero_field_microregular(lap):
    P, NP, data = lap
    z = GridField(2, (512, 512), (2 * np.pi,) * 2, np.zeros((512, 512)))
    rep = fourier_decay_probe(z, CENTER, sector(P, (1, 0)), NP, data)
    assert rep.microregular
    rep = iterate_wavefront_probe(P, z, CENTER, sector(P, (1, 0)), NP, data)
    assert rep.microregular


def test_short_range_inconclusive(lap):
    P, NP, data = lap
    u = make_field("gaussian", counts=512)
    rep = fourier_decay_probe(u, CENTER, sector(P, (1, 0)), NP, data, N_range=range(2, 5))
    assert rep.verdict == "inconclusive"


def test_gaussian_microregular_all_directions(lap):
    P, NP, data = lap
    u = make_field("gaussian", counts=512)
    for d in default_directions():
        assert fourier_decay_probe(u, CENTER, sector(P, d), NP, data).microregular


def test_jump_directional(lap):
    P, NP, data = lap
    u = make_field("jump", counts=512)
    for d, want in [((1, 0), "not_microregular"), ((-1, 0), "not_microregular"), ((0, 1), "microregular"), ((0, -1), "microregular")]:
        assert fourier_decay_probe(u, CENTER, sector(P, d), NP, data).verdict == want


def test_monotone_in_s(lap):
    P, NP, data = lap
    for name in ("jump", "gaussian", "ridge"):
        u = make_field(name, counts=512)
        for d in [(1, 0), (1, 1), (0, 1)]:
            reps = [fourier_decay_probe(u, CENTER, sector(P, d), NP, data, s=s) for s in (1.0, 1.5, 2.0, 3.0)]
            for lo, hi in zip(reps, reps[1:]):
                assert all(m_hi <= m_lo for (_, m_lo), (_, m_hi) in zip(lo.margins, hi.margins))
                if lo.microregular:
                    assert hi.microregular


def test_localized_transform_polynomial_bound():
    fields = [make_field(name, counts=512) for name in ("gaussian", "jump", "ridge", "packet")]
    chi = truncation_sequence((CENTER, 0.4), 1.6, 1, fields[0]).samples
    base = np.ones(fields[0].counts, dtype=bool)
    hats = [np.abs(np.fft.fftn(chi * f.samples) * f.cell_volume) for f in fields]
    M = max(_fit_M(h, fields[0], base) for h in hats)
    r = np.linalg.norm(fields[0].xi, axis=-1)
    low = r <= 0.25 * r.max()
    C = max(float(np.max(h[low] / (1 + r[low]) ** M)) for h in hats)
    for h in hats:
        assert np.all(h <= 1.05 * C * (1 + r) ** M)


def test_Pu_inherits_microregularity(lap):
    _, NP, data = lap
    for text in (LAPLACIAN, HEAT):
        P = op(text)
        NP, data = operator_geometry(P)
        for name in ("gaussian", "ridge", "packet"):
            u = make_field(name, counts=512)
            Pu = spectral_apply(P, u, 1)
            for d in default_directions():
                sec = sector(P, d)
                if fourier_decay_probe(u, CENTER, sec, NP, data).microregular:
                    assert fourier_decay_probe(Pu, CENTER, sec, NP, data).verdict != "not_microregular"


def test_mode_growth_geometric():
    u = make_field("mode", k=(3, 2), counts=64)
    P = op(LAPLACIAN)
    rep = iterate_growth_probe(P, u, N_max=6)
    assert rep.microregular and abs(rep.s_hat) < 1e-6
    for s in (1.0, 2.0):
        assert iterate_growth_probe(P, u, s=s).microregular
    logs = rep.details["log_norms"]
    steps = np.diff([v for _, v in logs]) if isinstance(logs[0], (list, tuple)) else np.diff(logs)
    np.testing.assert_allclose(steps, np.log(13.0), rtol=1e-9)


def test_gevrey_index_recovered():
    u = make_field("spectral-gevrey", theta=0.5, n=1, counts=4096)
    rep = iterate_growth_probe(op("D1^2", 1), u, s=2, N_max=6)
    assert 1.7 <= rep.s_hat <= 2.3


def test_gaussian_growth_passes(lap):
    P, _, data = lap
    u = make_field("gaussian", counts=512)
    rep = iterate_growth_probe(P, u, K=(CENTER, 0.4), data=data, s=1)
    assert rep.microregular and rep.s_hat <= 1.2


def test_iterate_wavefront_gaussian(lap):
    P, NP, data = lap
    u = make_field("gaussian", counts=512)
    for d in [(1, 0), (1, 1), (0, -1)]:
        assert iterate_wavefront_probe(P, u, CENTER, sector(P, d), NP, data).microregular


def test_iterate_wavefront_transverse_contrast():
    u = make_field("jump", counts=512)
    P = op("D2^2")
    lap = op(LAPLACIAN)
    NP, data = operator_geometry(lap)
    sec = sector(lap, (1, 0))
    transverse = iterate_wavefront_probe(P, u, CENTER, sec, NP, data)
    assert transverse.verdict == "not_microregular"
    # normal derivatives amplify the 1/|xi_1| tail until it reaches the Nyquist band
    with pytest.raises(AliasingError) as err:
        iterate_wavefront_probe(lap, u, CENTER, sec, NP, data)
    assert err.value.N == 1


def test_inclusion_laplacian_gaussian():
    u = make_field("gaussian", counts=512)
    rep = inclusion_consistency(op(LAPLACIAN), u)
    assert rep["violations"] == 0


def test_inclusion_wave_diagonal_vacuous():
    u = make_field("gaussian", counts=512)
    d = np.array([1.0, 1.0]) / np.sqrt(2)
    rep = inclusion_consistency(op("D1^2 - D2^2"), u, directions=[tuple(d)])
    cell = rep["cells"][0]
    assert cell["implications"]["inclusion"] == "vacuous"


@pytest.mark.parametrize("scale", [1e-3, 1e3])
def test_verdicts_scale_invariant(lap, scale):
    P, NP, data = lap
    u = make_field("jump", counts=512)
    v = GridField.like(u, scale * u.samples)
    for d in [(1, 0), (0, 1)]:
        sec = sector(P, d)
        a = fourier_decay_probe(u, CENTER, sec, NP, data)
        b = fourier_decay_probe(v, CENTER, sec, NP, data)
        assert a.verdict == b.verdict
        np.testing.assert_allclose([m for _, m in a.margins], [m for _, m in b.margins], rtol=1e-9)
    g = make_field("gaussian", counts=512)
    h = GridField.like(g, scale * g.samples)
    a = iterate_growth_probe(P, g, K=(CENTER, 0.4), data=data)
    b = iterate_growth_probe(P, h, K=(CENTER, 0.4), data=data)
    assert a.verdict == b.verdict and a.C == pytest.approx(b.C, rel=1e-9)
