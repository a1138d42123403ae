import cmath
import json

import numpy as np
import pytest
from scipy.special import fresnel

from wavecross.crossing import (NonTransversalCrossingError, TransferParams, crossing_data, detect_crossing,
                                gamma_coupling, phase_lemma_check, phi_blocks, transfer_gaussian,
                                transfer_polygaussian, transfer_quadrature)
from wavecross.dynamics import initial_bundle, integrate_to
from wavecross.gaussian import WeylPolyOp, SiegelError, unit_gaussian, weyl_apply
from wavecross.models import builtin_model, make_two_level

Y = np.linspace(-8, 8, 801)


def rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def band1_trace(model, z0, t_end):
    return integrate_to(model, 1, initial_bundle(model, 1, 0.0, z0), t_end)


# ------------------------------------------------------------- detection

def test_time_only_gap():
    m = make_two_level("0", "t - 1", ("cos(x)", "sin(x)", "0"))
    ev = detect_crossing(m, band1_trace(m, [0.3, 0.0], 2.0))
    assert abs(ev.t_flat - 1) < 1e-12
    assert abs(ev.mu_flat - 0.5) < 1e-12
    assert np.allclose(ev.alpha_flat, 0) and np.allclose(ev.beta_flat, 0)
    # static projectors and v = 0: no coupling
    assert ev.zero_transfer


def test_schrodinger_crossing_parameters():
    m = builtin_model("schrodinger_crossing_1d")
    ev = detect_crossing(m, band1_trace(m, [-1.0, 2.0], 3.0))
    q, p = ev.z_flat
    assert abs(q) < 1e-10
    assert ev.alpha_flat[0] == 0.0
    # (alpha, beta) = J grad f with f = x, mu = (d_t f + {v, f}) / 2 = p / 2
    assert abs(ev.beta_flat[0] + 1) < 1e-12
    assert abs(ev.mu_flat - p / 2) < 1e-10
    # energy conservation on band 1: p^2/2 + x = 2 - 1 at the start, so p = sqrt(2) at x = 0
    assert abs(p - np.sqrt(2.0)) < 1e-9


def test_bloch_crossing_parameters():
    m = builtin_model("bloch_crossing_1d", force=1.0)
    ev = detect_crossing(m, band1_trace(m, [0.0, 1.0], 3.0))
    assert abs(ev.z_flat[1]) < 1e-10
    assert abs(ev.alpha_flat[0] - 1.0) < 1e-12
    assert ev.beta_flat[0] == 0.0
    assert abs(ev.mu_flat + 0.5) < 1e-10


def test_gapped_model_has_no_crossing():
    m = builtin_model("gapped_two_level_1d")
    assert detect_crossing(m, band1_trace(m, [-1.0, 1.0], 5.0)) is None


def test_event_invariants():
    m = builtin_model("schrodinger_crossing_1d")
    ev = detect_crossing(m, band1_trace(m, [-1.0, 2.0], 5.0))
    assert abs(ev.f_value) < 1e-12
    assert np.linalg.norm(m.projector(1, ev.t_flat, ev.z_flat) @ ev.v2_flat) < 1e-8
    assert abs(np.linalg.norm(ev.v2_flat) - 1) < 1e-12
    assert ev.gamma_flat > 0
    # the trajectory comes back through x = 0 later and is flagged
    assert ev.later_crossings
    data = json.loads(ev.dumps())
    assert data["alpha_flat"] == [0.0]


def test_gamma_symmetry():
    m = builtin_model("schrodinger_crossing_2d")
    ev = detect_crossing(m, band1_trace(m, [-1.0, 0.5, 2.0, 0.2], 3.0))
    g1, _ = gamma_coupling(m, ev.t_flat, ev.z_flat, ev.v1_flat, using=1)
    g2, _ = gamma_coupling(m, ev.t_flat, ev.z_flat, ev.v1_flat, using=2)
    assert abs(g1 - g2) < 1e-8


def test_diagonal_model_spawns_nothing():
    m = make_two_level("xi**2/2", "x", (1, 0, 0))
    ev = detect_crossing(m, band1_trace(m, [-1.0, 2.0], 2.0))
    assert ev.gamma_flat == 0.0 and ev.zero_transfer


def test_non_transversal_rejected():
    m = make_two_level("0", "x", ("cos(x)", "sin(x)", "0"))
    b = initial_bundle(m, 1, 0.0, [0.0, 0.0])
    with pytest.raises(NonTransversalCrossingError):
        crossing_data(m, b)


# --------------------------------------------------------------- transfer

def test_fresnel_constant():
    # int exp(i mu s^2) ds = sqrt(i pi / mu), independent check through Fresnel integrals
    big = 4000.0
    s, c = fresnel(big)
    for mu in (1.0, 2.5, -0.7):
        val = 2 * np.sqrt(np.pi / (2 * abs(mu))) * (c + 1j * np.sign(mu) * s)
        assert abs(TransferParams(mu, [0.0], [0.0]).prefactor - val) < 1e-3


def test_transfer_without_deformation():
    g = unit_gaussian([[0.5 + 1j]])
    pref, out = transfer_gaussian((0.8, [0.0], [0.0]), g)
    assert np.allclose(out.width, g.width)
    assert np.isclose(pref, cmath.sqrt(1j * np.pi / 0.8))


def test_transfer_alpha_zero_width():
    b, mu = 1.3, 0.6
    _, out = transfer_gaussian((mu, [0.0], [b]), unit_gaussian([[1j]]))
    assert np.isclose(out.width[0, 0], 1j - b ** 2 / (2 * mu))


def test_transfer_worked_case():
    g = unit_gaussian([[2j]])
    pref, out = transfer_gaussian((1.0, [1.0], [1.0]), g)
    assert abs(out.width[0, 0] - (11 / 5 + 8j / 5)) < 1e-14
    ref = transfer_quadrature(1.0, [1.0], [1.0], g, Y)
    assert rel(pref * out.evaluate(Y[:, None]), ref) < 1e-6


@pytest.mark.parametrize("mu,al,be,gam", [(0.3, 0.5, -1.2, 1 + 1j), (-2.0, 1.0, 0.4, 0.3 + 0.5j),
                                          (0.05, 0.0, 1.0, 2j)])
def test_transfer_gaussian_vs_quadrature(mu, al, be, gam):
    g = unit_gaussian([[gam]])
    pref, out = transfer_gaussian((mu, [al], [be]), g)
    y = np.linspace(-25, 25, 2001)
    assert rel(pref * out.evaluate(y[:, None]), transfer_quadrature(mu, [al], [be], g, y)) < 1e-6


def test_phi_blocks_example():
    bl = phi_blocks([1.0], [0.0], -0.25)
    assert np.allclose(bl.matrix, [[1, -0.5], [0, 1]])
    assert np.allclose(phi_blocks([0.7], [0.3], 0.0).matrix, np.eye(2))


def test_polynomial_transfer_example():
    g = unit_gaussian([[1j]])
    yg = weyl_apply(WeylPolyOp.position(1, 0), g)
    pref, out = transfer_polygaussian((1.0, [1.0], [0.0]), yg)
    ref = transfer_quadrature(1.0, [1.0], [0.0], yg, Y)
    assert rel(pref * out.evaluate(Y[:, None]), ref) < 1e-5
    # symbol y composed with Phi(-1/4) is y - eta/2: T op(y) = op(y - eta/2) T
    pg, tg = transfer_polygaussian((1.0, [1.0], [0.0]), g)
    expected = weyl_apply(WeylPolyOp(1, {(1, 0): 1.0, (0, 1): -0.5}), tg)
    assert np.allclose(out.evaluate(Y), expected.evaluate(Y), atol=1e-12)


def test_polynomial_transfer_trivial_reduces():
    g = unit_gaussian([[1 + 1j]])
    a = transfer_gaussian((0.7, [0.4], [0.9]), g)
    b = transfer_polygaussian((0.7, [0.4], [0.9]), g)
    assert np.isclose(a[0], b[0])
    assert np.allclose(a[1].evaluate(Y), b[1].evaluate(Y), atol=1e-12)


def test_fourier_intertwining():
    from wavecross.gaussian import fourier
    g = unit_gaussian([[0.3 + 1.1j]])
    mu, al, be = 0.9, 0.6, -0.4
    p1, t1 = transfer_gaussian((mu, [al], [be]), g)
    lhs = fourier(t1).scaled(p1)
    p2, t2 = transfer_gaussian((mu, [be], [-al]), fourier(g))
    assert np.allclose(lhs.evaluate(Y), p2 * t2.evaluate(Y), atol=1e-12)


def test_transfer_quadrature_rejects_zero_mu():
    with pytest.raises(NonTransversalCrossingError):
        transfer_quadrature(0.0, [1.0], [0.0], unit_gaussian([[1j]]), Y)


def test_siegel_preserved_for_random_parameters(rng):
    for _ in range(500):
        mu = rng.choice([-1, 1]) * rng.uniform(0.01, 5)
        a, b = rng.normal(size=1), rng.normal(size=1)
        gam = rng.normal() + 1j * rng.uniform(0.05, 3)
        _, out = transfer_gaussian((mu, a, b), unit_gaussian([[gam]]))
        assert out.width[0, 0].imag > 0


# ------------------------------------------------------------ phase lemma

@pytest.mark.parametrize("name,z0", [("schrodinger_crossing_1d", [-1.0, 2.0]), ("bloch_crossing_1d", [0.0, 1.0])])
def test_phase_lemma(name, z0):
    m = builtin_model(name)
    ev = detect_crossing(m, band1_trace(m, z0, 3.0))
    res = phase_lemma_check(m, ev)
    assert res["zeta_dot_rel_err"] < 1e-4
    assert res["lambda_ddot_rel_err"] < 1e-4
    assert abs(res["lambda_0"]) < 1e-12
    assert abs(res["lambda_dot_fd"]) < 1e-8
