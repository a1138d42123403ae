import numpy as np
import pytest

from wavecross import polynomial as pl
from wavecross.gaussian import (NotSymplecticError, SiegelError, SymplecticBlocks, UnderResolvedGridWarning,
                                WeylPolyOp, evaluate_on_grid, fourier, inner_product, metaplectic_apply, norm,
                                translate, unit_gaussian, weyl_apply, PolyGaussian, check_siegel)
from wavecross.grid import Grid

from conftest import grid1d, random_symplectic

Y = np.linspace(-9, 9, 4001)


def l2(a, h=Y[1] - Y[0]):
    return np.sqrt(np.sum(np.abs(a) ** 2) * h)


# ------------------------------------------------------------ metaplectic

def test_metaplectic_identity():
    g = unit_gaussian([[1 + 2j]], {(0,): 1.0, (2,): 0.3})
    out = metaplectic_apply(SymplecticBlocks.identity(1), g)
    assert np.allclose(out.evaluate(Y), g.evaluate(Y))


@pytest.mark.parametrize("t", [0.3, 1.0, 2.5, 4.0])
def test_harmonic_flow_keeps_ground_state_width(t):
    bl = SymplecticBlocks.from_matrix([[np.cos(t), np.sin(t)], [-np.sin(t), np.cos(t)]])
    out = metaplectic_apply(bl, unit_gaussian([[1j]]))
    assert np.allclose(out.width, [[1j]], atol=1e-14)


@pytest.mark.parametrize("t", [0.5, 1.0, 3.0])
def test_free_flow_width(t):
    bl = SymplecticBlocks.from_matrix([[1.0, t], [0.0, 1.0]])
    out = metaplectic_apply(bl, unit_gaussian([[1j]]))
    assert np.isclose(out.width[0, 0], 1j / (1 + 1j * t))


def test_metaplectic_free_flow_matches_schrodinger_solution():
    # M[F] for F = [[1, t], [0, 1]] is exp(-i t D^2 / 2); compare spectrally
    t = 0.8
    g = unit_gaussian([[1j]], {(0,): 1.0, (1,): 0.5, (3,): 0.2})
    out = metaplectic_apply(SymplecticBlocks.from_matrix([[1.0, t], [0.0, 1.0]]), g)
    x = np.linspace(-40, 40, 8192, endpoint=False)
    k = 2 * np.pi * np.fft.fftfreq(x.size, x[1] - x[0])
    ref = np.fft.ifft(np.exp(-0.5j * t * k ** 2) * np.fft.fft(g.evaluate(x)))
    assert np.max(np.abs(out.evaluate(x) - ref)) < 1e-10


def test_metaplectic_norm_preserved(rng):
    for _ in range(5):
        f = random_symplectic(rng, 1)
        g = unit_gaussian([[0.3 + 1.2j]], {(0,): 1.0, (2,): 0.4 - 0.1j, (1,): 0.2})
        g = g.scaled(1 / norm(g))
        out = metaplectic_apply(SymplecticBlocks.from_matrix(f), g)
        assert abs(norm(out) - 1) < 1e-9


def test_metaplectic_rejects_non_symplectic():
    with pytest.raises(NotSymplecticError):
        metaplectic_apply(SymplecticBlocks.from_matrix([[2.0, 0.0], [0.0, 1.0]]), unit_gaussian([[1j]]))


def test_egorov_exact_for_quadratic_flow(rng):
    # M[F] op(A o F) = op(A) M[F] on polynomial Gaussians
    f = random_symplectic(rng, 1, 0.7)
    bl = SymplecticBlocks.from_matrix(f)
    g = unit_gaussian([[0.2 + 1j]], {(0,): 1.0, (1,): 0.3})
    a = WeylPolyOp(1, {(1, 0): 1.0, (1, 1): 0.5, (0, 2): -0.2})
    lhs = metaplectic_apply(bl, weyl_apply(a.compose(f), g))
    rhs = weyl_apply(a, metaplectic_apply(bl, g))
    assert np.max(np.abs(lhs.evaluate(Y) - rhs.evaluate(Y))) < 1e-8


def test_siegel_check():
    with pytest.raises(SiegelError):
        check_siegel([[1.0 - 0.1j]])


# ------------------------------------------------------------------ Weyl

def test_weyl_position_multiplies():
    g = unit_gaussian([[1j]])
    out = weyl_apply(WeylPolyOp.position(1, 0), g)
    assert np.allclose(out.evaluate(Y), Y * g.evaluate(Y))


def test_weyl_momentum_on_gaussian():
    gam = 0.5 + 2j
    g = unit_gaussian([[gam]])
    out = weyl_apply(WeylPolyOp.momentum(1, 0), g)
    assert set(out.poly) == {(1,)}
    assert np.isclose(out.poly[(1,)] / g.poly[(0,)], gam)


def test_weyl_symmetrised_product_against_finite_differences():
    g = unit_gaussian([[1j]])
    out = weyl_apply(WeylPolyOp(1, {(1, 1): 1.0}), g)
    c = g.poly[(0,)]
    assert np.isclose(out.poly[(2,)], 1j * c) and np.isclose(out.poly[(0,)], -0.5j * c)
    # (1/2)(y D + D y) with D = -i d/dy by central differences
    h = 1e-3
    y = np.linspace(-5, 5, 10001)
    u = g.evaluate(y)
    du = np.gradient(u, h, edge_order=2)
    yu = y * u
    dyu = np.gradient(yu, h, edge_order=2)
    fd = 0.5 * (y * (-1j) * du + (-1j) * dyu)
    assert np.max(np.abs(fd[10:-10] - out.evaluate(y)[10:-10])) < 1e-5


# ------------------------------------------------------------- translate

def test_translate_zero_is_identity():
    g = unit_gaussian([[1j]], {(0,): 1.0, (1,): 0.5})
    assert translate(g, [0.0, 0.0]) is g


def test_translate_momentum_shift():
    g = unit_gaussian([[0.3 + 1j]], {(0,): 1.0, (2,): 0.5})
    p = 1.7
    out = translate(g, [0.0, p])
    assert np.allclose(out.width, g.width)
    assert np.allclose(out.evaluate(Y), np.exp(1j * p * Y) * g.evaluate(Y))


def test_translate_composition_phase():
    g = unit_gaussian([[1j]], {(0,): 1.0, (1,): 0.2})
    z, w = np.array([0.4, -0.3]), np.array([-0.2, 0.9])
    lhs = translate(translate(g, w), z).evaluate(Y)
    rhs = translate(g, z + w).evaluate(Y)
    # T(z) T(w) = e^{i(p'q - q'p)/2}... extract the phase from the overlap and check its value
    ph = np.vdot(rhs, lhs) / np.vdot(rhs, rhs)
    assert abs(abs(ph) - 1) < 1e-12
    assert np.allclose(lhs, ph * rhs, atol=1e-12)
    expected = np.exp(0.5j * (z[1] * w[0] - z[0] * w[1]))
    assert np.isclose(ph, expected)


# --------------------------------------------------------------- fourier

def test_fourier_fixed_point_width():
    assert np.allclose(fourier(unit_gaussian([[1j]])).width, [[1j]])


def test_fourier_width_inverse():
    assert np.allclose(fourier(unit_gaussian([[2j]])).width, [[0.5j]])


def test_fourier_against_fft():
    g = unit_gaussian([[0.4 + 1.3j]], {(0,): 1.0, (1,): 0.5j, (2,): -0.3})
    x = np.linspace(-30, 30, 4096, endpoint=False)
    dx = x[1] - x[0]
    k = 2 * np.pi * np.fft.fftfreq(x.size, dx)
    num = np.fft.fft(g.evaluate(x)) * dx / np.sqrt(2 * np.pi) * np.exp(-1j * k * x[0])
    assert np.max(np.abs(num - fourier(g).evaluate(k))) < 1e-10


def test_fourier_parseval_and_parity():
    g = unit_gaussian([[0.7 + 0.9j]], {(0,): 1.0, (1,): 0.3, (3,): 0.1j})
    assert abs(norm(fourier(g)) - norm(g)) < 1e-10
    ff = fourier(fourier(g))
    assert np.max(np.abs(ff.evaluate(Y) - g.evaluate(-Y))) < 1e-10


# --------------------------------------------------------- inner products

def test_self_inner_product_normalised():
    assert abs(inner_product(unit_gaussian([[1j]]), unit_gaussian([[1j]])) - 1) < 1e-14


def test_inner_product_moment_vs_quadrature():
    f, g = unit_gaussian([[1j]]), unit_gaussian([[2j]])
    val = inner_product(f, g)
    # closed form: c_i c_2i sqrt(2 pi / 3)
    expected = np.pi ** -0.25 * (2 / np.pi) ** 0.25 * np.sqrt(2 * np.pi / 3)
    assert abs(val - expected) < 1e-12
    assert abs(inner_product(f, g, method="quadrature") - val) < 1e-8 * abs(val)


def test_inner_product_parity_orthogonality():
    g = unit_gaussian([[1j]])
    assert abs(inner_product(g, g.with_poly({(1,): g.poly[(0,)]}))) < 1e-15


def test_inner_product_polynomial_quadrature_2d():
    gam = np.array([[1.0 + 1j, 0.2], [0.2, 0.5 + 2j]])
    f = unit_gaussian(gam, {(1, 0): 1.0, (0, 2): 0.5j})
    g = unit_gaussian(1j * np.eye(2), {(0, 0): 1.0, (1, 1): -0.3})
    a = inner_product(f, g)
    b = inner_product(f, g, method="quadrature")
    assert abs(a - b) < 1e-8 * max(1, abs(a))


# ------------------------------------------------------------ wave packets

def test_evaluate_on_grid_eps_one():
    g = unit_gaussian([[1j]])
    x = np.linspace(-6, 6, 257)
    vals = evaluate_on_grid(g, [0.0, 0.0], 1.0, [x])
    assert np.allclose(vals, np.pi ** -0.25 * np.exp(-x ** 2 / 2))


def test_evaluate_on_grid_localisation():
    eps = 0.01
    grid = Grid((-1.0,), (3.0,), (4096,))
    vals = evaluate_on_grid(unit_gaussian([[1j]]), [1.0, 0.0], eps, grid)
    x = grid.axes[0]
    out = np.abs(x - 1) > 5 * np.sqrt(eps)
    tail = np.sum(np.abs(vals[out]) ** 2) * grid.cell
    assert tail < 1e-8


def test_evaluate_on_grid_norm_matches_profile():
    eps = 0.05
    g = unit_gaussian([[0.5 + 1.5j]], {(0,): 1.0, (2,): 0.4})
    grid = grid1d(-4, 4, 2048)
    vals = evaluate_on_grid(g, [0.3, 1.1], eps, grid)
    assert abs(np.sqrt(np.sum(np.abs(vals) ** 2) * grid.cell) - norm(g)) < 1e-6


def test_under_resolved_grid_warns():
    with pytest.warns(UnderResolvedGridWarning):
        evaluate_on_grid(unit_gaussian([[1j]]), [0.0, 2.0], 1e-3, Grid((-1.0,), (1.0,), (64,)))


def test_json_roundtrip():
    g = unit_gaussian(np.array([[1 + 1j, 0.1], [0.1, 2j]]), {(0, 0): 1.0, (2, 1): 0.5 - 1j})
    back = PolyGaussian.from_json(g.to_json())
    assert np.allclose(back.width, g.width) and back.poly == g.poly
    assert back.norm_factor == g.norm_factor
