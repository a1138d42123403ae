"""Randomised invariants checked with hypothesis."""
import numpy as np
from hypothesis import assume, given, settings, strategies as st

from wavecross import polynomial as pl
from wavecross.crossing import transfer_gaussian
from wavecross.gaussian import SymplecticBlocks, fourier, inner_product, metaplectic_apply, norm, translate, unit_gaussian

from conftest import random_symplectic

Y = np.linspace(-12, 12, 3001)
SETTINGS = settings(max_examples=40, deadline=None)

real = st.floats(-2.0, 2.0, allow_nan=False)
pos = st.floats(0.2, 3.0, allow_nan=False)
coef = st.complex_numbers(max_magnitude=1.0, allow_nan=False, allow_infinity=False)


@st.composite
def widths(draw):
    return draw(real) + 1j * draw(pos)


@st.composite
def polys(draw, max_deg=3):
    n = draw(st.integers(1, max_deg + 1))
    p = {(0,): 1.0 + 0j}
    for k in range(1, n):
        p[(k,)] = draw(coef)
    return p


@SETTINGS
@given(seed=st.integers(0, 2 ** 31), t=st.floats(0.05, 2.0), d=st.integers(1, 2))
def test_metaplectic_keeps_siegel(seed, t, d):
    rng = np.random.default_rng(seed)
    bl = SymplecticBlocks.from_matrix(random_symplectic(rng, d, t))
    a = rng.normal(size=(d, d))
    gam = 0.3 * (a + a.T) + 1j * (np.eye(d) + 0.1 * a @ a.T)
    out = metaplectic_apply(bl, unit_gaussian(gam))
    assert np.allclose(out.width, out.width.T)
    assert np.all(np.linalg.eigvalsh(out.width.imag) > 0)
    assert abs(norm(out) - 1) < 1e-8


@SETTINGS
@given(mu=st.floats(0.05, 4.0), sign=st.sampled_from([-1, 1]), al=real, be=real, gam=widths())
def test_transfer_keeps_siegel(mu, sign, al, be, gam):
    _, out = transfer_gaussian((sign * mu, [al], [be]), unit_gaussian([[gam]]))
    assert out.width[0, 0].imag > 0


@SETTINGS
@given(gam=widths(), p=polys())
def test_fourier_unitary_and_parity(gam, p):
    g = unit_gaussian([[gam]], p)
    assert abs(norm(fourier(g)) - norm(g)) < 1e-8 * norm(g)
    ff = fourier(fourier(g))
    assert np.max(np.abs(ff.evaluate(Y) - g.evaluate(-Y))) < 1e-8 * max(1.0, np.max(np.abs(g.evaluate(Y))))


@SETTINGS
@given(gam=widths(), z=st.tuples(real, real), w=st.tuples(real, real))
def test_translate_composition(gam, z, w):
    g = unit_gaussian([[gam]])
    z, w = np.array(z), np.array(w)
    lhs = translate(translate(g, w), z).evaluate(Y)
    rhs = translate(g, z + w).evaluate(Y)
    phase = np.exp(0.5j * (z[1] * w[0] - z[0] * w[1]))
    assert np.allclose(lhs, phase * rhs, atol=1e-10)


@SETTINGS
@given(seed=st.integers(0, 2 ** 31), deg=st.integers(0, 4))
def test_compose_linear_pointwise(seed, deg):
    rng = np.random.default_rng(seed)
    p = {}
    for _ in range(5):
        e = rng.integers(0, deg + 1, size=2)
        if e.sum() <= deg:
            p[tuple(int(v) for v in e)] = complex(rng.normal(), rng.normal())
    mat = rng.normal(size=(2, 3))
    q = pl.compose_linear(p, mat)
    pts = rng.normal(size=(7, 3))
    assert np.allclose(pl.evaluate(q, pts), pl.evaluate(p, pts @ mat.T), atol=1e-10) if p else q == {}


@SETTINGS
@given(g1=widths(), g2=widths(), p1=polys(2), p2=polys(2))
def test_inner_product_quadrature_agrees(g1, g2, p1, p2):
    m = -1j * (g2 - np.conj(g1))
    # Gauss-Hermite on the real envelope is only a reliable reference for moderate chirp
    assume(abs(m) / m.real <= 5.0)
    f, g = unit_gaussian([[g1]], p1), unit_gaussian([[g2]], p2)
    a = inner_product(f, g)
    b = inner_product(f, g, method="quadrature")
    assert abs(a - b) < 1e-8 * max(1.0, abs(a))
    assert abs(np.conj(a) - inner_product(g, f)) < 1e-10 * max(1.0, abs(a))
