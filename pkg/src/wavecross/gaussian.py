"""Polynomial times complex Gaussian profiles and their exact algebra.

A profile is ``P(y) * norm_factor * exp(i (y.Gamma y / 2 + b.y))`` with a
complex symmetric width ``Gamma`` in the Siegel half-space.  The linear term
``b`` defaults to zero; it appears after phase-space translations and is
always equivalent to a real translation of a centred profile.

Operators are applied at unit Planck constant.  The wave packet transform
rescales to ``eps`` only in :func:`evaluate_on_grid`.
"""
from __future__ import annotations

import cmath
import warnings
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from . import polynomial as pl
from .polynomial import DEFAULT_DEGREE_CAP, DegreeOverflowError, Poly

__all__ = [
    "DegreeOverflowError", "NotSymplecticError", "SiegelError", "UnderResolvedGridWarning",
    "BranchJumpError", "SymplecticBlocks", "WeylPolyOp", "PolyGaussian",
    "check_siegel", "c_gamma", "unit_gaussian", "metaplectic_apply", "weyl_apply",
    "translate", "fourier", "inner_product", "norm", "evaluate_on_grid",
    "wave_packet_profile", "continue_sqrt", "sqrt_det_right_half",
]

SYMPLECTIC_TOL = 1e-8


class NotSymplecticError(ValueError):
    pass


class SiegelError(ValueError):
    pass


class BranchJumpError(RuntimeError):
    """Square-root continuation saw an argument jump of at least pi/2."""


class UnderResolvedGridWarning(UserWarning):
    pass


def check_siegel(gamma: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    gamma = np.atleast_2d(np.asarray(gamma, dtype=complex))
    if np.max(np.abs(gamma - gamma.T)) > tol * max(1.0, np.max(np.abs(gamma))):
        raise SiegelError("width is not symmetric")
    im = 0.5 * (gamma.imag + gamma.imag.T)
    if np.min(np.linalg.eigvalsh(im)) <= 0:
        raise SiegelError("imaginary part of width is not positive definite")
    return gamma


def c_gamma(gamma: np.ndarray) -> complex:
    """pi^{-d/4} det^{1/4}(Im Gamma), principal branch."""
    gamma = np.atleast_2d(gamma)
    d = gamma.shape[0]
    return complex(np.pi ** (-d / 4) * np.linalg.det(gamma.imag) ** 0.25)


def sqrt_det_right_half(m: np.ndarray) -> complex:
    """det(M)^{1/2} for complex symmetric M with Re M positive definite.

    Eigenvalues of such M have positive real part, so the product of their
    principal square roots is the branch continuous from real SPD matrices.
    """
    ev = np.linalg.eigvals(np.atleast_2d(m))
    return complex(np.prod(np.sqrt(ev.astype(complex))))


def continue_sqrt(value: complex, ref: Optional[complex]) -> complex:
    """Square root of ``value`` on the branch closest to ``ref``."""
    s = cmath.sqrt(value)
    if ref is None:
        return s
    if abs(s - ref) > abs(s + ref):
        s = -s
    # contract: consecutive roots differ in argument by less than pi/2
    if ref != 0 and s != 0 and abs(cmath.phase(s / ref)) >= np.pi / 2:
        raise BranchJumpError("argument jump >= pi/2; refine the path")
    return s


@dataclass(frozen=True)
class SymplecticBlocks:
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray

    @classmethod
    def from_matrix(cls, f: np.ndarray) -> "SymplecticBlocks":
        f = np.atleast_2d(np.asarray(f, dtype=float))
        n = f.shape[0] // 2
        return cls(f[:n, :n].copy(), f[:n, n:].copy(), f[n:, :n].copy(), f[n:, n:].copy())

    @classmethod
    def identity(cls, d: int) -> "SymplecticBlocks":
        return cls.from_matrix(np.eye(2 * d))

    @property
    def dim(self) -> int:
        return np.atleast_2d(self.a).shape[0]

    @property
    def matrix(self) -> np.ndarray:
        return np.block([[np.atleast_2d(self.a), np.atleast_2d(self.b)],
                         [np.atleast_2d(self.c), np.atleast_2d(self.d)]])

    def residual(self) -> float:
        f = self.matrix
        j = j_matrix(self.dim)
        return float(np.max(np.abs(f.T @ j @ f - j)))

    def inverse(self) -> "SymplecticBlocks":
        a, b, c, d = (np.atleast_2d(m) for m in (self.a, self.b, self.c, self.d))
        return SymplecticBlocks(d.T.copy(), -b.T.copy(), -c.T.copy(), a.T.copy())


def j_matrix(d: int) -> np.ndarray:
    i = np.eye(d)
    z = np.zeros((d, d))
    return np.block([[z, i], [-i, z]])


@dataclass(frozen=True)
class WeylPolyOp:
    """Polynomial Weyl symbol in phase-space variables (y_1..y_d, eta_1..eta_d)."""
    d: int
    symbol: Dict[Tuple[int, ...], complex]

    @classmethod
    def from_parts(cls, d: int, terms: Dict[Tuple[Tuple[int, ...], Tuple[int, ...]], complex]):
        return cls(d, {tuple(aq) + tuple(ap): complex(c) for (aq, ap), c in terms.items()})

    @classmethod
    def position(cls, d: int, j: int) -> "WeylPolyOp":
        return cls(d, pl.variable(j, 2 * d))

    @classmethod
    def momentum(cls, d: int, j: int) -> "WeylPolyOp":
        return cls(d, pl.variable(d + j, 2 * d))

    def degree(self) -> int:
        return pl.degree(self.symbol)

    def compose(self, f: np.ndarray) -> "WeylPolyOp":
        """Symbol w -> A(f @ w) for a real 2d x 2d matrix f."""
        return WeylPolyOp(self.d, pl.compose_linear(self.symbol, f))


@dataclass(frozen=True)
class PolyGaussian:
    width: np.ndarray
    norm_factor: complex
    poly: Dict[Tuple[int, ...], complex]
    linear: Optional[np.ndarray] = None
    degree_cap: int = DEFAULT_DEGREE_CAP

    def __post_init__(self):
        w = check_siegel(self.width)
        object.__setattr__(self, "width", w)
        d = w.shape[0]
        lin = np.zeros(d, complex) if self.linear is None else np.asarray(self.linear, complex).reshape(d)
        object.__setattr__(self, "linear", lin)
        poly = pl.clean(self.poly) or {(0,) * d: 0j}
        for k in poly:
            if len(k) != d:
                raise ValueError("polynomial arity does not match width dimension")
        pl.check_cap(poly, self.degree_cap)
        object.__setattr__(self, "poly", poly)

    @property
    def d(self) -> int:
        return self.width.shape[0]

    @property
    def is_trivial_poly(self) -> bool:
        return set(self.poly) == {(0,) * self.d}

    @property
    def has_linear(self) -> bool:
        return bool(np.any(self.linear != 0))

    def replace(self, **kw) -> "PolyGaussian":
        args = dict(width=self.width, norm_factor=self.norm_factor, poly=self.poly,
                    linear=self.linear, degree_cap=self.degree_cap)
        args.update(kw)
        return PolyGaussian(**args)

    def scaled(self, s: complex) -> "PolyGaussian":
        return self.replace(norm_factor=self.norm_factor * s)

    def with_poly(self, poly: Poly) -> "PolyGaussian":
        return self.replace(poly=poly)

    def evaluate_parts(self, y: np.ndarray):
        """(P(y) * norm_factor, exponent) so that value = first * exp(second)."""
        y = np.asarray(y)
        if y.ndim == 0 or (self.d == 1 and y.shape[-1:] != (1,)):
            y = y[..., None]
        quad = np.einsum("...i,ij,...j->...", y, self.width, y)
        expo = 1j * (0.5 * quad + y @ self.linear)
        return pl.evaluate(self.poly, y) * self.norm_factor, expo

    def evaluate(self, y: np.ndarray) -> np.ndarray:
        """Profile values at points of shape (..., d); complex points allowed."""
        amp, expo = self.evaluate_parts(y)
        return amp * np.exp(expo)

    def to_json(self) -> dict:
        out = {
            "d": self.d,
            "gamma": [[float(v.real), float(v.imag)] for v in self.width.ravel()],
            "norm_factor": [float(np.real(self.norm_factor)), float(np.imag(self.norm_factor))],
            "poly": [[list(k), float(np.real(c)), float(np.imag(c))] for k, c in sorted(self.poly.items())],
        }
        if self.has_linear:
            out["linear"] = [[float(v.real), float(v.imag)] for v in self.linear]
        return out

    @classmethod
    def from_json(cls, data: dict) -> "PolyGaussian":
        d = int(data["d"])
        gamma = np.array([complex(r, i) for r, i in data["gamma"]]).reshape(d, d)
        nf = complex(*data["norm_factor"])
        poly = {tuple(int(e) for e in k): complex(r, i) for k, r, i in data["poly"]}
        lin = None
        if "linear" in data:
            lin = np.array([complex(r, i) for r, i in data["linear"]])
        return cls(gamma, nf, poly, lin)


def unit_gaussian(gamma, poly: Optional[Poly] = None) -> PolyGaussian:
    """Normalised Gaussian c_Gamma exp(i y.Gamma y/2), optional polynomial."""
    gamma = check_siegel(gamma)
    d = gamma.shape[0]
    return PolyGaussian(gamma, c_gamma(gamma), poly or pl.one(d))


# ---------------------------------------------------------------- operators

def _apply_d(p: Poly, g: PolyGaussian, j: int) -> Poly:
    """D_j = -i d/dy_j acting on p * exp(i(y.G y/2 + b.y)); returns new p."""
    d = g.d
    out = pl.scale(pl.deriv(p, j), -1j)
    lin: Poly = {}
    for k in range(d):
        if g.width[j, k] != 0:
            lin = pl.add(lin, pl.scale(pl.variable(k, d), g.width[j, k]))
    if g.linear[j] != 0:
        lin = pl.add(lin, {(0,) * d: g.linear[j]})
    return pl.add(out, pl.mul(lin, p))


def weyl_apply(op: WeylPolyOp, g: PolyGaussian) -> PolyGaussian:
    """Apply the Weyl quantisation (unit Planck constant) of ``op`` to ``g``."""
    d = g.d
    if op.d != d:
        raise ValueError("operator and profile dimensions differ")
    std = pl.weyl_to_standard(op.symbol, d)
    cache: Dict[Tuple[int, ...], Poly] = {(0,) * d: g.poly}

    def d_power(b: Tuple[int, ...]) -> Poly:
        if b not in cache:
            j = next(i for i, e in enumerate(b) if e)
            prev = list(b)
            prev[j] -= 1
            cache[b] = pl.clean(_apply_d(d_power(tuple(prev)), g, j))
        return cache[b]

    out: Poly = {}
    for k, c in std.items():
        a, b = k[:d], k[d:]
        term = pl.mul(pl.monomial(a), d_power(b))
        out = pl.add(out, pl.scale(term, c))
    out = pl.clean(out)
    pl.check_cap(out, g.degree_cap)
    return g.with_poly(out)


def _split_translation(g: PolyGaussian):
    """Write g = T(z) g0 with g0 free of a linear term; returns (q, p, g0)."""
    im = g.width.imag
    q = -np.linalg.solve(im, g.linear.imag)
    p = g.linear.real + g.width.real @ q
    kappa = np.exp(1j * (q @ p) / 2 - 0.5j * (q @ g.width @ q))
    poly = pl.shift(g.poly, q.astype(complex))
    g0 = g.replace(poly=pl.clean(poly), linear=None, norm_factor=g.norm_factor * kappa)
    return q, p, g0


def translate(g: PolyGaussian, z: Sequence[float]) -> PolyGaussian:
    """Unit-scale Weyl translation T(z)g(y) = e^{-iq.p/2} e^{ip.y} g(y-q)."""
    z = np.asarray(z, dtype=float).ravel()
    d = g.d
    q, p = z[:d], z[d:]
    if not np.any(z):
        return g
    b = g.linear
    phase = np.exp(-0.5j * (q @ p) + 0.5j * (q @ g.width @ q) - 1j * (b @ q))
    poly = pl.clean(pl.shift(g.poly, (-q).astype(complex)))
    return g.replace(poly=poly, linear=b + p - g.width @ q, norm_factor=g.norm_factor * phase)


def metaplectic_apply(blocks: SymplecticBlocks, g: PolyGaussian,
                      sqrt_ref: Optional[complex] = None, return_sqrt: bool = False):
    """Metaplectic operator of ``blocks`` applied to ``g``.

    The width follows the Moebius action, the scalar picks up
    det^{-1/2}(A + B Gamma) on the branch closest to ``sqrt_ref`` (principal
    if None), and the polynomial moves by the exact Egorov rule
    M[F] op(A) = op(A o F^{-1}) M[F].
    """
    res = blocks.residual()
    if res > SYMPLECTIC_TOL:
        raise NotSymplecticError(f"symplectic residual {res:.3e}")
    if g.has_linear:
        q, p, g0 = _split_translation(g)
        out, s = metaplectic_apply(blocks, g0, sqrt_ref, True)
        fz = blocks.matrix @ np.concatenate([q, p])
        out = translate(out, fz)
        return (out, s) if return_sqrt else out
    a, b, c, dd = (np.atleast_2d(m) for m in (blocks.a, blocks.b, blocks.c, blocks.d))
    den = a + b @ g.width
    num = c + dd @ g.width
    gamma = np.linalg.solve(den.T, num.T).T
    gamma = 0.5 * (gamma + gamma.T)
    s = continue_sqrt(complex(np.linalg.det(den)), sqrt_ref)
    nf = g.norm_factor / s
    base = g.replace(width=gamma, norm_factor=nf, poly=pl.one(g.d))
    if g.is_trivial_poly:
        out = base.scaled(g.poly[(0,) * g.d])
    else:
        finv = blocks.inverse().matrix
        sym = pl.compose_linear(g.poly, finv[: g.d, :])
        out = weyl_apply(WeylPolyOp(g.d, sym), base)
    return (out, s) if return_sqrt else out


def fourier(g: PolyGaussian) -> PolyGaussian:
    """Unitary Fourier transform (2 pi)^{-d/2} int e^{-i y.eta} g(y) dy."""
    gam = g.width
    ginv = np.linalg.inv(gam)
    m = -1j * gam
    b = g.linear
    const = np.exp(-0.5j * (b @ ginv @ b)) / sqrt_det_right_half(m)
    width = -ginv
    width = 0.5 * (width + width.T)
    base = PolyGaussian(width, g.norm_factor * const, pl.one(g.d), ginv @ b, g.degree_cap)
    if g.is_trivial_poly:
        return base.scaled(g.poly[(0,) * g.d])
    # y_j maps to -D_j on the transform side
    d = g.d
    sym = pl.compose_linear(g.poly, np.hstack([np.zeros((d, d)), -np.eye(d)]))
    return weyl_apply(WeylPolyOp(d, sym), base)


# ------------------------------------------------------------ inner products

def _gaussian_moments(q: Poly, mean: np.ndarray, cov: np.ndarray) -> complex:
    memo: Dict[Tuple[int, ...], complex] = {}
    d = len(mean)

    def mom(a: Tuple[int, ...]) -> complex:
        if not any(a):
            return 1.0 + 0j
        if a in memo:
            return memo[a]
        j = next(i for i, e in enumerate(a) if e)
        am = list(a)
        am[j] -= 1
        val = mean[j] * mom(tuple(am))
        for k in range(d):
            if am[k]:
                amk = list(am)
                amk[k] -= 1
                val += cov[j, k] * am[k] * mom(tuple(amk))
        memo[a] = val
        return val

    return sum(c * mom(k) for k, c in q.items())


def inner_product(f: PolyGaussian, g: PolyGaussian, method: str = "moments",
                  order: Optional[int] = None) -> complex:
    """<f, g> = int conj(f) g dy (antilinear in the first slot)."""
    if f.d != g.d:
        raise ValueError("dimension mismatch")
    if method == "quadrature":
        return _inner_quadrature(f, g, order)
    m = -1j * (g.width - np.conj(f.width))
    c = 1j * (g.linear - np.conj(f.linear))
    minv = np.linalg.inv(m)
    mean = minv @ c
    d = f.d
    z = (2 * np.pi) ** (d / 2) / sqrt_det_right_half(m) * np.exp(0.5 * c @ minv @ c)
    q = pl.mul(pl.conj(f.poly), g.poly)
    return complex(np.conj(f.norm_factor) * g.norm_factor * z * _gaussian_moments(q, mean, minv))


def _inner_quadrature(f: PolyGaussian, g: PolyGaussian, order: Optional[int]) -> complex:
    # Gauss-Hermite on the combined real envelope, centred on its maximum
    m = -1j * (g.width - np.conj(f.width))
    c = 1j * (g.linear - np.conj(f.linear))
    mr = 0.5 * (m.real + m.real.T)
    centre = np.linalg.solve(mr, c.real)
    deg = pl.degree(f.poly) + pl.degree(g.poly)
    if order is None:
        ratio = np.linalg.norm(m) / np.min(np.linalg.eigvalsh(mr))
        # chirped envelopes (large Im m / Re m) need many nodes; numpy's weights overflow past ~300
        order = int(min(300, 40 + 4 * deg + 60 * ratio))
    x, w = np.polynomial.hermite.hermgauss(order)
    lchol = np.linalg.cholesky(mr)
    tr = np.linalg.inv(lchol.T) * np.sqrt(2.0)
    d = f.d
    grids = np.meshgrid(*([x] * d), indexing="ij")
    r = np.stack([gg.ravel() for gg in grids], axis=-1)
    wts = np.prod(np.meshgrid(*([w] * d), indexing="ij"), axis=0).ravel()
    y = centre + r @ tr.T
    vals = np.conj(f.evaluate(y)) * g.evaluate(y) * np.exp(np.sum(r ** 2, axis=-1))
    return complex(np.sum(wts * vals) * abs(np.linalg.det(tr)))


def norm(g: PolyGaussian) -> float:
    return float(np.sqrt(max(inner_product(g, g).real, 0.0)))


# ------------------------------------------------------------- wave packets

def wave_packet_profile(g: PolyGaussian, center: Sequence[float], eps: float) -> PolyGaussian:
    """Unit-scale profile of WP^eps_center g, i.e. Lambda_eps^{-1} WP g.

    WP^eps_z g = Lambda_eps e^{-i q'.p'/2} T(z') g with z' = z / sqrt(eps).
    Inner products of packets at equal eps reduce to these profiles.
    """
    zs = np.asarray(center, dtype=float) / np.sqrt(eps)
    d = g.d
    phase = np.exp(-0.5j * (zs[:d] @ zs[d:]))
    return translate(g, zs).scaled(phase)


def _axes(grid) -> Tuple[np.ndarray, ...]:
    if hasattr(grid, "axes"):
        return tuple(grid.axes)
    if isinstance(grid, np.ndarray) and grid.ndim == 1:
        return (grid,)
    return tuple(np.asarray(a, dtype=float) for a in grid)


def evaluate_on_grid(g: PolyGaussian, center: Sequence[float], eps: float, grid,
                     check: bool = True) -> np.ndarray:
    """Sample WP^eps_center g on a tensor grid (a Grid or a list of 1d axes).

    Emits UnderResolvedGridWarning when the grid spacing is too coarse for
    the packet width or its carrier frequency.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    axes = _axes(grid)
    d = g.d
    if len(axes) != d:
        raise ValueError("grid dimension does not match profile")
    center = np.asarray(center, dtype=float).ravel()
    q, p = center[:d], center[d:]
    mesh = np.meshgrid(*axes, indexing="ij")
    x = np.stack(mesh, axis=-1)
    y = (x - q) / np.sqrt(eps)
    vals = eps ** (-d / 4) * np.exp(1j * ((x - q) @ p) / eps) * g.evaluate(y)
    if check:
        _resolution_check(g, p, eps, axes)
    return vals


def _resolution_check(g: PolyGaussian, p, eps, axes) -> bool:
    cov = np.linalg.inv(g.width.imag)
    ok = True
    for j, ax in enumerate(axes):
        if len(ax) < 2:
            continue
        dx = ax[1] - ax[0]
        width = np.sqrt(eps * cov[j, j])
        # carrier plus chirp across six widths, plus the linear term
        kmax = (abs(p[j]) / eps + 6 * np.sqrt(cov[j, j]) * np.max(np.abs(g.width[j])) / np.sqrt(eps)
                + abs(g.linear[j].real) / np.sqrt(eps))
        if 8 * dx > width or kmax * dx > np.pi:
            ok = False
    if not ok:
        warnings.warn("grid spacing too coarse for the wave packet", UnderResolvedGridWarning, stacklevel=3)
    return ok
