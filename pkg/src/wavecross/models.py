"""Two-level (and scalar) matrix Hamiltonians H = v I + f U(u).

Every model exposes the trace part ``v``, the gap function ``f``, the unit
vector field ``u`` and their derivatives.  Symbolic models (built from sympy
expressions or strings) have exact derivatives of any order; models built
from plain callables fall back to Richardson-extrapolated central
differences.

Phase-space points are ``z = (x_1..x_d, xi_1..xi_d)``.  Band 1 is
``h1 = v + f``, band 2 is ``h2 = v - f``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np
import sympy as sp

__all__ = [
    "ModelSpec", "CrossingAssumptionsReport", "NearCrossingDerivativeError", "UnitVectorError",
    "make_two_level", "make_schrodinger", "make_bloch", "make_scalar", "derivatives",
    "check_assumptions", "u_matrix", "poisson", "builtin_model", "BUILTIN_MODELS",
]

T = sp.Symbol("t", real=True)
UNIT_TOL = 1e-8
Expr = Union[str, sp.Expr, float, int]


class NearCrossingDerivativeError(ValueError):
    pass


class UnitVectorError(ValueError):
    pass


def phase_symbols(d: int) -> Tuple[Tuple[sp.Symbol, ...], Tuple[sp.Symbol, ...]]:
    if d == 1:
        return (sp.Symbol("x", real=True),), (sp.Symbol("xi", real=True),)
    xs = tuple(sp.Symbol(f"x{j + 1}", real=True) for j in range(d))
    ps = tuple(sp.Symbol(f"xi{j + 1}", real=True) for j in range(d))
    return xs, ps


def _namespace(d: int) -> dict:
    xs, ps = phase_symbols(d)
    ns = {"t": T, "I": sp.I, "pi": sp.pi}
    for j, (x, p) in enumerate(zip(xs, ps)):
        ns[str(x)] = x
        ns[str(p)] = p
        ns["q" if d == 1 else f"q{j + 1}"] = x
        ns["p" if d == 1 else f"p{j + 1}"] = p
    return ns


def to_expr(e: Expr, d: int) -> sp.Expr:
    if isinstance(e, sp.Basic):
        return e
    if isinstance(e, str):
        return sp.sympify(e, locals=_namespace(d))
    return sp.sympify(e)


def u_matrix(u: np.ndarray) -> np.ndarray:
    """[[u1, u2 + i u3], [u2 - i u3, -u1]] with leading index of ``u`` the component."""
    u = np.asarray(u)
    out = np.empty(u.shape[1:] + (2, 2), dtype=complex)
    out[..., 0, 0] = u[0]
    out[..., 0, 1] = u[1] + 1j * u[2]
    out[..., 1, 0] = u[1] - 1j * u[2]
    out[..., 1, 1] = -u[0]
    return out


def poisson(grad_f: np.ndarray, grad_g: np.ndarray, d: int) -> np.ndarray:
    """{f, g} = d_xi f . d_x g - d_x f . d_xi g for gradients with z as last axis."""
    gf = np.asarray(grad_f)
    gg = np.asarray(grad_g)
    return np.sum(gf[..., d:] * gg[..., :d] - gf[..., :d] * gg[..., d:], axis=-1)


def _lambdify(args, exprs):
    fn = sp.lambdify(args, list(exprs), modules="numpy")

    def call(t, z):
        z = np.asarray(z, dtype=float)
        shape = z.shape[:-1]
        vals = fn(t, *[z[..., i] for i in range(z.shape[-1])])
        return np.stack([np.broadcast_to(np.asarray(v, dtype=float), shape) for v in vals], axis=-1)

    return call


class _SymbolicField:
    """Value and derivative evaluators for one scalar expression."""

    def __init__(self, expr: sp.Expr, zsyms: Tuple[sp.Symbol, ...]):
        self.expr = expr
        self.z = zsyms
        self._args = (T,) + tuple(zsyms)
        n = len(zsyms)
        self._grad_e = [sp.diff(expr, s) for s in zsyms]
        self._hess_e = [[sp.diff(g, s) for s in zsyms] for g in self._grad_e]
        self.value = _lambdify(self._args, [expr])
        self.grad_fn = _lambdify(self._args, self._grad_e)
        self.hess_fn = _lambdify(self._args, [h for row in self._hess_e for h in row])
        self.dt_fn = _lambdify(self._args, [sp.diff(expr, T)])
        self.dt_grad_fn = _lambdify(self._args, [sp.diff(g, T) for g in self._grad_e])
        self._third = None
        self.n = n

    def third_fn(self, t, z):
        if self._third is None:
            ex = [sp.diff(h, s) for row in self._hess_e for h in row for s in self.z]
            self._third = _lambdify(self._args, ex)
        out = self._third(t, z)
        return out.reshape(out.shape[:-1] + (self.n,) * 3)


def _fd_jacobian(fun, t, z, h):
    """Central differences with one Richardson step; output (..., n) appended."""
    z = np.asarray(z, dtype=float)
    n = z.shape[-1]
    cols = []
    for i in range(n):
        e = np.zeros(n)
        e[i] = h

        def cd(s):
            return (fun(t, z + s * e) - fun(t, z - s * e)) / (2 * s * h)

        cols.append((4 * cd(0.5) - cd(1.0)) / 3)
    return np.stack(cols, axis=-1)


def _fd_dt(fun, t, z, h):
    def cd(s):
        return (fun(t + s * h, z) - fun(t - s * h, z)) / (2 * s * h)

    return (4 * cd(0.5) - cd(1.0)) / 3


class _NumericField:
    """Scalar field from a plain callable with finite-difference derivatives."""

    def __init__(self, fun: Callable, grad: Optional[Callable] = None,
                 hess: Optional[Callable] = None, fd_step: float = 1e-5):
        self.fun = fun
        self._grad = grad
        self._hess = hess
        self.fd_step = fd_step

    def _h(self, z, order: int = 1):
        # nested differences need a larger outer step to keep round-off down
        base = self.fd_step if order == 1 else max(self.fd_step, 10.0 ** (-4 + order))
        return base * max(1.0, float(np.max(np.abs(z))))

    def value(self, t, z):
        return np.asarray(self.fun(t, np.asarray(z, float)), dtype=float)[..., None]

    def grad_fn(self, t, z):
        if self._grad is not None:
            return np.asarray(self._grad(t, np.asarray(z, float)), dtype=float)
        return _fd_jacobian(lambda tt, zz: np.asarray(self.fun(tt, zz), float), t, z, self._h(z))

    def hess_fn(self, t, z):
        if self._hess is not None:
            return np.asarray(self._hess(t, np.asarray(z, float)), dtype=float).reshape(np.shape(z)[:-1] + (-1,))
        jac = _fd_jacobian(self.grad_fn, t, z, self._h(z, 2))
        return jac.reshape(jac.shape[:-2] + (-1,))

    def dt_fn(self, t, z):
        return _fd_dt(lambda tt, zz: np.asarray(self.fun(tt, zz), float), t, z, self._h(z))[..., None]

    def dt_grad_fn(self, t, z):
        return _fd_dt(self.grad_fn, t, z, self._h(z, 2))

    def third_fn(self, t, z):
        n = np.shape(z)[-1]
        jac = _fd_jacobian(lambda tt, zz: self.hess_fn(tt, zz).reshape(np.shape(zz)[:-1] + (n, n)),
                           t, z, self._h(z, 3))
        return jac


@dataclass
class CrossingAssumptionsReport:
    transversality: float
    gap_at_infinity: float
    smooth_projectors: bool
    transversal: bool
    gapped_at_infinity: bool

    def to_json(self) -> dict:
        return dict(self.__dict__)


class ModelSpec:
    """Matrix Hamiltonian H(t, z) = v I + f U(u) with smooth spectral data.

    ``dim_N`` is 2 for two-level models and 1 for scalar ones (then f and u
    are ignored and the only band is h1 = v).
    """

    def __init__(self, name: str, dim_d: int, dim_N: int, v, f, u, *,
                 kinetic=None, potential=None, symbolic: bool = True,
                 fd_step: float = 1e-5, params: Optional[dict] = None):
        self.name = name
        self.dim_d = int(dim_d)
        self.dim_N = int(dim_N)
        self.symbolic = symbolic
        self.fd_step = fd_step
        self.params = dict(params or {})
        xs, ps = phase_symbols(self.dim_d)
        self.zsyms = xs + ps
        if symbolic:
            self.exprs = {"v": to_expr(v, dim_d), "f": to_expr(f, dim_d)}
            for i, ui in enumerate(u):
                self.exprs[f"u{i + 1}"] = to_expr(ui, dim_d)
            self._fields = {k: _SymbolicField(e, self.zsyms) for k, e in self.exprs.items()}
        else:
            self.exprs = {}
            ufun = u

            def comp(i):
                return lambda t, z: np.asarray(ufun(t, z), float)[i]

            self._fields = {"v": v if isinstance(v, _NumericField) else _NumericField(v, fd_step=fd_step),
                            "f": f if isinstance(f, _NumericField) else _NumericField(f, fd_step=fd_step)}
            for i in range(3):
                self._fields[f"u{i + 1}"] = _NumericField(comp(i), fd_step=fd_step)
        self.kinetic = kinetic
        self.potential = potential
        self._grid_fns = None
        self.projector_dependence = self._projector_dependence()

    # ------------------------------------------------------------ metadata
    @property
    def separable(self) -> bool:
        return self.kinetic is not None and self.potential is not None

    def _projector_dependence(self) -> str:
        if self.dim_N == 1:
            return "const"
        if not self.symbolic:
            return "mixed"
        xs = set(self.zsyms[: self.dim_d])
        ps = set(self.zsyms[self.dim_d:])
        free = set()
        for k in ("u1", "u2", "u3"):
            free |= self.exprs[k].free_symbols
        if free & ps and free & xs:
            return "mixed"
        if free & ps:
            return "xi"
        if free & xs:
            return "x"
        return "const"

    # ------------------------------------------------------- scalar fields
    def _field(self, name: str):
        return self._fields[name]

    def value(self, name: str, t: float, z) -> np.ndarray:
        if name in ("h1", "h2"):
            s = 1.0 if name == "h1" else -1.0
            return self.value("v", t, z) + (s * self.value("f", t, z) if self.dim_N == 2 else 0.0)
        if name == "u":
            return self.u(t, z)
        return self._field(name).value(t, z)[..., 0]

    def _combine(self, name, meth, t, z):
        if name in ("h1", "h2"):
            out = getattr(self._field("v"), meth)(t, z)
            if self.dim_N == 2:
                s = 1.0 if name == "h1" else -1.0
                out = out + s * getattr(self._field("f"), meth)(t, z)
            return out
        if name == "u":
            return np.stack([getattr(self._field(f"u{i}"), meth)(t, z) for i in (1, 2, 3)])
        return getattr(self._field(name), meth)(t, z)

    def grad(self, name: str, t: float, z) -> np.ndarray:
        return self._combine(name, "grad_fn", t, z)

    def hess(self, name: str, t: float, z) -> np.ndarray:
        out = self._combine(name, "hess_fn", t, z)
        n = 2 * self.dim_d
        return out.reshape(out.shape[:-1] + (n, n))

    def dt(self, name: str, t: float, z) -> np.ndarray:
        return self._combine(name, "dt_fn", t, z)[..., 0]

    def dt_grad(self, name: str, t: float, z) -> np.ndarray:
        return self._combine(name, "dt_grad_fn", t, z)

    def third(self, name: str, t: float, z) -> np.ndarray:
        return self._combine(name, "third_fn", t, z)

    def h(self, band: int, t, z):
        return self.value(f"h{band}", t, z)

    # ---------------------------------------------------------- matrices
    def u(self, t, z) -> np.ndarray:
        u = np.stack([self._field(f"u{i}").value(t, z)[..., 0] for i in (1, 2, 3)])
        nrm = np.sqrt(np.sum(u ** 2, axis=0))
        if np.any(np.abs(nrm - 1) > UNIT_TOL):
            raise UnitVectorError(f"|u| deviates from 1 by {np.max(np.abs(nrm - 1)):.2e}")
        return u

    def hamiltonian(self, t, z) -> np.ndarray:
        v = self.value("v", t, z)
        if self.dim_N == 1:
            return np.asarray(v, complex)[..., None, None]
        f = self.value("f", t, z)
        return v[..., None, None] * np.eye(2) + f[..., None, None] * u_matrix(self.u(t, z))

    def eigenvalues(self, t, z) -> Tuple[np.ndarray, np.ndarray]:
        return self.value("h1", t, z), self.value("h2", t, z)

    def projector(self, band: int, t, z) -> np.ndarray:
        if self.dim_N == 1:
            return np.ones(np.shape(z)[:-1] + (1, 1), complex)
        s = 1.0 if band == 1 else -1.0
        return 0.5 * (np.eye(2) + s * u_matrix(self.u(t, z)))

    def _check_fd_projector(self, t, z):
        if not self.symbolic and self.dim_N == 2:
            h = self.fd_step * max(1.0, float(np.max(np.abs(z))))
            if np.any(np.abs(self.value("f", t, z)) < 10 * h):
                raise NearCrossingDerivativeError("finite-difference projector derivative too close to the crossing set")

    def projector_grad(self, band: int, t, z) -> np.ndarray:
        """d_z Pi_band with the derivative index first: shape (2d, ..., N, N)."""
        n = 2 * self.dim_d
        if self.dim_N == 1:
            return np.zeros((n,) + np.shape(z)[:-1] + (1, 1), complex)
        self._check_fd_projector(t, z)
        s = 0.5 if band == 1 else -0.5
        gu = self.grad("u", t, z)  # (3, ..., 2d)
        return s * u_matrix(np.moveaxis(gu, -1, 1))

    def projector_dt(self, band: int, t, z) -> np.ndarray:
        if self.dim_N == 1:
            return np.zeros(np.shape(z)[:-1] + (1, 1), complex)
        self._check_fd_projector(t, z)
        s = 0.5 if band == 1 else -0.5
        return s * u_matrix(self.dt("u", t, z))

    def band_vector(self, band: int, t, z, ref: Optional[np.ndarray] = None) -> np.ndarray:
        """Unit vector spanning Ran Pi_band; aligned with ``ref`` when given."""
        pi = self.projector(band, t, z)
        if ref is not None:
            w = pi @ ref
            return w / np.linalg.norm(w)
        j = int(np.argmax(np.linalg.norm(pi, axis=0)))
        w = pi[:, j]
        w = w / np.linalg.norm(w)
        # fix the gauge so the largest entry is real positive
        k = int(np.argmax(np.abs(w)))
        return w * np.exp(-1j * np.angle(w[k]))

    # ------------------------------------------------------ grid evaluation
    def _compile_grid(self):
        if self._grid_fns is not None:
            return self._grid_fns
        if not self.separable:
            raise ValueError(f"model {self.name!r} is not separable")
        xs, ps = phase_symbols(self.dim_d)

        def lam(args, ex):
            fn = sp.lambdify(args, list(ex), modules="numpy")
            return fn

        ka, kb, ku = self.kinetic
        va, vb, vu = self.potential
        self._grid_fns = (lam(ps, [ka, kb] + list(ku)), lam((T,) + xs, [va, vb] + list(vu)))
        return self._grid_fns

    def kinetic_fields(self, k_mesh: Sequence[np.ndarray]):
        """(a, b, u) arrays with K(xi) = a I + b U(u) on the transform grid."""
        fk, _ = self._compile_grid()
        return _broadcast_fields(fk(*k_mesh), k_mesh[0].shape)

    def potential_fields(self, t: float, x_mesh: Sequence[np.ndarray]):
        _, fv = self._compile_grid()
        return _broadcast_fields(fv(t, *x_mesh), x_mesh[0].shape)

    def max_abs_h(self, points: np.ndarray, t: float = 0.0) -> float:
        h = np.abs(self.value("v", t, points))
        if self.dim_N == 2:
            h = h + np.abs(self.value("f", t, points))
        return float(np.max(h))

    def to_json(self) -> dict:
        out = {"name": self.name, "dim_d": self.dim_d, "dim_N": self.dim_N,
               "separable": self.separable, "projector_dependence": self.projector_dependence}
        if self.symbolic:
            out["exprs"] = {k: str(e) for k, e in self.exprs.items()}
        if self.params:
            out["params"] = self.params
        return out

    def __repr__(self):
        return f"ModelSpec({self.name!r}, d={self.dim_d}, N={self.dim_N})"


def _broadcast_fields(vals, shape):
    arr = [np.broadcast_to(np.asarray(v, float), shape) for v in vals]
    return arr[0], arr[1], np.stack(arr[2:])


def derivatives(model: ModelSpec, which: str, t: float, z) -> np.ndarray:
    """Dispatch on tags like ``"grad:h1"``, ``"hess:f"``, ``"dt:Pi2"``, ``"grad:Pi1"``,
    ``"third:h1"`` or ``"poisson:v,f"``."""
    kind, _, name = which.partition(":")
    if kind == "poisson":
        a, b = name.split(",")
        return poisson(model.grad(a, t, z), model.grad(b, t, z), model.dim_d)
    if name.startswith("Pi"):
        band = int(name[2:])
        if kind == "value":
            return model.projector(band, t, z)
        if kind == "grad":
            return model.projector_grad(band, t, z)
        if kind == "dt":
            return model.projector_dt(band, t, z)
        raise ValueError(f"unsupported projector derivative {which!r}")
    fn = {"value": model.value, "grad": model.grad, "hess": model.hess, "dt": model.dt,
          "dt_grad": model.dt_grad, "third": model.third}.get(kind)
    if fn is None:
        raise ValueError(f"unknown derivative tag {which!r}")
    return fn(name, t, z)


def check_assumptions(model: ModelSpec, t: float, z, far_radius: float = 50.0,
                      tol: float = 1e-8, n_far: int = 64, seed: int = 0) -> CrossingAssumptionsReport:
    """Advisory check of the crossing hypotheses at (t, z)."""
    z = np.asarray(z, float)
    d = model.dim_d
    trans = float(model.dt("f", t, z) + poisson(model.grad("v", t, z), model.grad("f", t, z), d))
    rng = np.random.default_rng(seed)
    dirs = rng.normal(size=(n_far, 2 * d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    far = float(np.min(np.abs(model.value("f", t, far_radius * dirs)))) if model.dim_N == 2 else np.inf
    return CrossingAssumptionsReport(trans, far, True, abs(trans) > tol, far > 0)


# ---------------------------------------------------------------- builders

def _check_unit(model: ModelSpec, n: int = 200, seed: int = 0, box: float = 5.0):
    if model.dim_N != 2:
        return
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-box, box, size=(n, 2 * model.dim_d))
    ts = rng.uniform(0, box)
    model.u(ts, pts)


def make_two_level(v, f, u, d: int = 1, name: str = "two_level", **kw) -> ModelSpec:
    """H = v I + f [[u1, u2 + i u3], [u2 - i u3, -u1]].

    ``v``, ``f`` and the three components of ``u`` are sympy expressions or
    strings in t, x/xi (d=1) or x1.., xi1.. (d>1).  Pass ``symbolic=False``
    with callables ``v(t, z)``, ``f(t, z)``, ``u(t, z) -> (3, ...)`` to use
    finite-difference derivatives instead.
    """
    symbolic = kw.pop("symbolic", True)
    m = ModelSpec(name, d, 2, v, f, u, symbolic=symbolic, **kw)
    _check_unit(m)
    return m


def make_scalar(kinetic: Expr, potential: Expr, d: int = 1, name: str = "scalar", **kw) -> ModelSpec:
    """Scalar h = K(xi) + V(t, x) embedded as a one-level model."""
    ke, ve = to_expr(kinetic, d), to_expr(potential, d)
    return ModelSpec(name, d, 1, ke + ve, 0, (1, 0, 0),
                     kinetic=(ke, sp.Integer(0), (1, 0, 0)),
                     potential=(ve, sp.Integer(0), (1, 0, 0)), **kw)


def _matrix_parts(mat, d: int):
    mat = [[to_expr(e, d) for e in row] for row in mat]
    a = sp.simplify((mat[0][0] + mat[1][1]) / 2)
    c = sp.simplify((mat[0][0] - mat[1][1]) / 2)
    off = mat[0][1]
    return a, c, sp.re(off), sp.im(off)


def _gap_and_u(c, re_off, im_off, gap):
    if gap is None:
        gap = sp.sqrt(c ** 2 + re_off ** 2 + im_off ** 2)
    u = tuple(sp.simplify(sp.cancel(w / gap)) for w in (c, re_off, im_off))
    return gap, u


def make_schrodinger(potential, gap: Optional[Expr] = None, d: int = 1,
                     name: str = "schrodinger", **kw) -> ModelSpec:
    """H = |xi|^2/2 I + V(t, x) with V a Hermitian 2x2 matrix of expressions.

    ``gap`` is the smooth gap function f; without it f = |traceless part|,
    which is only smooth away from the crossing set.
    """
    a, c, ro, io = _matrix_parts(potential, d)
    f = to_expr(gap, d) if gap is not None else None
    f, u = _gap_and_u(c, ro, io, f)
    xs, ps = phase_symbols(d)
    kin = sum(p ** 2 for p in ps) / 2
    m = ModelSpec(name, d, 2, kin + a, f, u, kinetic=(kin, sp.Integer(0), (1, 0, 0)),
                  potential=(a, f, u), **kw)
    _check_unit(m)
    return m


def make_bloch(band, w: Expr, gap: Optional[Expr] = None, d: int = 1,
               name: str = "bloch", **kw) -> ModelSpec:
    """H = A(xi) + W(t, x) I with A a Hermitian 2x2 matrix of expressions in xi."""
    a, c, ro, io = _matrix_parts(band, d)
    f = to_expr(gap, d) if gap is not None else None
    f, u = _gap_and_u(c, ro, io, f)
    we = to_expr(w, d)
    m = ModelSpec(name, d, 2, a + we, f, u, kinetic=(a, f, u),
                  potential=(we, sp.Integer(0), (1, 0, 0)), **kw)
    _check_unit(m)
    return m


# ---------------------------------------------------------------- registry

def _gapped_two_level_1d(gap: float = 0.5, twist: float = 1.0, omega: float = 1.0,
                         quartic: float = 0.0):
    w = f"{omega}**2*x**2/2 + {quartic}*x**4"
    pot = [[f"{w} + {gap}*cos({twist}*x)", f"{gap}*sin({twist}*x)"],
           [f"{gap}*sin({twist}*x)", f"{w} - {gap}*cos({twist}*x)"]]
    return make_schrodinger(pot, gap=f"{gap}", name="gapped_two_level_1d",
                            params=dict(gap=gap, twist=twist, omega=omega, quartic=quartic))


def _schrodinger_crossing_1d(slope: float = 1.0, twist: float = 1.0):
    pot = [[f"{slope}*x*cos({twist}*x)", f"{slope}*x*sin({twist}*x)"],
           [f"{slope}*x*sin({twist}*x)", f"-{slope}*x*cos({twist}*x)"]]
    return make_schrodinger(pot, gap=f"{slope}*x", name="schrodinger_crossing_1d",
                            params=dict(slope=slope, twist=twist))


def _schrodinger_crossing_2d(slope: float = 1.0, twist: float = 1.0):
    th = f"{twist}*(x1 + x2/2)"
    pot = [[f"{slope}*x1*cos({th}) + x2**2/2", f"{slope}*x1*sin({th})"],
           [f"{slope}*x1*sin({th})", f"-{slope}*x1*cos({th}) + x2**2/2"]]
    return make_schrodinger(pot, gap=f"{slope}*x1", d=2, name="schrodinger_crossing_2d",
                            params=dict(slope=slope, twist=twist))


def _bloch_crossing_1d(force: float = 1.0, twist: float = 1.0):
    band = [[f"xi*cos({twist}*xi)", f"xi*sin({twist}*xi)"],
            [f"xi*sin({twist}*xi)", f"-xi*cos({twist}*xi)"]]
    return make_bloch(band, f"{force}*x", gap="xi", name="bloch_crossing_1d",
                      params=dict(force=force, twist=twist))


def _dirac_cone_2d(force: float = 0.0):
    band = [["0", "xi1 + I*xi2"], ["xi1 - I*xi2", "0"]]
    return make_bloch(band, f"{force}*x1", d=2, name="dirac_cone_2d", params=dict(force=force))


def _pendulum():
    return make_scalar("xi**2/2", "cos(x)", name="pendulum")


def _harmonic(omega: float = 1.0):
    return make_scalar("xi**2/2", f"{omega}**2*x**2/2", name="harmonic", params=dict(omega=omega))


def _free():
    return make_scalar("xi**2/2", "0", name="free")


BUILTIN_MODELS: Dict[str, Callable[..., ModelSpec]] = {
    "gapped_two_level_1d": _gapped_two_level_1d,
    "schrodinger_crossing_1d": _schrodinger_crossing_1d,
    "schrodinger_crossing_2d": _schrodinger_crossing_2d,
    "bloch_crossing_1d": _bloch_crossing_1d,
    "dirac_cone_2d": _dirac_cone_2d,
    "pendulum": _pendulum,
    "harmonic": _harmonic,
    "free": _free,
}


def builtin_model(name: str, **params) -> ModelSpec:
    try:
        factory = BUILTIN_MODELS[name]
    except KeyError:
        raise KeyError(f"unknown model {name!r}") from None
    return factory(**params)
