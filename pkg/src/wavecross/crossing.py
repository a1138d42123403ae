"""Crossing detection, crossing data and the transfer operator.

The transfer operator is

    T_{mu,alpha,beta} phi(y) = int exp(i(mu - alpha.beta/2) s^2) exp(i s beta.y) phi(y - s alpha) ds
                             = sqrt(i pi / mu) exp(-i L^2 / (4 mu)),   L = beta.y - alpha.D,

so on profiles it is a scalar times the metaplectic operator of the flow
Phi_{alpha,beta}(1/(4 mu)) of the quadratic symbol (beta.y - alpha.eta)^2.

A :class:`CrossingEvent` stores the local crossing data
``mu_flat = (d_t f + {v, f}) / 2`` and ``(alpha_flat, beta_flat) = J d_z f``
together with the parameters that actually generate the transmitted
packet: ``(alpha_T, beta_T) = J d_z (h1 - h2)`` and
``mu_T = (Lambda''(0) - alpha_T.beta_T) / 2 = -(d_t f + {v, f})``.
"""
from __future__ import annotations

import cmath
import json
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np
from scipy.integrate import solve_ivp

from .dynamics import (IntegratorControls, TrajectoryBundle, TrajectoryTrace, bundle_rhs,
                       integrate_to)
from .gaussian import (BranchJumpError, PolyGaussian, SiegelError, SymplecticBlocks, check_siegel, continue_sqrt,
                       j_matrix, metaplectic_apply)
from .models import ModelSpec, poisson

__all__ = [
    "CrossingEvent", "TransferParams", "NonTransversalCrossingError", "detect_crossing",
    "transfer_gaussian", "transfer_polygaussian", "transfer_quadrature", "phi_blocks",
    "gamma_coupling", "crossing_data", "phase_lemma_check", "GAMMA_MIN",
]

GAMMA_MIN = 1e-12
MU_MIN_REL = 1e-8


class NonTransversalCrossingError(ValueError):
    pass


def phi_blocks(alpha, beta, t: float) -> SymplecticBlocks:
    """Flow at time t of the quadratic symbol (beta.y - alpha.eta)^2."""
    a = np.atleast_1d(np.asarray(alpha, float))
    b = np.atleast_1d(np.asarray(beta, float))
    i = np.eye(len(a))
    return SymplecticBlocks(i - 2 * t * np.outer(a, b), 2 * t * np.outer(a, a),
                            -2 * t * np.outer(b, b), i + 2 * t * np.outer(b, a))


@dataclass(frozen=True)
class TransferParams:
    mu: float
    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "alpha", np.atleast_1d(np.asarray(self.alpha, float)))
        object.__setattr__(self, "beta", np.atleast_1d(np.asarray(self.beta, float)))
        if self.mu == 0:
            raise NonTransversalCrossingError("transfer operator needs mu != 0")

    @property
    def prefactor(self) -> complex:
        """sqrt(i pi / mu), the value of int exp(i mu s^2) ds."""
        return cmath.sqrt(np.pi / (-1j * self.mu))

    def blocks(self) -> SymplecticBlocks:
        return phi_blocks(self.alpha, self.beta, 1.0 / (4 * self.mu))

    def symbol_map(self) -> SymplecticBlocks:
        """Phase-space map composed with polynomial symbols: Phi(-1/(4 mu))."""
        return phi_blocks(self.alpha, self.beta, -1.0 / (4 * self.mu))


@dataclass(frozen=True)
class CrossingEvent:
    t_flat: float
    z_flat: np.ndarray
    s_flat: float
    mu_flat: float
    alpha_flat: np.ndarray
    beta_flat: np.ndarray
    gamma_flat: float
    v1_flat: np.ndarray
    v2_flat: np.ndarray
    mu_transfer: float
    alpha_transfer: np.ndarray
    beta_transfer: np.ndarray
    f_value: float = 0.0
    zero_transfer: bool = False
    later_crossings: List[float] = field(default_factory=list)
    bundle: Optional[TrajectoryBundle] = None

    @property
    def transfer(self) -> TransferParams:
        return TransferParams(self.mu_transfer, self.alpha_transfer, self.beta_transfer)

    def to_json(self) -> dict:
        def cvec(v):
            return [[float(x.real), float(x.imag)] for x in np.asarray(v, complex)]

        return {
            "t_flat": self.t_flat, "z_flat": [float(x) for x in self.z_flat], "s_flat": self.s_flat,
            "mu_flat": self.mu_flat, "alpha_flat": [float(x) for x in self.alpha_flat],
            "beta_flat": [float(x) for x in self.beta_flat], "gamma_flat": self.gamma_flat,
            "v1_flat": cvec(self.v1_flat), "v2_flat": cvec(self.v2_flat),
            "mu_transfer": self.mu_transfer, "alpha_transfer": [float(x) for x in self.alpha_transfer],
            "beta_transfer": [float(x) for x in self.beta_transfer], "f_value": self.f_value,
            "zero_transfer": self.zero_transfer, "later_crossings": list(self.later_crossings),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


# ---------------------------------------------------------------- crossing data

def gamma_coupling(model: ModelSpec, t: float, z, v1: np.ndarray, using: int = 2):
    """Return (gamma, w) with w = Pi_2 (d_t Pi + {v, Pi}) V1 for Pi = Pi_using."""
    d = model.dim_d
    dpi = model.projector_grad(using, t, z)
    gv = model.grad("v", t, z)
    vpi = 0
    for k in range(d):
        vpi = vpi + gv[d + k] * dpi[k] - gv[k] * dpi[d + k]
    m = (model.projector_dt(using, t, z) + vpi) @ v1
    return float(np.linalg.norm(m)), model.projector(2, t, z) @ m


def crossing_data(model: ModelSpec, bundle: TrajectoryBundle, f_value: float = 0.0,
                  later: Sequence[float] = ()) -> CrossingEvent:
    """Fill a CrossingEvent from the band-1 bundle at the crossing time."""
    t, z = bundle.t, bundle.z
    d = model.dim_d
    gf = model.grad("f", t, z)
    rate = float(model.dt("f", t, z) + poisson(model.grad("v", t, z), gf, d))
    gh = model.grad("h1", t, z)
    scale = max(1.0, float(np.linalg.norm(gf) * np.linalg.norm(gh) + abs(model.dt("f", t, z))))
    if abs(0.5 * rate) <= MU_MIN_REL * scale:
        raise NonTransversalCrossingError(f"non-transversal crossing: d_t f + {{v,f}} = {rate:.3e}")
    jf = j_matrix(d) @ gf
    v1 = bundle.y_vec
    gamma, w = gamma_coupling(model, t, z, v1)
    zero = gamma < GAMMA_MIN
    v2 = np.zeros_like(v1) if zero else w / gamma
    return CrossingEvent(
        t_flat=t, z_flat=z.copy(), s_flat=bundle.s_action, mu_flat=0.5 * rate,
        alpha_flat=jf[:d].copy(), beta_flat=jf[d:].copy(), gamma_flat=gamma, v1_flat=v1.copy(),
        v2_flat=v2, mu_transfer=-rate, alpha_transfer=2 * jf[:d], beta_transfer=2 * jf[d:],
        f_value=float(f_value), zero_transfer=zero, later_crossings=list(later), bundle=bundle)


def detect_crossing(model: ModelSpec, trace: TrajectoryTrace, n_samples: int = 400,
                    controls: Optional[IntegratorControls] = None) -> Optional[CrossingEvent]:
    """First sign change of f(t, z1(t)) along a band-1 trace, refined to |f| < 1e-12 scale."""
    if model.dim_N != 2 or trace.t_end == trace.t0:
        return None
    ts = np.linspace(trace.t0, trace.t_end, n_samples + 1)
    if trace.dense is not None and hasattr(trace.dense, "ts"):
        ts = np.union1d(ts, np.asarray(trace.dense.ts))
    zs = trace.z_at(ts)
    fs = np.array([float(model.value("f", t, z)) for t, z in zip(ts, zs)])
    scale = max(1.0, float(np.max(np.abs(fs))))
    sign = np.sign(fs)
    idx = [i for i in range(len(ts) - 1) if sign[i] * sign[i + 1] < 0 or (sign[i + 1] == 0 and sign[i] != 0)]
    if not idx:
        return None
    i0 = idx[0]
    later = [float(ts[i + 1]) for i in idx[1:]]

    def g(t):
        return float(model.value("f", t, trace.z_at(t)))

    def dg(t):
        z = trace.z_at(t)
        return float(model.dt("f", t, z) + poisson(model.grad("h1", t, z), model.grad("f", t, z), model.dim_d))

    a, b = float(ts[i0]), float(ts[i0 + 1])
    ga = g(a)
    tol = 1e-12 * scale
    # bisection to a tight bracket, then Newton
    for _ in range(30):
        m = 0.5 * (a + b)
        gm = g(m)
        if np.sign(gm) == np.sign(ga):
            a, ga = m, gm
        else:
            b = m
        if b - a < 1e-6 * max(1.0, abs(trace.t_end - trace.t0)):
            break
    t = 0.5 * (a + b)
    for _ in range(50):
        gt = g(t)
        if abs(gt) < tol:
            break
        t_new = t - gt / dg(t)
        t = t_new if a <= t_new <= b else 0.5 * (a + b)
        if np.sign(g(t)) == np.sign(ga):
            a = t
        else:
            b = t
    bundle = integrate_to(model, 1, trace.initial or trace.samples[0], t, controls).final
    fval = float(model.value("f", t, bundle.z))
    if abs(fval) > 1e3 * tol:
        raise RuntimeError(f"crossing refinement did not converge: |f| = {abs(fval):.3e}")
    return crossing_data(model, bundle, fval, later)


# ------------------------------------------------------------- transfer maps

def _params(obj) -> TransferParams:
    if isinstance(obj, TransferParams):
        return obj
    if isinstance(obj, CrossingEvent):
        return obj.transfer
    mu, alpha, beta = obj
    return TransferParams(mu, alpha, beta)


def transfer_gaussian(event: Union[CrossingEvent, TransferParams, tuple], g: PolyGaussian):
    """Closed-form transfer of a Gaussian without polynomial factor.

    Returns (prefactor, g_out) with T g = prefactor * g_out and
    prefactor = sqrt(i pi / mu); g_out has the same norm as g.
    """
    prm = _params(event)
    if not g.is_trivial_poly:
        raise ValueError("transfer_gaussian needs a trivial polynomial; use transfer_polygaussian")
    gam = g.width
    al, be = prm.alpha, prm.beta
    c = be - gam @ al
    a = prm.mu - 0.5 * al @ be + 0.5 * al @ gam @ al
    width = gam - np.outer(c, c) / (2 * a)
    width = 0.5 * (width + width.T)
    try:
        check_siegel(width)
    except SiegelError as exc:
        raise SiegelError(f"transferred width left the Siegel half-space: {exc}") from None
    ba = g.linear @ al
    lin = g.linear + c * ba / (2 * a)
    scalar = cmath.sqrt(np.pi / (-1j * a)) * cmath.exp(-1j * ba ** 2 / (4 * a))
    pref = prm.prefactor
    out = g.replace(width=width, linear=lin, norm_factor=g.norm_factor * scalar / pref)
    return pref, out


def _path_sqrt(prm: TransferParams, gamma: np.ndarray, n: int = 64) -> complex:
    """det^{1/2}(A + B Gamma) continued along Phi(t), t from 0 to 1/(4 mu)."""
    t_end = 1.0 / (4 * prm.mu)
    while True:
        s = 1.0 + 0j
        try:
            for t in np.linspace(0, t_end, n + 1)[1:]:
                bl = phi_blocks(prm.alpha, prm.beta, t)
                s = continue_sqrt(complex(np.linalg.det(bl.a + bl.b @ gamma)), s)
            return s
        except BranchJumpError:
            n *= 4
            if n > 1 << 16:
                raise


def transfer_polygaussian(event: Union[CrossingEvent, TransferParams, tuple], g: PolyGaussian):
    """Transfer of a polynomial times Gaussian: prefactor * M[Phi(1/(4 mu))] g."""
    prm = _params(event)
    blocks = prm.blocks()
    if g.has_linear:
        from .gaussian import _split_translation
        _, _, g0 = _split_translation(g)
        ref = _path_sqrt(prm, g0.width)
    else:
        ref = _path_sqrt(prm, g.width)
    out = metaplectic_apply(blocks, g, sqrt_ref=ref)
    if max(sum(k) for k in out.poly) > max(sum(k) for k in g.poly):
        raise AssertionError("transfer changed the polynomial degree")
    return prm.prefactor, out


def transfer_quadrature(mu: float, alpha, beta, g: PolyGaussian, y: np.ndarray,
                        n_nodes: Optional[int] = None) -> np.ndarray:
    """Direct quadrature of the defining s-integral at points y (shape (n, d) or (n,)).

    The s-contour is rotated onto the steepest-descent ray of the total
    quadratic phase, which turns the Fresnel-type integral into a Gaussian
    one; the rotation is legitimate because the profile is entire and the
    phase decays in the swept sector.  Trapezoid in the ray parameter.
    """
    if mu == 0:
        raise NonTransversalCrossingError("transfer quadrature needs mu != 0")
    al = np.atleast_1d(np.asarray(alpha, float))
    be = np.atleast_1d(np.asarray(beta, float))
    y = np.asarray(y, float)
    if y.ndim == 1:
        y = y[:, None]
    mu_e = mu - 0.5 * al @ be
    a_tot = mu_e + 0.5 * al @ g.width @ al
    theta = 0.5 * (np.pi / 2 - cmath.phase(a_tot))
    rot = cmath.exp(1j * theta)
    amag = abs(a_tot)
    tau = y @ (be - g.width @ al) - g.linear @ al
    # ray through the complex saddle point s* = -tau / (2 a)
    saddle = -tau / (2 * a_tot)
    half = np.sqrt(60.0 / amag) + 4.0 * np.sqrt(pl_degree(g) + 1) / np.sqrt(amag)
    h = 0.2 / np.sqrt(amag)
    if n_nodes is None:
        n_nodes = int(2 * np.ceil(half / h)) + 1
    r = np.linspace(-half, half, n_nodes)
    dr = r[1] - r[0]
    s = saddle[:, None] + r[None, :] * rot
    pts = y[:, None, :] - s[..., None] * al
    amp, expo = g.evaluate_parts(pts)
    vals = amp * np.exp(1j * mu_e * s ** 2 + 1j * s * (y @ be)[:, None] + expo)
    return rot * dr * np.sum(vals, axis=1)


def pl_degree(g: PolyGaussian) -> int:
    return max(sum(k) for k in g.poly)


# ----------------------------------------------------------- phase lemma check

def _flow_zs(model: ModelSpec, band: int, t0: float, z0, t1: float):
    """(z, S) after flowing band ``band`` from t0 to t1 (either direction)."""
    if t1 == t0:
        return np.asarray(z0, float).copy(), 0.0
    rhs, size = bundle_rhs(model, band, with_y=False)
    m = 2 * model.dim_d
    st = np.zeros(size)
    st[:m] = z0
    st[m + 1:] = np.eye(m).ravel()
    sol = solve_ivp(rhs, (t0, t1), st, method="DOP853", rtol=1e-13, atol=1e-13)
    return sol.y[:m, -1], float(sol.y[m, -1])


def phase_lemma_check(model: ModelSpec, event: CrossingEvent, h: Optional[float] = None) -> dict:
    """Finite-difference derivatives at sigma = 0 of the composed flow and phase.

    zeta(sigma) = Phi_2^{tb, tb+sigma} Phi_1^{tb+sigma, tb} z_flat and
    Lambda(sigma) = S_1 + S_2 - (q(sigma) - q_flat).p_flat.
    """
    tb, zb = event.t_flat, event.z_flat
    d = model.dim_d
    if h is None:
        h = 1e-3 * max(1.0, abs(tb))

    def zeta_lambda(sig):
        z1, s1 = _flow_zs(model, 1, tb, zb, tb + sig)
        z2, s2 = _flow_zs(model, 2, tb + sig, z1, tb)
        lam = s1 + s2 - (z2[:d] - zb[:d]) @ zb[d:]
        return z2, lam

    sig = np.array([-2, -1, 0, 1, 2]) * h
    zs, ls = zip(*(zeta_lambda(s) for s in sig))
    zs = np.array(zs)
    ls = np.array(ls)
    # fourth-order central differences
    zdot = (zs[0] - 8 * zs[1] + 8 * zs[3] - zs[4]) / (12 * h)
    ldot = (ls[0] - 8 * ls[1] + 8 * ls[3] - ls[4]) / (12 * h)
    lddot = (-ls[0] + 16 * ls[1] - 30 * ls[2] + 16 * ls[3] - ls[4]) / (12 * h ** 2)
    t = tb
    z = zb
    zdot_exact = j_matrix(d) @ (model.grad("h1", t, z) - model.grad("h2", t, z))
    tr = event.transfer
    lddot_exact = 2 * tr.mu + tr.alpha @ tr.beta
    return {
        "zeta_dot_fd": zdot, "zeta_dot_exact": zdot_exact,
        "lambda_0": float(ls[2]), "lambda_dot_fd": float(ldot),
        "lambda_ddot_fd": float(lddot), "lambda_ddot_exact": float(lddot_exact),
        "zeta_dot_rel_err": float(np.linalg.norm(zdot - zdot_exact) / max(np.linalg.norm(zdot_exact), 1e-300)),
        "lambda_ddot_rel_err": float(abs(lddot - lddot_exact) / max(abs(lddot_exact), 1e-300)),
    }
