"""Semiclassical wave packet propagation through a codimension-one crossing.

The main branch lives on band 1:

    psi_1(t) = e^{iS/eps} Vhat(t) WP^eps_{z(t)} M[F(t)] (1 + sqrt(eps) b1(t)) phi_0,

with b1 the time integral of the cubic Taylor term of h along the flow.
When the band-1 trajectory meets {f = 0} a band-2 branch is spawned with
weight sqrt(eps) gamma * prefactor and profile T phi_1(t_flat), and both
branches are carried to the final time.

``reconstruct`` applies Vhat(t) to first order: V(t, z(t) + sqrt(eps) w) is
expanded to the linear term, whose gradient comes from neighbouring
trajectories (d_z V = d_{z0} Y . F^{-1}).
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import polynomial as pl
from .crossing import CrossingEvent, detect_crossing, transfer_polygaussian
from .dynamics import (IntegratorControls, TrajectoryTrace, initial_bundle, integrate_batch,
                       integrate_to)
from .gaussian import (BranchJumpError, PolyGaussian, SymplecticBlocks, WeylPolyOp,
                       continue_sqrt, evaluate_on_grid, metaplectic_apply, weyl_apply)
from .models import ModelSpec

__all__ = [
    "WavePacketBranch", "SemiclassicalSolution", "GapViolationError", "propagate",
    "adiabatic_propagate", "reconstruct", "b1_symbol", "make_initial_branch",
]


class GapViolationError(RuntimeError):
    pass


@dataclass(frozen=True)
class WavePacketBranch:
    band: int
    center: np.ndarray
    action: float
    profile: PolyGaussian
    eigvec: np.ndarray
    weight: complex = 1.0
    born_at: float = 0.0
    t: Optional[float] = None

    @property
    def time(self) -> float:
        return self.born_at if self.t is None else self.t

    def to_json(self) -> dict:
        return {
            "band": self.band, "t": self.time, "born_at": self.born_at,
            "center": [float(v) for v in self.center], "action": float(self.action),
            "weight": [float(np.real(self.weight)), float(np.imag(self.weight))],
            "eigvec": [[float(v.real), float(v.imag)] for v in np.asarray(self.eigvec, complex)],
            "profile": self.profile.to_json(),
        }


def make_initial_branch(model: ModelSpec, z0, gamma0, t0: float = 0.0,
                        poly: Optional[dict] = None, band: int = 1) -> WavePacketBranch:
    """Normalised Gaussian initial data on the chosen band."""
    from .gaussian import unit_gaussian
    g = unit_gaussian(np.atleast_2d(gamma0), poly)
    z0 = np.asarray(z0, float)
    return WavePacketBranch(band, z0, 0.0, g, model.band_vector(band, t0, z0), 1.0, t0, t0)


# ------------------------------------------------------------------ tracks

@dataclass
class _Track:
    band: int
    trace: TrajectoryTrace
    profile0: PolyGaussian
    weight: complex
    born_at: float
    eps: float
    with_b1: bool
    spawned: bool = False
    _b1_cache: Dict[float, PolyGaussian] = field(default_factory=dict)
    _grad_cache: Dict[float, np.ndarray] = field(default_factory=dict)

    def sqrt_det(self, t: float, n: int = 64) -> complex:
        """det^{1/2}(A + B Gamma_0) continued from 1 at the birth time."""
        if t == self.born_at:
            return 1.0 + 0j
        g0 = self.profile0
        gam = g0.width
        while True:
            ts = np.linspace(self.born_at, t, n + 1)[1:]
            fs = self.trace.f_at(ts)
            d = gam.shape[0]
            s = 1.0 + 0j
            try:
                for f in fs:
                    s = continue_sqrt(complex(np.linalg.det(f[:d, :d] + f[:d, d:] @ gam)), s)
                return s
            except BranchJumpError:
                n *= 4
                if n > 1 << 16:
                    raise

    def b1_applied(self, t: float) -> PolyGaussian:
        """(1 + sqrt(eps) b1(t)) phi_0 as a profile."""
        if t not in self._b1_cache:
            op = b1_symbol(self.trace, self.born_at, t)
            b1phi = weyl_apply(op, self.profile0)
            poly = pl.add(self.profile0.poly, pl.scale(b1phi.poly, math.sqrt(self.eps)))
            self._b1_cache[t] = self.profile0.with_poly(poly)
        return self._b1_cache[t]

    def profile_at(self, t: float, with_b1: Optional[bool] = None) -> PolyGaussian:
        use_b1 = self.with_b1 if with_b1 is None else with_b1
        src = self.b1_applied(t) if use_b1 and t != self.born_at else self.profile0
        if t == self.born_at:
            return src
        bundle = self.trace.at(t)
        return metaplectic_apply(bundle.f_blocks, src, sqrt_ref=self.sqrt_det(t))

    def eigvec_gradient(self, t: float, h: float = 1e-4) -> np.ndarray:
        """d_z V(t, z(t)) for the transported eigenvector field, shape (N, 2d)."""
        if t in self._grad_cache:
            return self._grad_cache[t]
        model = self.trace.model
        b0 = self.trace.initial
        m = 2 * model.dim_d
        n = model.dim_N
        if n == 1:
            g = np.zeros((1, m), complex)
        else:
            z0s = np.array([b0.z + s * h * e for e in np.eye(m) for s in (1, -1)])
            y0s = []
            for z in z0s:
                w = model.projector(self.band, b0.t, z) @ b0.y_vec
                y0s.append(w / np.linalg.norm(w))
            _, _, _, _, ys = integrate_batch(model, self.band, z0s, b0.t, t, np.array(y0s),
                                             controls=IntegratorControls(rtol=1e-12, atol=1e-12))
            yt = ys[-1]
            dy = np.stack([(yt[2 * k] - yt[2 * k + 1]) / (2 * h) for k in range(m)], axis=1)
            finv = SymplecticBlocks.from_matrix(self.trace.at(t).F).inverse().matrix
            g = dy @ finv
        self._grad_cache[t] = g
        return g

    def snapshot(self, t: float) -> WavePacketBranch:
        b = self.trace.at(t)
        return WavePacketBranch(self.band, b.z.copy(), b.s_action, self.profile_at(t), b.y_vec.copy(),
                                self.weight, self.born_at, t)


def b1_symbol(trace: TrajectoryTrace, t0: float, t: float, rtol: float = 1e-8) -> WeylPolyOp:
    """Weyl symbol of b1(t): (1/i) int_{t0}^t sum_{|a|=3} d^a h(s, z(s)) (F(s) w)^a / a! ds.

    Composite Gauss-Legendre in s; panels double until the tensor changes by
    less than ``rtol`` relative.
    """
    model = trace.model
    d = model.dim_d
    m = 2 * d
    hname = f"h{trace.band}"
    xg, wg = np.polynomial.legendre.leggauss(8)

    def tensor(npan: int) -> np.ndarray:
        edges = np.linspace(t0, t, npan + 1)
        mids = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * (edges[1:] - edges[:-1])
        nodes = (mids[:, None] + half[:, None] * xg[None, :]).ravel()
        wts = (half[:, None] * wg[None, :]).ravel()
        zs = trace.z_at(nodes)
        fs = trace.f_at(nodes)
        acc = np.zeros((m, m, m))
        for s, z, f, w in zip(nodes, zs, fs, wts):
            d3 = model.third(hname, float(s), z)
            acc += w * np.einsum("ijk,ia,jb,kc->abc", d3, f, f, f)
        return acc / 6.0

    npan = max(4, int(np.ceil(abs(t - t0) / 0.25)))
    q = tensor(npan)
    for _ in range(8):
        q2 = tensor(2 * npan)
        if np.max(np.abs(q2 - q)) <= rtol * max(np.max(np.abs(q2)), 1e-300) or np.max(np.abs(q2)) < 1e-14:
            q = q2
            break
        q, npan = q2, 2 * npan
    sym: dict = {}
    for a in range(m):
        for b in range(m):
            for c in range(m):
                if q[a, b, c] == 0:
                    continue
                e = [0] * m
                e[a] += 1
                e[b] += 1
                e[c] += 1
                sym[tuple(e)] = sym.get(tuple(e), 0j) + (-1j) * q[a, b, c]
    sym = {k: v for k, v in sym.items() if abs(v) > 0}
    return WeylPolyOp(d, sym or {(0,) * m: 0j})


# --------------------------------------------------------------- solutions

@dataclass
class SemiclassicalSolution:
    eps: float
    model: ModelSpec
    t0: float
    t_end: float
    tracks: List[_Track]
    crossing: Optional[CrossingEvent] = None
    diagnostics: dict = field(default_factory=dict)
    vector_correction: bool = True

    @property
    def branches(self) -> List[WavePacketBranch]:
        return self.branches_at(self.t_end)

    def branches_at(self, t: float) -> List[WavePacketBranch]:
        return [tr.snapshot(t) for tr in self.tracks if tr.born_at <= t]

    def in_boundary_layer(self, t: float) -> bool:
        if self.crossing is None:
            return False
        return abs(t - self.crossing.t_flat) < self.eps ** (2.0 / 9.0)

    def to_json(self, t: Optional[float] = None) -> dict:
        t = self.t_end if t is None else t
        out = {
            "eps": self.eps, "t0": self.t0, "t_end": self.t_end, "t": t,
            "model": self.model.to_json(),
            "branches": [b.to_json() for b in self.branches_at(t)],
            "crossing": None if self.crossing is None else self.crossing.to_json(),
            "boundary_layer": self.in_boundary_layer(t),
            "diagnostics": _jsonable(self.diagnostics),
        }
        return out

    def dumps(self, t: Optional[float] = None) -> str:
        return json.dumps(self.to_json(t), indent=2, sort_keys=True)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def propagate(model: ModelSpec, eps: float, initial: WavePacketBranch, t_end: float,
              with_b1: bool = True, vector_correction: bool = True,
              controls: Optional[IntegratorControls] = None,
              sample_times: Optional[Sequence[float]] = None) -> SemiclassicalSolution:
    """Two-branch semiclassical solution on [initial.time, t_end]."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    t0 = initial.time
    b0 = initial_bundle(model, initial.band, t0, initial.center, initial.action, initial.eigvec)
    trace1 = integrate_to(model, initial.band, b0, t_end, controls, sample_times)
    main = _Track(initial.band, trace1, initial.profile, complex(initial.weight), t0, eps, with_b1)
    tracks = [main]
    diag = {"band1": dict(trace1.diagnostics)}
    event = None
    if model.dim_N == 2 and initial.band == 1:
        event = detect_crossing(model, trace1, controls=controls)
    if event is not None:
        diag["crossing_flags"] = {"zero_transfer": event.zero_transfer,
                                  "later_crossings": event.later_crossings}
        if not event.zero_transfer:
            phi1 = main.profile_at(event.t_flat, with_b1=False)
            pref, g_flat = transfer_polygaussian(event, phi1)
            weight = complex(initial.weight) * math.sqrt(eps) * event.gamma_flat * pref
            b2 = initial_bundle(model, 2, event.t_flat, event.z_flat, event.s_flat, event.v2_flat)
            trace2 = integrate_to(model, 2, b2, t_end, controls,
                                  None if sample_times is None else [s for s in sample_times if s >= event.t_flat])
            tracks.append(_Track(2, trace2, g_flat, weight, event.t_flat, eps, False, spawned=True))
            diag["band2"] = dict(trace2.diagnostics)
            diag["transfer_prefactor"] = [pref.real, pref.imag]
    return SemiclassicalSolution(eps, model, t0, t_end, tracks, event, diag, vector_correction)


def adiabatic_propagate(model: ModelSpec, eps: float, initial: WavePacketBranch, t_end: float,
                        gap_floor: float = 1e-6, controls: Optional[IntegratorControls] = None,
                        vector_correction: bool = True) -> SemiclassicalSolution:
    """Single-branch propagation with b1 for gapped models; refuses near crossings."""
    sol = propagate(model, eps, initial, t_end, with_b1=True, vector_correction=vector_correction,
                    controls=controls)
    if model.dim_N == 2:
        tr = sol.tracks[0].trace
        ts = np.linspace(tr.t0, tr.t_end, 401)
        fs = np.array([float(model.value("f", t, z)) for t, z in zip(ts, tr.z_at(ts))])
        if sol.crossing is not None or np.min(np.abs(fs)) < gap_floor:
            raise GapViolationError("gap closes along the trajectory; use propagate() for crossings")
        sol.diagnostics["min_gap"] = float(2 * np.min(np.abs(fs)))
    return sol


def reconstruct(solution: SemiclassicalSolution, t: float, grid, per_branch: bool = False):
    """Sample the semiclassical wave function on a grid, shape (N,) + grid shape.

    With ``per_branch`` a list of per-branch arrays is returned as well.
    """
    eps = solution.eps
    model = solution.model
    d = model.dim_d
    parts = []
    for tr in solution.tracks:
        if tr.born_at > t:
            continue
        b = tr.trace.at(t)
        prof = tr.profile_at(t)
        phase = tr.weight * np.exp(1j * b.s_action / eps)
        vals = evaluate_on_grid(prof, b.z, eps, grid)
        field_ = b.y_vec[:, None] * vals.ravel()[None, :]
        if solution.vector_correction and not tr.spawned and model.dim_N > 1:
            gv = tr.eigvec_gradient(t)
            for k in range(2 * d):
                if not np.any(gv[:, k]):
                    continue
                op = WeylPolyOp.position(d, k) if k < d else WeylPolyOp.momentum(d, k - d)
                wk = evaluate_on_grid(weyl_apply(op, prof), b.z, eps, grid, check=False)
                field_ = field_ + math.sqrt(eps) * gv[:, k][:, None] * wk.ravel()[None, :]
        parts.append((phase * field_).reshape((model.dim_N,) + vals.shape))
    total = np.sum(parts, axis=0) if parts else None
    return (total, parts) if per_branch else total
