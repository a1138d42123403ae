"""Split-step spectral oracle for i eps d_t psi = (K(-i eps grad) + V(t, x)) psi.

Models must be separable: K(xi) = a I + b U(u) and V(t, x) = a I + b U(u)
pointwise, so each split step is a closed-form 2x2 exponential.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .gaussian import evaluate_on_grid
from .grid import Grid
from .models import ModelSpec, u_matrix

__all__ = ["GridState", "ResolutionError", "step", "evolve", "project_band", "l2_norm",
           "l2_error", "L2Comparison", "initial_state", "default_dt", "spectral_tail"]


class ResolutionError(RuntimeError):
    pass


@dataclass(frozen=True)
class GridState:
    eps: float
    grid: Grid
    psi: np.ndarray  # (N,) + grid.shape
    t: float = 0.0

    @property
    def n_comp(self) -> int:
        return self.psi.shape[0]

    def norm(self) -> float:
        return l2_norm(self.psi, self.grid)


def l2_norm(psi: np.ndarray, grid: Grid) -> float:
    return float(np.sqrt(np.sum(np.abs(psi) ** 2) * grid.cell))


def _fft(psi, d):
    return np.fft.fftn(psi, axes=tuple(range(1, d + 1)))


def _ifft(psi, d):
    return np.fft.ifftn(psi, axes=tuple(range(1, d + 1)))


def _expm_fields(a, b, u, tau, n):
    """Pointwise exp(-i tau (a I + b U(u))) as (..., N, N)."""
    ph = np.exp(-1j * tau * a)
    if n == 1:
        return (ph * np.exp(-1j * tau * b * u[0]))[..., None, None]
    c = np.cos(tau * b)[..., None, None]
    s = np.sin(tau * b)[..., None, None]
    return ph[..., None, None] * (c * np.eye(2) - 1j * s * u_matrix(u))


def _apply(mat, psi):
    # mat (..., N, N), psi (N, ...)
    return np.moveaxis(np.einsum("...ij,...j->...i", mat, np.moveaxis(psi, 0, -1)), -1, 0)


class _Stepper:
    """Caches the kinetic propagator for a fixed (model, grid, eps, dt)."""

    def __init__(self, model: ModelSpec, grid: Grid, eps: float, dt: float):
        if not model.separable:
            raise ValueError(f"model {model.name!r} is not separable; no grid oracle")
        self.model, self.grid, self.eps, self.dt = model, grid, eps, dt
        xi = tuple(eps * k for k in grid.k_mesh())
        ka, kb, ku = model.kinetic_fields(xi)
        self.kin = _expm_fields(ka, kb, ku, dt / eps, model.dim_N)
        self.x = grid.mesh()
        self.static = not _time_dependent(model)
        self._pot = None

    def potential(self, t):
        if self.static and self._pot is not None:
            return self._pot
        a, b, u = self.model.potential_fields(t, self.x)
        pot = _expm_fields(a, b, u, self.dt / (2 * self.eps), self.model.dim_N)
        if self.static:
            self._pot = pot
        return pot

    def __call__(self, psi, t):
        d = self.grid.d
        half = self.potential(t + 0.5 * self.dt)
        psi = _apply(half, psi)
        psi = _ifft(_apply(self.kin, _fft(psi, d)), d)
        return _apply(half, psi)


def _time_dependent(model: ModelSpec) -> bool:
    if not model.symbolic:
        return True
    import sympy as sp
    from .models import T
    exprs = list(model.potential[:2]) + list(model.potential[2])
    return any(T in sp.sympify(e).free_symbols for e in exprs)


def spectral_tail(psi: np.ndarray, grid: Grid, frac: float = 0.1) -> float:
    """Relative mass in the outer ``frac`` of frequencies on any axis."""
    ph = np.abs(_fft(psi, grid.d)) ** 2
    total = np.sum(ph)
    if total == 0:
        return 0.0
    mask = np.zeros(grid.shape, bool)
    for j, k in enumerate(grid.k_mesh()):
        kmax = np.max(np.abs(grid.k_axes[j]))
        mask |= np.abs(k) > (1 - frac) * kmax
    return float(np.sum(ph[:, mask]) / total)


def _check_alias(psi, grid, tol):
    tail = spectral_tail(psi, grid)
    if tail > tol:
        raise ResolutionError(f"spectral tail mass {tail:.2e} exceeds {tol:.0e}: increase resolution")


def step(model: ModelSpec, state: GridState, dt: float, alias_tol: float = 1e-8) -> GridState:
    """One Strang step (potential half-steps sampled at the midpoint time)."""
    out = _Stepper(model, state.grid, state.eps, dt)(state.psi, state.t)
    _check_alias(out, state.grid, alias_tol)
    return GridState(state.eps, state.grid, out, state.t + dt)


def evolve(model: ModelSpec, state: GridState, t_end: float, dt: Optional[float] = None,
           n_steps: Optional[int] = None, alias_tol: float = 1e-8, check_every: int = 100) -> GridState:
    """Advance to ``t_end`` with equal steps no larger than ``dt``."""
    span = t_end - state.t
    if n_steps is None:
        if dt is None:
            raise ValueError("give dt or n_steps")
        n_steps = max(1, int(np.ceil(abs(span) / dt - 1e-9)))
    if span == 0:
        return state
    h = span / n_steps
    stepper = _Stepper(model, state.grid, state.eps, h)
    psi, t = state.psi, state.t
    for k in range(n_steps):
        psi = stepper(psi, t)
        t = state.t + (k + 1) * h
        if (k + 1) % check_every == 0:
            _check_alias(psi, state.grid, alias_tol)
    _check_alias(psi, state.grid, alias_tol)
    return GridState(state.eps, state.grid, psi, t_end)


def default_dt(model: ModelSpec, eps: float, points: np.ndarray, t: float = 0.0,
               safety: float = 0.1) -> float:
    """eps * safety / max|H| over phase-space points the solution visits."""
    return eps * safety / max(model.max_abs_h(np.atleast_2d(points), t), 1e-12)


def _projector_field(model: ModelSpec, grid: Grid, t: float, eps: float):
    dep = model.projector_dependence
    if dep == "x":
        _, _, u = model.potential_fields(t, grid.mesh())
        return "x", u
    if dep == "xi":
        _, _, u = model.kinetic_fields(tuple(eps * k for k in grid.k_mesh()))
        return "xi", u
    if dep == "const":
        return "const", None
    raise NotImplementedError("band projection needs a projector depending on x only or xi only")


def project_band(model: ModelSpec, state: GridState, band: int) -> GridState:
    """Pointwise (or transform-side) multiplication by Pi_band."""
    if model.dim_N == 1:
        return state
    kind, u = _projector_field(model, state.grid, state.t, state.eps)
    if kind == "const":
        u = model.u(state.t, np.zeros((1, 2 * model.dim_d)))[:, 0]
        u = np.broadcast_to(u.reshape((3,) + (1,) * state.grid.d), (3,) + state.grid.shape)
        kind = "x"
    s = 1.0 if band == 1 else -1.0
    pi = 0.5 * (np.eye(2) + s * u_matrix(u))
    if kind == "x":
        return replace(state, psi=_apply(pi, state.psi))
    d = state.grid.d
    return replace(state, psi=_ifft(_apply(pi, _fft(state.psi, d)), d))


@dataclass(frozen=True)
class L2Comparison:
    total: float
    per_band: tuple
    overlap: float
    band_overlaps: tuple
    band_masses: tuple

    def to_json(self) -> dict:
        return {"total": self.total, "per_band": list(self.per_band), "overlap": self.overlap,
                "band_overlaps": list(self.band_overlaps), "band_masses": list(self.band_masses)}


def _overlap(a, b, cell):
    na = np.sqrt(np.sum(np.abs(a) ** 2) * cell)
    nb = np.sqrt(np.sum(np.abs(b) ** 2) * cell)
    if na == 0 or nb == 0:
        return 0.0
    return float(abs(np.sum(np.conj(a) * b) * cell) / (na * nb))


def l2_error(state: GridState, other: np.ndarray, model: Optional[ModelSpec] = None) -> L2Comparison:
    """L2 distance between the oracle state and a sampled array on the same grid.

    With a model, per-band errors, normalised band overlaps and oracle band
    masses are reported as well.
    """
    other = np.asarray(other)
    if other.shape != state.psi.shape:
        raise ValueError(f"grid mismatch: {other.shape} vs {state.psi.shape}")
    cell = state.grid.cell
    total = l2_norm(state.psi - other, state.grid)
    ov = _overlap(state.psi, other, cell)
    per, bov, mass = [], [], []
    if model is not None and model.dim_N == 2:
        for band in (1, 2):
            a = project_band(model, state, band).psi
            b = project_band(model, replace(state, psi=other), band).psi
            per.append(l2_norm(a - b, state.grid))
            bov.append(_overlap(a, b, cell))
            mass.append(l2_norm(a, state.grid))
    return L2Comparison(total, tuple(per), ov, tuple(bov), tuple(mass))


def initial_state(model: ModelSpec, branch, eps: float, grid: Grid) -> GridState:
    """Grid samples of Vhat_0 WP_{z0} phi_0 with V_0(z) = Pi(t0, z) Y0 / |Pi(t0, z) Y0|.

    For projectors depending on x (xi) the field is applied pointwise in
    position (frequency) space, which is its exact Weyl quantisation.
    """
    t0 = branch.time
    scal = evaluate_on_grid(branch.profile, branch.center, eps, grid)
    y0 = np.asarray(branch.eigvec, complex)
    if model.dim_N == 1:
        return GridState(eps, grid, branch.weight * np.exp(1j * branch.action / eps) * scal[None], t0)
    kind, u = _projector_field(model, grid, t0, eps)
    if kind == "const":
        psi = y0.reshape((2,) + (1,) * grid.d) * scal[None]
    else:
        s = 1.0 if branch.band == 1 else -1.0
        w = np.einsum("...ij,j->...i", 0.5 * (np.eye(2) + s * u_matrix(u)), y0)
        w = w / np.maximum(np.linalg.norm(w, axis=-1, keepdims=True), 1e-300)
        w = np.moveaxis(w, -1, 0)
        if kind == "x":
            psi = w * scal[None]
        else:
            d = grid.d
            psi = _ifft(w * _fft(scal[None], d), d)
    psi = branch.weight * np.exp(1j * branch.action / eps) * psi
    return GridState(eps, grid, psi, t0)
