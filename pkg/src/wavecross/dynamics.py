"""Classical bundle along one eigenvalue surface.

The bundle is the joint ODE state (z, S, F, Y): trajectory, action
``S = int p.dq - h dt``, linearised flow ``dF/dt = J Hess h F`` and the
parallel-transported eigenvector ``dY/dt = -i Theta Y``.  On Ran Pi the last
generator coincides with ``Omega + K``; using the skew-Hermitian form keeps
``|Y|`` fixed by the exact flow.

All components are advanced by one adaptive Runge-Kutta method (DOP853).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .gaussian import SymplecticBlocks, j_matrix
from .models import ModelSpec

__all__ = [
    "TrajectoryBundle", "TrajectoryTrace", "IntegratorControls", "InvariantBreachError",
    "StepRejectedError", "initial_bundle", "flow_step", "integrate_to", "integrate_batch",
    "theta_matrices", "bundle_rhs", "write_trace_csv",
]


class InvariantBreachError(RuntimeError):
    pass


class StepRejectedError(RuntimeError):
    pass


@dataclass(frozen=True)
class IntegratorControls:
    rtol: float = 1e-12
    atol: float = 1e-12
    method: str = "DOP853"
    max_step: float = np.inf
    symplectic_tol: float = 1e-8
    norm_tol: float = 1e-10
    eigenspace_tol: float = 1e-8
    check: bool = True


@dataclass(frozen=True)
class TrajectoryBundle:
    t: float
    z: np.ndarray
    s_action: float
    f_blocks: SymplecticBlocks
    y_vec: np.ndarray

    @property
    def d(self) -> int:
        return len(self.z) // 2

    @property
    def q(self) -> np.ndarray:
        return self.z[: self.d]

    @property
    def p(self) -> np.ndarray:
        return self.z[self.d:]

    @property
    def F(self) -> np.ndarray:
        return self.f_blocks.matrix

    def pack(self) -> np.ndarray:
        return np.concatenate([self.z, [self.s_action], self.F.ravel(), self.y_vec.real, self.y_vec.imag])

    @classmethod
    def unpack(cls, t: float, y: np.ndarray, d: int, n: int) -> "TrajectoryBundle":
        m = 2 * d
        z = y[:m].copy()
        s = float(y[m])
        f = y[m + 1: m + 1 + m * m].reshape(m, m)
        yv = y[m + 1 + m * m: m + 1 + m * m + n] + 1j * y[m + 1 + m * m + n:]
        return cls(float(t), z, s, SymplecticBlocks.from_matrix(f), yv)

    def symplectic_defect(self) -> float:
        return self.f_blocks.residual()

    def to_row(self) -> List[float]:
        return [self.t, *self.z, self.s_action, *self.F.ravel(), *self.y_vec.real, *self.y_vec.imag]


def initial_bundle(model: ModelSpec, band: int, t0: float, z0, s0: float = 0.0,
                   y0: Optional[np.ndarray] = None) -> TrajectoryBundle:
    z0 = np.asarray(z0, dtype=float).ravel()
    if y0 is None:
        y0 = model.band_vector(band, t0, z0)
    y0 = np.asarray(y0, dtype=complex)
    return TrajectoryBundle(float(t0), z0, float(s0), SymplecticBlocks.identity(model.dim_d), y0)


# ---------------------------------------------------------------- generator

def _bracket_matrices(dA: np.ndarray, dB: np.ndarray, d: int) -> np.ndarray:
    """{A, B} for matrix fields with gradients shaped (2d, ..., N, N)."""
    out = 0
    for k in range(d):
        out = out + dA[d + k] @ dB[k] - dA[k] @ dB[d + k]
    return out


def theta_matrices(model: ModelSpec, band: int, t: float, z):
    """(Omega, K, Theta) at (t, z) for the given band; z may carry batch axes."""
    z = np.asarray(z, dtype=float)
    n = model.dim_N
    if n == 1:
        zero = np.zeros(z.shape[:-1] + (1, 1), complex)
        return zero, zero, zero
    d = model.dim_d
    other = 2 if band == 1 else 1
    pi = model.projector(band, t, z)
    piperp = np.eye(n) - pi
    dpi = model.projector_grad(band, t, z)
    dtpi = model.projector_dt(band, t, z)
    h = model.value(f"h{band}", t, z)
    hperp = model.value(f"h{other}", t, z)
    gh = model.grad(f"h{band}", t, z)
    pb = _bracket_matrices(dpi, dpi, d)
    omega = -0.5 * (h - hperp)[..., None, None] * (pi @ pb @ pi)
    hpi = 0
    for k in range(d):
        hpi = hpi + gh[..., d + k, None, None] * dpi[k] - gh[..., k, None, None] * dpi[d + k]
    kmat = piperp @ (dtpi + hpi) @ pi
    theta = 1j * omega + 1j * (kmat - np.conj(np.swapaxes(kmat, -1, -2)))
    return omega, kmat, theta


def _generator(model: ModelSpec, band: int, t: float, z) -> np.ndarray:
    """-i Theta, equal to Omega + K on Ran Pi."""
    _, _, theta = theta_matrices(model, band, t, z)
    return -1j * theta


def bundle_rhs(model: ModelSpec, band: int, with_y: bool = True):
    """Right-hand side for a batch of flattened bundles, state shape (n_seeds * size,)."""
    d = model.dim_d
    m = 2 * d
    n = model.dim_N
    jm = j_matrix(d)
    hname = f"h{band}"
    size = m + 1 + m * m + (2 * n if with_y else 0)

    def rhs(t, state):
        st = state.reshape(-1, size)
        z = st[:, :m]
        f = st[:, m + 1: m + 1 + m * m].reshape(-1, m, m)
        gh = model.grad(hname, t, z)
        hh = model.hess(hname, t, z)
        hv = model.value(hname, t, z)
        out = np.empty_like(st)
        zdot = gh @ jm.T
        out[:, :m] = zdot
        out[:, m] = np.sum(z[:, d:] * zdot[:, :d], axis=1) - hv
        out[:, m + 1: m + 1 + m * m] = (jm @ hh @ f).reshape(-1, m * m)
        if with_y:
            yv = st[:, m + 1 + m * m: m + 1 + m * m + n] + 1j * st[:, m + 1 + m * m + n:]
            if n == 1:
                out[:, m + 1 + m * m:] = 0.0
            else:
                g = _generator(model, band, t, z)
                ydot = np.einsum("kij,kj->ki", g, yv)
                out[:, m + 1 + m * m: m + 1 + m * m + n] = ydot.real
                out[:, m + 1 + m * m + n:] = ydot.imag
        return out.ravel()

    return rhs, size


# ------------------------------------------------------------------ traces

@dataclass
class TrajectoryTrace:
    """Dense-output integration record of one bundle."""
    model: ModelSpec
    band: int
    t0: float
    t_end: float
    samples: List[TrajectoryBundle]
    dense: Optional[object] = None
    initial: Optional[TrajectoryBundle] = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return np.array([b.t for b in self.samples])

    @property
    def final(self) -> TrajectoryBundle:
        return self.samples[-1]

    def at(self, t: float) -> TrajectoryBundle:
        lo, hi = min(self.t0, self.t_end), max(self.t0, self.t_end)
        if not (lo - 1e-12 <= t <= hi + 1e-12):
            raise ValueError(f"time {t} outside trace [{lo}, {hi}]")
        if self.dense is None or t == self.t0:
            if t == self.t0 and self.initial is not None:
                return self.initial
            return self.samples[int(np.argmin(np.abs(self.times - t)))]
        y = self.dense(t)
        return TrajectoryBundle.unpack(t, y, self.model.dim_d, self.model.dim_N)

    def z_at(self, t) -> np.ndarray:
        """Centres at one or many times, shape (..., 2d)."""
        m = 2 * self.model.dim_d
        if self.dense is None:
            return self.at(float(t)).z
        y = self.dense(np.atleast_1d(t))
        out = y[:m].T
        return out[0] if np.ndim(t) == 0 else out

    def f_at(self, t) -> np.ndarray:
        m = 2 * self.model.dim_d
        y = self.dense(np.atleast_1d(t))
        out = y[m + 1: m + 1 + m * m].T.reshape(-1, m, m)
        return out[0] if np.ndim(t) == 0 else out


def _check_invariants(model, band, bundles, controls: IntegratorControls) -> dict:
    sym = max(b.symplectic_defect() for b in bundles)
    nrm = max(abs(np.linalg.norm(b.y_vec) - 1) for b in bundles)
    other = 2 if band == 1 else 1
    leak = 0.0
    if model.dim_N == 2:
        leak = max(float(np.linalg.norm(model.projector(other, b.t, b.z) @ b.y_vec)) for b in bundles)
    diag = {"symplectic_defect": sym, "norm_defect": nrm, "eigenspace_defect": leak}
    if controls.check:
        if sym > 10 * controls.symplectic_tol:
            raise InvariantBreachError(f"symplectic defect {sym:.3e}")
        if nrm > 10 * controls.norm_tol:
            raise InvariantBreachError(f"eigenvector norm defect {nrm:.3e}")
        if leak > 10 * controls.eigenspace_tol:
            raise InvariantBreachError(f"eigenvector left its eigenspace: {leak:.3e}")
    return diag


class _ConstDense:
    """Dense output of a zero-length integration."""

    def __init__(self, y):
        self.y = y

    def __call__(self, t):
        if np.ndim(t) == 0:
            return self.y.copy()
        return np.repeat(self.y[:, None], len(t), axis=1)


def integrate_to(model: ModelSpec, band: int, initial: TrajectoryBundle, t_end: float,
                 controls: Optional[IntegratorControls] = None,
                 sample_times: Optional[Sequence[float]] = None) -> TrajectoryTrace:
    """Integrate a bundle from ``initial.t`` to ``t_end`` with dense output."""
    controls = controls or IntegratorControls()
    t0 = initial.t
    if t_end < t0:
        raise ValueError("t_end must not precede the initial time")
    if t_end == t0:
        return TrajectoryTrace(model, band, t0, t_end, [initial], _ConstDense(initial.pack()), initial,
                               _check_invariants(model, band, [initial], controls))
    rhs, _ = bundle_rhs(model, band)
    times = [t0, t_end] if sample_times is None else sorted({t0, t_end, *map(float, sample_times)})
    sol = solve_ivp(rhs, (t0, t_end), initial.pack(), method=controls.method, rtol=controls.rtol,
                    atol=controls.atol, max_step=controls.max_step, dense_output=True, t_eval=times)
    if not sol.success:
        raise StepRejectedError(sol.message)
    d, n = model.dim_d, model.dim_N
    bundles = [TrajectoryBundle.unpack(t, sol.y[:, i], d, n) for i, t in enumerate(sol.t)]
    bundles[0] = initial
    diag = _check_invariants(model, band, bundles, controls)
    diag["n_steps"] = int(len(sol.sol.ts) - 1)
    return TrajectoryTrace(model, band, t0, t_end, bundles, sol.sol, initial, diag)


def flow_step(model: ModelSpec, band: int, bundle: TrajectoryBundle, dt: float,
              controls: Optional[IntegratorControls] = None) -> TrajectoryBundle:
    """Advance one step of size dt (internally error-controlled)."""
    return integrate_to(model, band, bundle, bundle.t + dt, controls).final


def integrate_batch(model: ModelSpec, band: int, z0s: np.ndarray, t0: float, t_end: float,
                    y0s: Optional[np.ndarray] = None, sample_times: Optional[Sequence[float]] = None,
                    controls: Optional[IntegratorControls] = None, with_y: bool = True):
    """Integrate many independent bundles at once.

    Returns (times, z, S, F, Y) with leading axes (n_times, n_seeds).
    """
    controls = controls or IntegratorControls(rtol=1e-11, atol=1e-11)
    z0s = np.atleast_2d(np.asarray(z0s, float))
    ns, m = z0s.shape
    n = model.dim_N
    rhs, size = bundle_rhs(model, band, with_y)
    state = np.zeros((ns, size))
    state[:, :m] = z0s
    state[:, m + 1: m + 1 + m * m] = np.eye(m).ravel()
    if with_y:
        if y0s is None:
            y0s = np.array([model.band_vector(band, t0, z) for z in z0s])
        state[:, m + 1 + m * m: m + 1 + m * m + n] = np.real(y0s)
        state[:, m + 1 + m * m + n:] = np.imag(y0s)
    times = [t0, t_end] if sample_times is None else sorted({float(t0), float(t_end), *map(float, sample_times)})
    if t_end == t0:
        ys = np.repeat(state[None], len(times), axis=0)
    else:
        sol = solve_ivp(rhs, (t0, t_end), state.ravel(), method=controls.method, rtol=controls.rtol,
                        atol=controls.atol, t_eval=times)
        if not sol.success:
            raise StepRejectedError(sol.message)
        ys = sol.y.T.reshape(len(times), ns, size)
    z = ys[..., :m]
    s = ys[..., m]
    f = ys[..., m + 1: m + 1 + m * m].reshape(len(times), ns, m, m)
    y = ys[..., m + 1 + m * m: m + 1 + m * m + n] + 1j * ys[..., m + 1 + m * m + n:] if with_y else None
    return np.array(times), z, s, f, y


def write_trace_csv(trace: TrajectoryTrace, path, times: Optional[Sequence[float]] = None) -> None:
    """Columns: t, q..., p..., S, F row-major, Re Y..., Im Y..."""
    d, n = trace.model.dim_d, trace.model.dim_N
    m = 2 * d
    header = (["t"] + [f"q{j + 1}" for j in range(d)] + [f"p{j + 1}" for j in range(d)] + ["S"]
              + [f"F{i}{j}" for i in range(m) for j in range(m)]
              + [f"reY{k + 1}" for k in range(n)] + [f"imY{k + 1}" for k in range(n)])
    rows = trace.samples if times is None else [trace.at(t) for t in times]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for b in rows:
            w.writerow([f"{v:.17g}" for v in b.to_row()])
