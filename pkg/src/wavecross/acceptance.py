"""The ten acceptance studies as plain functions returning CriterionResult."""
from __future__ import annotations

import functools
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .crossing import detect_crossing, phase_lemma_check, transfer_gaussian, transfer_polygaussian, transfer_quadrature
from .dynamics import initial_bundle, integrate_to, theta_matrices
from .gaussian import fourier, norm, unit_gaussian
from .grid import Grid, auto_grid
from .hk import hk_decompose, hk_propagate
from .models import ModelSpec, builtin_model
from .propagator import make_initial_branch, propagate, reconstruct
from .reference import GridState, default_dt, evolve, initial_state, l2_error, l2_norm, project_band

__all__ = ["CriterionResult", "observed_orders", "random_siegel", "CRITERIA", "run_criterion",
           "transfer_closed_form", "fourier_intertwining", "symplectic_siegel", "parallel_transport",
           "adiabatic_order", "crossing_study", "crossing_order", "transferred_branch", "phase_lemma",
           "herman_kluk", "oracle_unitarity"]


@dataclass
class CriterionResult:
    id: int
    name: str
    passed: bool
    metrics: Dict[str, object] = field(default_factory=dict)
    thresholds: Dict[str, object] = field(default_factory=dict)
    runtime: float = 0.0
    runtime_limit: Optional[float] = None

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        key = ", ".join(f"{k}={_fmt(v)}" for k, v in self.metrics.items() if not isinstance(v, (list, dict)))
        lim = f"/{self.runtime_limit:.0f}s" if self.runtime_limit else ""
        return f"[{status}] criterion {self.id:2d} {self.name}: {key} ({self.runtime:.1f}s{lim})"

    def to_json(self, with_runtime: bool = False) -> dict:
        out = {"id": self.id, "name": self.name, "passed": bool(self.passed),
               "metrics": _clean(self.metrics), "thresholds": _clean(self.thresholds)}
        if with_runtime:
            out["runtime"] = self.runtime
        return out


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.3g}"
    return str(v)


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_clean(v) for v in list(obj)]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def observed_orders(eps: Sequence[float], err: Sequence[float]) -> List[float]:
    """log(e_k / e_{k+1}) / log(eps_k / eps_{k+1}) for consecutive entries."""
    out = []
    for k in range(len(eps) - 1):
        out.append(float(np.log(err[k] / err[k + 1]) / np.log(eps[k] / eps[k + 1])))
    return out


def random_siegel(rng: np.random.Generator, d: int = 1) -> np.ndarray:
    a = rng.normal(size=(d, d))
    b = rng.normal(size=(d, d))
    return 0.5 * (a + a.T) + 1j * (b @ b.T + 0.5 * np.eye(d))


def _timed(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kw):
        t0 = time.perf_counter()
        res = fn(*args, **kw)
        res.runtime = time.perf_counter() - t0
        return res
    return wrapper


def _grid_rel(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


# ------------------------------------------------------------- criterion 1

@_timed
def transfer_closed_form(n_cases: int = 24, seed: int = 0, tol: float = 1e-6) -> CriterionResult:
    """Closed-form transfer against direct quadrature of the s-integral."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    cases = []
    for k in range(n_cases):
        mu = float(rng.choice([-1, 1]) * np.exp(rng.uniform(np.log(0.05), np.log(5))))
        al = rng.normal(size=1)
        be = rng.normal(size=1)
        gam = random_siegel(rng)
        if k % 3 == 1:
            al = np.zeros(1)
        g = unit_gaussian(gam)
        if k % 4 == 3:
            g = g.with_poly({(0,): 1.0, (1,): 0.3 - 0.2j, (2,): 0.1j})
        pref, out = transfer_polygaussian((mu, al, be), g)
        spread = 6.0 * max(1.0, 1.0 / math.sqrt(float(np.min(np.linalg.eigvalsh(out.width.imag)))))
        y = np.linspace(-spread, spread, 401)
        ref = transfer_quadrature(mu, al, be, g, y)
        err = _grid_rel(pref * out.evaluate(y[:, None]), ref)
        worst = max(worst, err)
        cases.append(err)
    # worked case
    g = unit_gaussian([[2j]])
    pref, out = transfer_gaussian((1.0, [1.0], [1.0]), g)
    width = complex(out.width[0, 0])
    y = np.linspace(-6, 6, 401)
    werr = _grid_rel(pref * out.evaluate(y[:, None]), transfer_quadrature(1.0, [1.0], [1.0], g, y))
    wdev = abs(width - (11 / 5 + 8j / 5))
    ok = worst < tol and werr < tol and wdev < 1e-12
    return CriterionResult(1, "transfer closed form vs quadrature", ok,
                           {"worst_rel_l2": max(worst, werr), "n_cases": n_cases + 1,
                            "worked_width": [width.real, width.imag], "worked_width_dev": wdev},
                           {"rel_l2": tol}, runtime_limit=5)


# ------------------------------------------------------------- criterion 2

def dft_matrix(y: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """Riemann-sum unitary Fourier transform from samples on y to points eta."""
    dy = y[1] - y[0]
    return (2 * np.pi) ** -0.5 * dy * np.exp(-1j * np.outer(eta, y))


@_timed
def fourier_intertwining(n_cases: int = 10, seed: int = 1, tol: float = 1e-6) -> CriterionResult:
    """F T_{mu,a,b} g = T_{mu,b,-a} F g, left side by numerical transform of grid samples."""
    rng = np.random.default_rng(seed)
    y = np.linspace(-30, 30, 1201)
    eta = np.linspace(-8, 8, 321)
    mat = dft_matrix(y[:-1], eta)
    worst = 0.0
    for _ in range(n_cases):
        mu = float(rng.choice([-1, 1]) * rng.uniform(0.3, 3))
        al = rng.normal(size=1)
        be = rng.normal(size=1)
        g = unit_gaussian(random_siegel(rng))
        pref, tg = transfer_gaussian((mu, al, be), g)
        lhs = mat @ (pref * tg.evaluate(y[:-1, None]))
        pref2, rhs_g = transfer_gaussian((mu, be, -al), fourier(g))
        rhs = pref2 * rhs_g.evaluate(eta[:, None])
        worst = max(worst, _grid_rel(lhs, rhs))
    return CriterionResult(2, "Fourier intertwining", worst < tol, {"worst_rel_l2": worst, "n_cases": n_cases},
                           {"rel_l2": tol}, runtime_limit=2)


# ---------------------------------------------------------- criteria 3 and 4

def _standard_runs():
    """(model, band, z0) triples covering every built-in model."""
    runs = [
        ("gapped_two_level_1d", 1, (-1.0, 1.0)), ("gapped_two_level_1d", 2, (-1.0, 1.0)),
        ("schrodinger_crossing_1d", 1, (-1.0, 2.0)), ("schrodinger_crossing_1d", 2, (1.0, -0.5)),
        ("schrodinger_crossing_2d", 1, (-1.0, 0.5, 1.0, 0.0)), ("bloch_crossing_1d", 1, (0.0, -1.0)),
        ("dirac_cone_2d", 1, (0.0, 0.0, 1.0, 0.5)), ("pendulum", 1, (0.5, 0.5)),
        ("harmonic", 1, (1.0, 0.0)), ("free", 1, (0.0, 1.0)),
    ]
    return [(builtin_model(n), b, np.array(z)) for n, b, z in runs]


@functools.lru_cache(maxsize=4)
def _trajectory_invariants(T: float = 5.0, n_samples: int = 51):
    rows = []
    for model, band, z0 in _standard_runs():
        b0 = initial_bundle(model, band, 0.0, z0)
        tr = integrate_to(model, band, b0, T, sample_times=np.linspace(0, T, n_samples))
        d = model.dim_d
        gam0 = 1j * np.eye(d)
        sym = 0.0
        min_im = np.inf
        nrm = 0.0
        leak = 0.0
        for b in tr.samples:
            sym = max(sym, b.symplectic_defect())
            f = b.f_blocks
            width = (f.c + f.d @ gam0) @ np.linalg.inv(f.a + f.b @ gam0)
            width = 0.5 * (width + width.T)
            min_im = min(min_im, float(np.min(np.linalg.eigvalsh(width.imag))))
            nrm = max(nrm, abs(float(np.linalg.norm(b.y_vec)) - 1))
            if model.dim_N == 2:
                other = 2 if band == 1 else 1
                leak = max(leak, float(np.linalg.norm(model.projector(other, b.t, b.z) @ b.y_vec)))
        rows.append({"model": model.name, "band": band, "symplectic_defect": sym, "min_im_gamma": min_im,
                     "norm_defect": nrm, "eigenspace_defect": leak})
    return rows


@_timed
def symplectic_siegel(T: float = 5.0, tol: float = 1e-8) -> CriterionResult:
    rows = _trajectory_invariants(T)
    sym = max(r["symplectic_defect"] for r in rows)
    im = min(r["min_im_gamma"] for r in rows)
    return CriterionResult(3, "symplecticity and Siegel cone", sym < tol and im > 0,
                           {"max_symplectic_defect": sym, "min_im_gamma": im, "n_runs": len(rows)},
                           {"symplectic_defect": tol, "min_im_gamma": 0.0}, runtime_limit=5)


@_timed
def parallel_transport(T: float = 5.0, n_points: int = 100, seed: int = 2) -> CriterionResult:
    rows = _trajectory_invariants(T)
    nrm = max(r["norm_defect"] for r in rows)
    leak = max(r["eigenspace_defect"] for r in rows)
    rng = np.random.default_rng(seed)
    herm = 0.0
    for name in ("gapped_two_level_1d", "schrodinger_crossing_1d", "schrodinger_crossing_2d",
                 "bloch_crossing_1d"):
        model = builtin_model(name)
        m = 2 * model.dim_d
        pts = rng.uniform(-2, 2, size=(n_points, m))
        for band in (1, 2):
            _, _, th = theta_matrices(model, band, 0.3, pts)
            herm = max(herm, float(np.max(np.abs(th - np.conj(np.swapaxes(th, -1, -2))))))
    ok = nrm < 1e-10 and leak < 1e-8 and herm < 1e-9
    return CriterionResult(4, "parallel transport", ok,
                           {"max_norm_defect": nrm, "max_eigenspace_defect": leak, "theta_hermiticity": herm},
                           {"norm_defect": 1e-10, "eigenspace_defect": 1e-8, "theta_hermiticity": 1e-9},
                           runtime_limit=5)


# ------------------------------------------------------------- criterion 5

def semiclassical_vs_oracle(model: ModelSpec, branch, eps: float, t_eval: float, with_b1: bool = True,
                            vector_correction: bool = True, margin: float = 14.0, dt_safety: float = 0.1,
                            grid: Optional[Grid] = None, dt: Optional[float] = None, min_points: int = 64):
    """Propagate, run the grid oracle from the same initial data and compare at t_eval."""
    sol = propagate(model, eps, branch, t_eval, with_b1=with_b1, vector_correction=vector_correction)
    zs = np.concatenate([tr.trace.z_at(np.linspace(tr.born_at, t_eval, 80)) for tr in sol.tracks])
    d = model.dim_d
    if grid is None:
        grid = auto_grid(zs[:, :d].min(axis=0), zs[:, :d].max(axis=0), np.abs(zs[:, d:]).max(axis=0), eps,
                         margin=margin, min_points=min_points)
    st = initial_state(model, branch, eps, grid)
    step = dt if dt is not None else default_dt(model, eps, zs, safety=dt_safety)
    fin = evolve(model, st, t_eval, dt=step)
    rec, parts = reconstruct(sol, t_eval, grid, per_branch=True)
    comp = l2_error(fin, rec, model)
    return sol, fin, rec, parts, comp


ADIABATIC_SETUP = dict(model="gapped_two_level_1d", params=dict(quartic=0.1), z0=(-1.0, 0.0), gamma0=1j, T=1.0,
                       eps=(2e-2, 1e-2, 5e-3, 2.5e-3))


@_timed
def adiabatic_order(eps: Sequence[float] = ADIABATIC_SETUP["eps"], T: float = 1.0, min_order: float = 0.9,
                    quartic: float = 0.1, z0=(-1.0, 0.0)) -> CriterionResult:
    model = builtin_model("gapped_two_level_1d", quartic=quartic)
    br = make_initial_branch(model, z0, [[1j]])
    errs = []
    for e in eps:
        _, _, _, _, comp = semiclassical_vs_oracle(model, br, e, T)
        errs.append(comp.total)
    orders = observed_orders(eps, errs)
    return CriterionResult(5, "adiabatic order", min(orders) >= min_order,
                           {"min_order": min(orders), "orders": orders, "errors": errs, "eps": list(eps)},
                           {"min_order": min_order}, runtime_limit=60)


# ------------------------------------------------------- criteria 6 and 7

CROSSING_SETUP = dict(model="schrodinger_crossing_1d", z0=(-1.0, 2.0), gamma0=1j, delta=0.5,
                      eps=(2e-2, 1e-2, 5e-3))


def crossing_study(eps: Sequence[float] = CROSSING_SETUP["eps"], delta: float = 0.5, z0=(-1.0, 2.0)) -> dict:
    """Shared run for the crossing criteria; returns per-eps rows and the event."""
    model = builtin_model("schrodinger_crossing_1d")
    br = make_initial_branch(model, z0, [[1j]])
    probe = propagate(model, eps[0], br, 10.0, with_b1=False, vector_correction=False)
    ev = probe.crossing
    if ev is None:
        raise RuntimeError("no crossing along the band-1 trajectory")
    t_eval = ev.t_flat + delta
    rows = []
    for e in eps:
        sol, fin, rec, parts, comp = semiclassical_vs_oracle(model, br, e, t_eval)
        spawned = sol.tracks[1]
        b2 = project_band(model, fin, 2).psi
        p2 = parts[1]
        ov = float(abs(np.vdot(b2.ravel(), p2.ravel())) / (np.linalg.norm(b2) * np.linalg.norm(p2)))
        mass = l2_norm(b2, fin.grid) / math.sqrt(e)
        # weight = sqrt(eps) * gamma * prefactor, profile0 = normalised transferred profile
        pred = abs(spawned.weight) / math.sqrt(e) * norm(spawned.profile0)
        rows.append({"eps": e, "t": t_eval, "err_total": comp.total, "err_band1": comp.per_band[0],
                     "err_band2": comp.per_band[1], "overlap_band2": ov, "mass2_over_sqrt_eps": mass,
                     "predicted_mass2": pred, "boundary_layer": sol.in_boundary_layer(t_eval)})
    return {"event": ev, "rows": rows, "t_eval": t_eval, "delta": delta}


@_timed
def crossing_order(study: Optional[dict] = None, min_order: float = 0.5) -> CriterionResult:
    study = study or crossing_study()
    rows = study["rows"]
    eps = [r["eps"] for r in rows]
    errs = [r["err_total"] for r in rows]
    orders = observed_orders(eps, errs)
    inside = any(r["boundary_layer"] for r in rows)
    return CriterionResult(6, "crossing order", min(orders) >= min_order and not inside,
                           {"min_order": min(orders), "orders": orders, "errors": errs, "eps": eps,
                            "t_flat": study["event"].t_flat, "alpha_flat": float(study["event"].alpha_flat[0])},
                           {"min_order": min_order}, runtime_limit=180)


@_timed
def transferred_branch(study: Optional[dict] = None, at_eps: float = 5e-3, min_overlap: float = 0.98,
                       mass_tol: float = 0.10) -> CriterionResult:
    study = study or crossing_study()
    row = min(study["rows"], key=lambda r: abs(r["eps"] - at_eps))
    rel = abs(row["mass2_over_sqrt_eps"] / row["predicted_mass2"] - 1)
    ok = row["overlap_band2"] > min_overlap and rel < mass_tol
    return CriterionResult(7, "transferred branch fidelity", ok,
                           {"overlap_band2": row["overlap_band2"], "mass_rel_dev": rel,
                            "mass2_over_sqrt_eps": row["mass2_over_sqrt_eps"],
                            "predicted": row["predicted_mass2"], "eps": row["eps"]},
                           {"overlap": min_overlap, "mass_rel_dev": mass_tol})


# ------------------------------------------------------------- criterion 8

@_timed
def phase_lemma(tol: float = 1e-4) -> CriterionResult:
    worst_z = 0.0
    worst_l = 0.0
    for name, z0 in (("schrodinger_crossing_1d", (-1.0, 2.0)), ("schrodinger_crossing_2d", (-1.0, 0.5, 2.0, 0.2)),
                     ("bloch_crossing_1d", (0.0, 1.0))):
        model = builtin_model(name)
        tr = integrate_to(model, 1, initial_bundle(model, 1, 0.0, np.asarray(z0)), 3.0)
        ev = detect_crossing(model, tr)
        res = phase_lemma_check(model, ev)
        worst_z = max(worst_z, res["zeta_dot_rel_err"])
        worst_l = max(worst_l, res["lambda_ddot_rel_err"])
    return CriterionResult(8, "phase lemma consistency", worst_z < tol and worst_l < tol,
                           {"zeta_dot_rel_err": worst_z, "lambda_ddot_rel_err": worst_l}, {"rel": tol},
                           runtime_limit=5)


# ------------------------------------------------------------- criterion 9

def hk_vs_oracle(model: ModelSpec, eps: float, z0, T: float, spacing: float = 0.5, margin: float = 14.0):
    phi = unit_gaussian(1j * np.eye(model.dim_d))
    z0 = np.asarray(z0, float)
    seeds = hk_decompose(phi, eps, center=z0, spacing=spacing)
    prop = hk_propagate(model, 1, seeds, 0.0, T)
    zs = np.array([s.z for s in prop.seeds.samples] + [z0])
    d = model.dim_d
    centre = np.array([s.z for s in prop.seeds.samples])
    grid = auto_grid(np.minimum(centre[:, :d].min(axis=0), z0[:d]), np.maximum(centre[:, :d].max(axis=0), z0[:d]),
                     np.abs(zs[:, d:]).max(axis=0), eps, margin=margin)
    br = make_initial_branch(model, z0, 1j * np.eye(d))
    return prop, grid, br, phi


@_timed
def herman_kluk(eps: Sequence[float] = (1e-2, 5e-3), T: float = 1.0, z0=(-0.5, 0.5), min_order: float = 0.8,
                exact_tol: float = 1e-6) -> CriterionResult:
    model = builtin_model("pendulum")
    errs = []
    for e in eps:
        prop, _, br, _ = hk_vs_oracle(model, e, z0, T)
        # compact grid around the expected support
        sol = propagate(model, e, br, T, with_b1=False)
        zt = sol.tracks[0].trace.final.z
        grid = auto_grid([min(z0[0], zt[0])], [max(z0[0], zt[0])], [max(abs(z0[1]), abs(zt[1]))], e, margin=16)
        st = initial_state(model, br, e, grid)
        fin = evolve(model, st, T, dt=default_dt(model, e, np.array([z0, zt])))
        errs.append(l2_error(fin, prop.evaluate(grid)).total)
    orders = observed_orders(eps, errs)
    # quadratic flow: compare with the exact thawed-Gaussian solution
    harm = builtin_model("harmonic")
    e = eps[0]
    prop, _, br, _ = hk_vs_oracle(harm, e, z0, T)
    sol = propagate(harm, e, br, T)
    zt = sol.tracks[0].trace.final.z
    grid = auto_grid([min(z0[0], zt[0])], [max(z0[0], zt[0])], [max(abs(z0[1]), abs(zt[1]))], e, margin=16)
    exact = reconstruct(sol, T, grid)
    st = GridState(e, grid, exact, T)
    herr = l2_error(st, prop.evaluate(grid)).total
    ok = min(orders) >= min_order and herr < exact_tol
    return CriterionResult(9, "Herman-Kluk", ok,
                           {"min_order": min(orders), "errors": errs, "eps": list(eps), "harmonic_error": herr,
                            "n_seeds": len(prop.seeds.samples)},
                           {"min_order": min_order, "harmonic_error": exact_tol}, runtime_limit=60)


# ------------------------------------------------------------ criterion 10

@_timed
def oracle_unitarity(eps: float = 0.02, n_steps: int = 1000, T: float = 0.5,
                     ratio_range=(3.5, 4.5)) -> CriterionResult:
    model = builtin_model("gapped_two_level_1d", quartic=0.1)
    br = make_initial_branch(model, (-1.0, 0.5), [[1j]])
    grid = auto_grid([-2.0], [1.0], [2.0], eps, margin=14)
    st = initial_state(model, br, eps, grid)
    n0 = st.norm()
    long = evolve(model, st, n_steps * eps * 0.05, n_steps=n_steps)
    drift = abs(long.norm() - n0)
    ref = evolve(model, st, T, n_steps=1600)
    coarse = evolve(model, st, T, n_steps=50)
    fine = evolve(model, st, T, n_steps=100)
    e1 = l2_norm(coarse.psi - ref.psi, grid)
    e2 = l2_norm(fine.psi - ref.psi, grid)
    ratio = e1 / e2
    ok = drift < 1e-10 and ratio_range[0] <= ratio <= ratio_range[1]
    return CriterionResult(10, "oracle unitarity and self-convergence", ok,
                           {"norm_drift": drift, "halving_ratio": ratio, "err_dt": e1, "err_dt_half": e2},
                           {"norm_drift": 1e-10, "ratio": list(ratio_range)}, runtime_limit=20)


CRITERIA: Dict[int, Callable[..., CriterionResult]] = {
    1: transfer_closed_form, 2: fourier_intertwining, 3: symplectic_siegel, 4: parallel_transport,
    5: adiabatic_order, 6: crossing_order, 7: transferred_branch, 8: phase_lemma, 9: herman_kluk,
    10: oracle_unitarity,
}


def run_criterion(k: int, **kw) -> CriterionResult:
    return CRITERIA[k](**kw)
