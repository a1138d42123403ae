"""Experiment configs, the epsilon-sweep pipeline and summary merging."""
from __future__ import annotations

import copy
import csv
import inspect
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from . import acceptance
from .acceptance import observed_orders, semiclassical_vs_oracle
from .gaussian import norm, unit_gaussian
from .grid import auto_grid
from .hk import hk_decompose, hk_propagate
from .models import BUILTIN_MODELS, builtin_model
from .propagator import make_initial_branch, propagate, reconstruct
from .reference import default_dt, evolve, initial_state, l2_error, project_band

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
CSV_COLUMNS = ["eps", "t", "err_total", "err_band1", "err_band2", "overlap_band2", "order_est"]


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key
        self.message = message


# ------------------------------------------------------------------ schema

_PIPELINE_DEFAULTS = {
    "schema_version": SCHEMA_VERSION,
    "study_id": None,
    "kind": "pipeline",
    "description": "",
    "model": {"name": None, "params": {}},
    "initial": {"z0": None, "gamma0": None, "poly": None, "band": 1},
    "eps": None,
    "time": {"t0": 0.0, "t_end": None, "after_crossing": None, "search_horizon": 10.0},
    "method": {"approximation": "semiclassical", "with_b1": True, "vector_correction": True,
               "hk_spacing": 0.5},
    "oracle": {"enabled": True, "dt": None, "dt_safety": 0.1, "margin": 14.0, "min_points": 64},
    "outputs": {"solutions": True, "crossing": True, "grids": False, "convergence_csv": "convergence.csv",
                "summary": "summary.json"},
    "tolerances": {"min_order": None, "max_error": None, "min_overlap_band2": None, "mass_rel_tol": None,
                   "alpha_flat_zero": None},
}

_CRITERION_DEFAULTS = {
    "schema_version": SCHEMA_VERSION,
    "study_id": None,
    "kind": "criterion",
    "description": "",
    "criterion": None,
    "params": {},
    "outputs": {"summary": "summary.json"},
}

_FREE_DICTS = {"model.params", "params"}


def _merge(defaults: dict, given: Any, prefix: str = "") -> dict:
    if not isinstance(given, dict):
        raise ConfigError(prefix or "<root>", "expected an object")
    out = copy.deepcopy(defaults)
    for key, val in given.items():
        path = f"{prefix}.{key}" if prefix else key
        if key not in defaults:
            raise ConfigError(path, "unknown key")
        if isinstance(defaults[key], dict) and path not in _FREE_DICTS:
            out[key] = _merge(defaults[key], val, path)
        else:
            out[key] = val
    return out


def _complex(v, key):
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(x, (int, float)) for x in v):
        return complex(v[0], v[1])
    raise ConfigError(key, "complex numbers are written as [re, im]")


def parse_gamma(raw, d: int, key: str = "initial.gamma0") -> np.ndarray:
    """Width as nested rows of [re, im] pairs; None means i * identity."""
    if raw is None:
        return 1j * np.eye(d)
    if not isinstance(raw, list) or len(raw) != d:
        raise ConfigError(key, f"expected {d} rows")
    rows = []
    for r in raw:
        if not isinstance(r, list) or len(r) != d:
            raise ConfigError(key, f"expected {d} entries per row")
        rows.append([_complex(v, key) for v in r])
    return np.array(rows)


def parse_poly(raw, d: int, key: str = "initial.poly"):
    """List of [[exponents], re, im] terms."""
    if raw is None:
        return None
    out = {}
    try:
        for exps, re, im in raw:
            if len(exps) != d:
                raise ConfigError(key, "exponent length must equal the dimension")
            out[tuple(int(e) for e in exps)] = complex(re, im)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(key, "terms are [[exponents...], re, im]") from None
    return out


def validate(raw: dict) -> dict:
    """Fill defaults and check a config; raises ConfigError naming the key."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    kind = raw.get("kind", "pipeline")
    if kind not in ("pipeline", "criterion"):
        raise ConfigError("kind", "must be 'pipeline' or 'criterion'")
    cfg = _merge(_PIPELINE_DEFAULTS if kind == "pipeline" else _CRITERION_DEFAULTS, raw)
    if cfg["schema_version"] != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"unsupported version {cfg['schema_version']!r}")
    if not isinstance(cfg["study_id"], str) or not cfg["study_id"]:
        raise ConfigError("study_id", "a non-empty string is required")
    if kind == "criterion":
        if cfg["criterion"] not in acceptance.CRITERIA:
            raise ConfigError("criterion", "must be an integer between 1 and 10")
        if not isinstance(cfg["params"], dict):
            raise ConfigError("params", "expected an object")
        fn = acceptance.CRITERIA[cfg["criterion"]]
        allowed = set(inspect.signature(fn).parameters) - {"study"}
        for k in cfg["params"]:
            if k not in allowed:
                raise ConfigError(f"params.{k}", "unknown key")
        return cfg
    m = cfg["model"]
    if m["name"] not in BUILTIN_MODELS:
        raise ConfigError("model.name", f"unknown model {m['name']!r}")
    if not isinstance(m["params"], dict):
        raise ConfigError("model.params", "expected an object")
    try:
        model = builtin_model(m["name"], **m["params"])
    except TypeError as exc:
        raise ConfigError("model.params", str(exc)) from None
    d = model.dim_d
    ini = cfg["initial"]
    z0 = ini["z0"]
    if not isinstance(z0, list) or len(z0) != 2 * d or not all(isinstance(v, (int, float)) for v in z0):
        raise ConfigError("initial.z0", f"expected {2 * d} numbers")
    parse_gamma(ini["gamma0"], d)
    parse_poly(ini["poly"], d)
    if ini["band"] not in (1, 2) or ini["band"] > model.dim_N:
        raise ConfigError("initial.band", "invalid band index")
    eps = cfg["eps"]
    if not isinstance(eps, list) or not eps or not all(isinstance(e, (int, float)) and e > 0 for e in eps):
        raise ConfigError("eps", "expected a non-empty list of positive numbers")
    if any(eps[k + 1] >= eps[k] for k in range(len(eps) - 1)):
        raise ConfigError("eps", "values must be strictly decreasing")
    tm = cfg["time"]
    if (tm["t_end"] is None) == (tm["after_crossing"] is None):
        raise ConfigError("time", "give exactly one of t_end and after_crossing")
    if tm["t_end"] is not None and tm["t_end"] < tm["t0"]:
        raise ConfigError("time.t_end", "must not precede t0")
    meth = cfg["method"]
    if meth["approximation"] not in ("semiclassical", "hk"):
        raise ConfigError("method.approximation", "must be 'semiclassical' or 'hk'")
    return cfg


def load_config(path_or_name: str) -> dict:
    """Read a config file, or a bundled config by name."""
    p = Path(path_or_name)
    if p.exists():
        text = p.read_text()
    else:
        name = path_or_name if path_or_name.endswith(".json") else path_or_name + ".json"
        res = resources.files("wavecross").joinpath("configs").joinpath(name)
        if not res.is_file():
            raise ConfigError("<path>", f"no config file or bundled config named {path_or_name!r}")
        text = res.read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<syntax>", f"invalid JSON: {exc}") from None
    return validate(raw)


def bundled_configs() -> List[str]:
    root = resources.files("wavecross").joinpath("configs")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


# ---------------------------------------------------------------- pipeline

def _grid_csv(path: Path, grid, psi: np.ndarray) -> None:
    xs = [x.ravel() for x in grid.mesh()]
    flat = psi.reshape(psi.shape[0], -1)
    head = [f"x{j + 1}" for j in range(grid.d)]
    for k in range(psi.shape[0]):
        head += [f"re{k + 1}", f"im{k + 1}"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(head)
        for i in range(flat.shape[1]):
            row = [x[i] for x in xs]
            for k in range(flat.shape[0]):
                row += [flat[k, i].real, flat[k, i].imag]
            w.writerow([f"{v:.17g}" for v in row])


def _eps_dir(out: Path, eps: float) -> Path:
    p = out / f"eps_{eps:.6g}"
    p.mkdir(parents=True, exist_ok=True)
    return p


def _run_eps(cfg: dict, eps: float, t_eval: float, out: Path) -> dict:
    m = cfg["model"]
    model = builtin_model(m["name"], **m["params"])
    d = model.dim_d
    ini = cfg["initial"]
    gam = parse_gamma(ini["gamma0"], d)
    poly = parse_poly(ini["poly"], d)
    br = make_initial_branch(model, ini["z0"], gam, cfg["time"]["t0"], poly, ini["band"])
    meth, orc, outs = cfg["method"], cfg["oracle"], cfg["outputs"]
    row: Dict[str, Any] = {"eps": eps, "t": t_eval, "err_total": math.nan, "err_band1": math.nan,
                           "err_band2": math.nan, "overlap_band2": math.nan}
    edir = _eps_dir(out, eps)
    if meth["approximation"] == "semiclassical":
        if orc["enabled"]:
            sol, fin, rec, parts, comp = semiclassical_vs_oracle(
                model, br, eps, t_eval, meth["with_b1"], meth["vector_correction"], orc["margin"],
                orc["dt_safety"], dt=orc["dt"], min_points=orc["min_points"])
            row["err_total"] = comp.total
            if comp.per_band:
                row["err_band1"], row["err_band2"] = comp.per_band
            if len(parts) > 1:
                b2 = project_band(model, fin, 2).psi
                p2 = parts[1]
                row["overlap_band2"] = float(abs(np.vdot(b2.ravel(), p2.ravel()))
                                             / (np.linalg.norm(b2) * np.linalg.norm(p2)))
                row["mass2_over_sqrt_eps"] = comp.band_masses[1] / math.sqrt(eps)
                tr = sol.tracks[1]
                row["predicted_mass2"] = abs(tr.weight) / math.sqrt(eps) * norm(tr.profile0)
            if outs["grids"]:
                _grid_csv(edir / "grid_semiclassical.csv", fin.grid, rec)
                _grid_csv(edir / "grid_oracle.csv", fin.grid, fin.psi)
        else:
            sol = propagate(model, eps, br, t_eval, with_b1=meth["with_b1"],
                            vector_correction=meth["vector_correction"])
        row["boundary_layer"] = sol.in_boundary_layer(t_eval)
        if outs["solutions"]:
            (edir / "solution.json").write_text(sol.dumps(t_eval))
        if outs["crossing"] and sol.crossing is not None:
            (edir / "crossing.json").write_text(sol.crossing.dumps())
            row["alpha_flat_norm"] = float(np.linalg.norm(sol.crossing.alpha_flat))
    else:
        phi = unit_gaussian(gam, poly)
        seeds = hk_decompose(phi, eps, center=np.asarray(ini["z0"], float), spacing=meth["hk_spacing"])
        prop = hk_propagate(model, ini["band"], seeds, cfg["time"]["t0"], t_eval)
        row["n_seeds"] = len(seeds.samples)
        prop.write_csv(edir / "hk_seeds.csv")
        if orc["enabled"]:
            sol = propagate(model, eps, br, t_eval, with_b1=False)
            zs = np.concatenate([sol.tracks[0].trace.z_at(np.linspace(br.time, t_eval, 40))])
            grid = auto_grid(zs[:, :d].min(axis=0), zs[:, :d].max(axis=0), np.abs(zs[:, d:]).max(axis=0), eps,
                             margin=orc["margin"] + 2, min_points=orc["min_points"])
            st = initial_state(model, br, eps, grid)
            dt = orc["dt"] or default_dt(model, eps, zs, safety=orc["dt_safety"])
            fin = evolve(model, st, t_eval, dt=dt)
            approx = prop.evaluate(grid)
            comp = l2_error(fin, approx, model)
            row["err_total"] = comp.total
            if comp.per_band:
                row["err_band1"], row["err_band2"] = comp.per_band
            if outs["grids"]:
                _grid_csv(edir / "grid_hk.csv", grid, approx)
                _grid_csv(edir / "grid_oracle.csv", grid, fin.psi)
    return row


def _fmt_csv(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "nan"
    return f"{v:.10g}"


def _criteria(cfg: dict, rows: List[dict], orders: List[float]) -> List[dict]:
    tol = cfg["tolerances"]
    out = []
    if tol["min_order"] is not None and orders:
        val = min(orders)
        out.append({"name": "observed_order", "value": val, "threshold": tol["min_order"],
                    "passed": bool(val >= tol["min_order"])})
    if tol["max_error"] is not None:
        val = max(r["err_total"] for r in rows)
        out.append({"name": "max_error", "value": val, "threshold": tol["max_error"],
                    "passed": bool(val <= tol["max_error"])})
    last = rows[-1]
    if tol["min_overlap_band2"] is not None:
        val = last.get("overlap_band2", math.nan)
        out.append({"name": "overlap_band2", "value": val, "threshold": tol["min_overlap_band2"],
                    "passed": bool(val > tol["min_overlap_band2"])})
    if tol["mass_rel_tol"] is not None:
        val = abs(last.get("mass2_over_sqrt_eps", math.nan) / last.get("predicted_mass2", math.nan) - 1)
        out.append({"name": "band2_mass_law", "value": val, "threshold": tol["mass_rel_tol"],
                    "passed": bool(val < tol["mass_rel_tol"])})
    if tol["alpha_flat_zero"] is not None:
        val = max(r.get("alpha_flat_norm", math.inf) for r in rows)
        out.append({"name": "alpha_flat_zero", "value": val, "threshold": tol["alpha_flat_zero"],
                    "passed": bool(val <= tol["alpha_flat_zero"])})
    return out


def _eval_time(cfg: dict) -> float:
    tm = cfg["time"]
    if tm["t_end"] is not None:
        return float(tm["t_end"])
    m = cfg["model"]
    model = builtin_model(m["name"], **m["params"])
    ini = cfg["initial"]
    d = model.dim_d
    br = make_initial_branch(model, ini["z0"], parse_gamma(ini["gamma0"], d), tm["t0"], None, ini["band"])
    probe = propagate(model, cfg["eps"][0], br, tm["t0"] + tm["search_horizon"], with_b1=False,
                      vector_correction=False)
    if probe.crossing is None:
        raise RuntimeError("time.after_crossing given but the trajectory never reaches the crossing set")
    return probe.crossing.t_flat + float(tm["after_crossing"])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and math.isnan(obj):
        return None
    return obj


@dataclass
class RunResult:
    summary: dict
    out_dir: Path

    @property
    def passed(self) -> bool:
        return bool(self.summary["passed"])


def run_config(cfg: dict, out_dir, threads: int = 1, seed: Optional[int] = None) -> RunResult:
    """Execute a validated config and write its artifacts under out_dir/study_id."""
    out = Path(out_dir) / cfg["study_id"]
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise ConfigError("outputs", f"directory {out} is not writable")
    if cfg["kind"] == "criterion":
        params = dict(cfg["params"])
        fn = acceptance.CRITERIA[cfg["criterion"]]
        if seed is not None and "seed" in inspect.signature(fn).parameters:
            params["seed"] = seed
        res = fn(**params)
        log.info(res.line())
        summary = {"schema_version": SCHEMA_VERSION, "study_id": cfg["study_id"], "kind": "criterion",
                   "criteria": [res.to_json()], "passed": bool(res.passed)}
        _write_summary(out / cfg["outputs"]["summary"], summary)
        return RunResult(summary, out)
    t_eval = _eval_time(cfg)
    eps = cfg["eps"]
    log.info("study %s: t_eval=%.6g, eps=%s", cfg["study_id"], t_eval, eps)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda e: _run_eps(cfg, e, t_eval, out), eps))
    else:
        rows = [_run_eps(cfg, e, t_eval, out) for e in eps]
    errs = [r["err_total"] for r in rows]
    orders = observed_orders(eps, errs) if cfg["oracle"]["enabled"] and len(eps) > 1 else []
    for k, r in enumerate(rows):
        r["order_est"] = orders[k - 1] if k > 0 and orders else math.nan
    with open(out / cfg["outputs"]["convergence_csv"], "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow([_fmt_csv(r.get(c)) for c in CSV_COLUMNS])
    crit = _criteria(cfg, rows, orders)
    summary = {"schema_version": SCHEMA_VERSION, "study_id": cfg["study_id"], "kind": "pipeline",
               "model": cfg["model"], "t_eval": t_eval, "rows": rows, "orders": orders, "criteria": crit,
               "passed": all(c["passed"] for c in crit)}
    _write_summary(out / cfg["outputs"]["summary"], summary)
    return RunResult(_jsonable(summary), out)


def _write_summary(path: Path, summary: dict) -> None:
    path.write_text(json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n")


# ----------------------------------------------------------------- report

class ReportError(ValueError):
    pass


def merge_summaries(paths: Sequence) -> List[dict]:
    """Load summaries, reject version mismatches and conflicting duplicate ids."""
    seen: Dict[str, dict] = {}
    for p in paths:
        data = json.loads(Path(p).read_text())
        ver = data.get("schema_version")
        if ver != SCHEMA_VERSION:
            raise ReportError(f"{p}: schema_version {ver!r} does not match {SCHEMA_VERSION}")
        sid = data.get("study_id")
        if sid in seen:
            if seen[sid] != data:
                raise ReportError(f"conflicting summaries for study id {sid!r}")
            continue
        seen[sid] = data
    return [seen[k] for k in sorted(seen)]


def format_report(studies: List[dict]) -> str:
    lines = []
    for s in studies:
        status = "PASS" if s.get("passed") else "FAIL"
        lines.append(f"== {s['study_id']} ({s.get('kind', 'pipeline')}): {status}")
        if s.get("rows"):
            lines.append(f"   {'eps':>10} {'t':>8} {'err_total':>11} {'err_band2':>11} {'order':>7}")
            for r in s["rows"]:
                def f(v, w=11):
                    return f"{v:{w}.3e}" if isinstance(v, (int, float)) else f"{'-':>{w}}"
                order = r.get("order_est")
                o = f"{order:7.3f}" if isinstance(order, (int, float)) else f"{'-':>7}"
                lines.append(f"   {r['eps']:10.3e} {r['t']:8.4f} {f(r.get('err_total'))} {f(r.get('err_band2'))} {o}")
        for c in s.get("criteria", []):
            mark = "pass" if c.get("passed") else "FAIL"
            if "value" in c:
                lines.append(f"   [{mark}] {c['name']}: value={c['value']} threshold={c['threshold']}")
            else:
                lines.append(f"   [{mark}] criterion {c['id']} {c['name']}")
        lines.append("")
    return "\n".join(lines)


def report_rows(studies: List[dict]) -> List[List[str]]:
    rows = [["study_id", "criterion", "passed", "value", "threshold"]]
    for s in studies:
        for c in s.get("criteria", []):
            name = c["name"] if "value" in c else f"{c['id']}:{c['name']}"
            value = c.get("value", c.get("metrics"))
            thr = c.get("threshold", c.get("thresholds"))
            rows.append([s["study_id"], name, str(bool(c["passed"])), json.dumps(value, sort_keys=True),
                         json.dumps(thr, sort_keys=True)])
    return rows
