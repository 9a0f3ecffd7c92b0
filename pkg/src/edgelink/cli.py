"""Command-line driver: configuration, per-task validation, sweeps and dataset output.

A run is described by a JSON document::

    {"task": "omega-sweep",
     "system": {"lx": 21},
     "task_params": {"g2L": [0.1, 1.0], "n_eps": 8},
     "output": {"path": "fig5a.csv", "format": "csv"}}

Flags override the file.  Exit status is 0 on success, 2 on invalid input and
3 when a numerical step fails; failures print one JSON object on stderr and
never leave an output file behind.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .asym import AsymConfig, asym_metrics
from .dynamics import evolve
from .errors import (AnalysisError, CalibrationError, DegeneracyError, DomainError, EdgeLinkError,
                     GeometryError, IntegrityError, PoleError, SolverError, SpecError,
                     SymmetryUnavailableError)
from .lattice import SystemSpec, build_system, write_bond_csv
from .npsolver import (dominant_pair, eigenvalues_boundary, fidelity_closed_form, fidelity_exact,
                       fidelity_from_roots, omega_bounds, scale_coupling, scaled_pair)
from .perturb import CouplingFunctions
from .spectral import Spectrum, classify_states, diagonalize, edge_dispersion, edge_window
from .symmetry import classify_parity

__all__ = ["RunConfig", "Table", "run", "sweep", "main", "TASKS"]

EXIT_OK, EXIT_INVALID, EXIT_SOLVER = 0, 2, 3
_INVALID = (SpecError, GeometryError, DomainError, SymmetryUnavailableError, ValueError, KeyError,
            TypeError, json.JSONDecodeError)
_SOLVER = (SolverError, PoleError, CalibrationError, DegeneracyError, AnalysisError,
           IntegrityError, EdgeLinkError, ArithmeticError, np.linalg.LinAlgError)

_REQUIRED = object()


@dataclass
class Table:
    columns: list[str]
    rows: list[dict]


@dataclass
class RunConfig:
    task: str
    system: SystemSpec | None = None
    task_params: dict = field(default_factory=dict)
    out: str | None = None
    fmt: str = "csv"
    workers: int = 1
    tolerance: float = 1e-12


# shared numerics -----------------------------------------------------------

@lru_cache(maxsize=8)
def _isolated(lx: int, ly: int, j: float, blue_rows: str) -> Spectrum:
    """Classified isolated-lattice spectrum, parity-labelled when the symmetry exists."""
    spec = SystemSpec(lx, ly, j=j, blue_rows=blue_rows)
    s = classify_states(diagonalize(build_system(spec)))
    if lx == ly and lx % 2:
        s = classify_parity(s)
    return s


def _isolated_for(system: SystemSpec) -> Spectrum:
    return _isolated(system.lx, system.ly, system.j, system.blue_rows)


def _symmetric_corner(system: SystemSpec, task: str) -> None:
    if not (system.is_square and system.lx % 2 and system.d is None):
        raise SymmetryUnavailableError(f"{task} needs an odd square lattice with corner qubits")


def _require_system(cfg: RunConfig) -> SystemSpec:
    if cfg.system is None:
        raise SpecError(f"task {cfg.task!r} needs a system (config 'system' or --L)")
    return cfg.system


def _eps_grid(p: dict) -> list[float]:
    if p.get("eps_tilde_frac") is not None:
        fr = [float(x) for x in p["eps_tilde_frac"]]
        if any(not 0 <= x <= 1 for x in fr):
            raise SpecError("eps_tilde_frac values must lie in [0, 1]")
        return fr
    n = int(p["n_eps"])
    if n < 1:
        raise SpecError("n_eps must be positive")
    return [0.5] if n == 1 else list(np.linspace(0.0, 1.0, n))


# point functions (top level so worker processes can pickle them) ---------------

_WINDOW_COLUMNS = ["L", "g2L", "g", "eps", "eps_tilde_frac", "E_l", "delta_E", "omega_over_dE",
                   "omega_window_over_dE", "omega_closed_over_dE", "omega_lo", "omega_hi",
                   "F_numeric", "F_closed"]


def window_point(point: dict) -> dict:
    """One (L, g2L, eps_tilde_frac) point of the symmetric corner-coupled system."""
    L, G0, frac = int(point["L"]), float(point["g2L"]), float(point["eps_tilde_frac"])
    j = float(point["j"])
    iso = _isolated(L, L, j, point["blue_rows"])
    cal = edge_window(iso, float(point["eps_center"]))
    g = math.sqrt(G0 / L) * j
    eps = cal.E_l + frac * cal.delta_E - cal.B_f * g * g / j
    cf = CouplingFunctions(iso)
    row = {"L": L, "g2L": G0, "g": g, "eps": eps, "eps_tilde_frac": frac, "E_l": cal.E_l,
           "delta_E": cal.delta_E}
    if G0 == 0:
        raise DomainError("g2L must be positive")
    roots = eigenvalues_boundary(cf, eps, g, xtol=float(point["xtol"]))
    lo, hi = dominant_pair(roots)
    sc = scale_coupling(cal, eps, g)
    two = scaled_pair(sc, cal)
    blo, bhi = omega_bounds(cal, G0)
    row.update(omega_over_dE=(hi.lam - lo.lam) / cal.delta_E,
               omega_window_over_dE=two.omega_eff / cal.delta_E,
               omega_closed_over_dE=two.omega_closed, omega_lo=blo, omega_hi=bhi,
               F_numeric=fidelity_from_roots(roots).fidelity, F_closed=fidelity_closed_form(sc))
    return row


_DISTANCE_COLUMNS = ["d", "g2L", "g", "eps", "eps_tilde_frac", "omega_eff", "omega_over_dE",
                     "fidelity"]


@lru_cache(maxsize=4)
def _rect_calibration(lx, ly, j, blue_rows, d_ref, eps_center):
    iso = _isolated(lx, ly, j, blue_rows)
    sites = SystemSpec.rect(lx, ly, d=d_ref, j=j, blue_rows=blue_rows).connection_sites()
    return edge_window(iso, eps_center, sites=sites)


def distance_point(point: dict) -> dict:
    """Dense-diagonalization Omega_eff and fidelity for qubits ``d`` apart on the long edge."""
    lx, ly, j, br = int(point["lx"]), int(point["ly"]), float(point["j"]), point["blue_rows"]
    cal = _rect_calibration(lx, ly, j, br, int(point["d_ref"]), float(point["eps_center"]))
    G0, frac, d = float(point["g2L"]), float(point["eps_tilde_frac"]), int(point["d"])
    g = math.sqrt(G0 / ly) * j
    eps = cal.E_l + frac * cal.delta_E - cal.B_f * g * g / j
    spec = SystemSpec.rect(lx, ly, d=d, eps=eps, g=g, j=j, blue_rows=br)
    full = diagonalize(build_system(spec))
    w1, w2 = full.qubit_weights()
    top = np.sort(np.argsort(w1 + w2)[-2:])
    om = float(full.eigenvalues[top[1]] - full.eigenvalues[top[0]])
    return {"d": d, "g2L": G0, "g": g, "eps": eps, "eps_tilde_frac": frac, "omega_eff": om,
            "omega_over_dE": om / cal.delta_E, "fidelity": fidelity_exact(full).fidelity}


def sweep(fn, grid: dict, base: dict | None = None, workers: int = 1, columns=None) -> Table:
    """Evaluate ``fn`` on the cartesian product of ``grid`` in grid order.

    Each point is ``base`` updated with one combination.  Solver failures
    become rows with an ``error`` entry; the merge order never depends on
    ``workers``.
    """
    base = dict(base or {})
    keys = list(grid)
    points = [dict(base, **dict(zip(keys, combo))) for combo in itertools.product(*grid.values())]
    if workers > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_guarded, [fn] * len(points), points))
    else:
        rows = [_guarded(fn, p) for p in points]
    if columns is None:
        columns = list(dict.fromkeys(k for r in rows for k in r if k != "error"))
    for r, p in zip(rows, points):
        for k in keys:
            r.setdefault(k, p[k])
    return Table(list(columns) + ["error"], rows)


def _guarded(fn, point):
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            row = fn(point)
        row["error"] = ""
    except _SOLVER + (DomainError,) as exc:
        row = {"error": f"{type(exc).__name__}: {exc}"}
    return row


# tasks ---------------------------------------------------------------------------

def _task_spectrum(cfg, p):
    system = _require_system(cfg)
    s = classify_states(diagonalize(build_system(system)))
    try:
        s = classify_parity(s)
    except SymmetryUnavailableError:
        pass
    par = s.parity if s.parity is not None else np.zeros(len(s), dtype=int)
    rows = [{"index": n, "eigenvalue": float(e), "band": b, "parity": int(q)}
            for n, (e, b, q) in enumerate(zip(s.eigenvalues, s.bands, par))]
    return Table(["index", "eigenvalue", "band", "parity"], rows)


def _task_bands(cfg, p):
    n = int(p["kx_points"])
    if n < 2:
        raise SpecError("kx_points must be at least 2")
    variants = ["black-edge", "blue-edge"] if p["variant"] == "both" else [p["variant"]]
    j = cfg.system.j if cfg.system is not None else 1.0
    rows = []
    for v in variants:
        for kx in np.linspace(-np.pi, np.pi, n):
            for pt in edge_dispersion(float(kx), v, j):
                rows.append({"variant": v, "kx": pt.kx, "branch": pt.branch, "lambda": pt.lam,
                             "abs_dr": abs(pt.decay_factor), "localized": int(pt.localized)})
    return Table(["variant", "kx", "branch", "lambda", "abs_dr", "localized"], rows)


def _task_calibrate(cfg, p):
    system = _require_system(cfg)
    sites = None
    if system.has_qubits:
        sites = system.connection_sites()
    elif system.d is not None:
        sites = system.connection_sites()
    cal = edge_window(_isolated_for(system), float(p["eps_tilde"]), sites=sites)
    return cal.as_dict()


def _task_dynamics(cfg, p):
    system = _require_system(cfg)
    if p["eps"] is not None or p["g"] is not None:
        q = system.qubit1
        eps = p["eps"] if p["eps"] is not None else (q.epsilon if q else 0.0)
        g = p["g"] if p["g"] is not None else (q.g if q else 0.0)
        system = system.with_qubits(float(eps), float(g))
    if not system.has_qubits:
        raise SpecError("dynamics needs qubit parameters (eps, g)")
    tmax, n = float(p["tmax"]), int(p["samples"])
    if tmax <= 0 or n < 2:
        raise SpecError("need tmax > 0 and samples >= 2")
    times = np.linspace(0.0, tmax, n)
    eps_list = p["eps_list"] or [None]
    rows = []
    for e in eps_list:
        sys_e = system if e is None else system.with_qubits(float(e), system.qubit1.g)
        tr = evolve(diagonalize(build_system(sys_e)), 0, times)
        for k in range(n):
            row = {"t": tr.times[k], "p_q1": tr.p_q1[k], "p_q2": tr.p_q2[k], "p_lat": tr.p_lat[k]}
            if e is not None:
                row = {"eps": float(e), **row}
            rows.append(row)
    cols = ["t", "p_q1", "p_q2", "p_lat"]
    return Table((["eps"] if p["eps_list"] else []) + cols, rows)


def _task_boundary_roots(cfg, p):
    system = _require_system(cfg)
    _symmetric_corner(system, "boundary-roots")
    q = system.qubit1
    eps = p["eps"] if p["eps"] is not None else (q.epsilon if q else None)
    g = p["g"] if p["g"] is not None else (q.g if q else None)
    if eps is None or g is None:
        raise SpecError("boundary-roots needs eps and g")
    if g <= 0:
        raise DomainError("g must be positive")
    cf = CouplingFunctions(_isolated_for(system))
    roots = eigenvalues_boundary(cf, float(eps), float(g), xtol=cfg.tolerance)
    return Table(["parity", "lambda", "qubit_weight"],
                 [{"parity": r.parity, "lambda": r.lam, "qubit_weight": r.weight} for r in roots])


def _window_sweep(cfg, p):
    system = _require_system(cfg)
    _symmetric_corner(system, cfg.task)
    sizes = [int(x) for x in (p["L"] or [system.lx])]
    if any(x < 3 or x % 2 == 0 for x in sizes):
        raise GeometryError("sweep sizes must be odd and at least 3")
    g2l = [float(x) for x in p["g2L"]]
    if any(x <= 0 for x in g2l):
        raise DomainError("g2L values must be positive")
    grid = {"L": sizes, "g2L": g2l, "eps_tilde_frac": _eps_grid(p)}
    base = {"eps_center": float(p["eps_center"]), "j": system.j, "blue_rows": system.blue_rows,
            "xtol": cfg.tolerance}
    return sweep(window_point, grid, base, cfg.workers, _WINDOW_COLUMNS)


def _task_distance_scan(cfg, p):
    system = _require_system(cfg)
    if system.lx < system.ly:
        raise GeometryError("distance-scan needs lx >= ly")
    ds = [int(x) for x in (p["d"] or range(4, system.lx - 12, 4))]
    if not ds or min(ds) < 0 or max(ds) > system.lx - 1:
        raise SpecError(f"d values must lie in [0, {system.lx - 1}]")
    g2l = [float(x) for x in p["g2L"]]
    if any(x <= 0 for x in g2l):
        raise DomainError("g2L values must be positive")
    d_ref = int(p["d_ref"]) if p["d_ref"] is not None else ds[0]
    grid = {"d": ds, "g2L": g2l, "eps_tilde_frac": _eps_grid(p)}
    base = {"lx": system.lx, "ly": system.ly, "j": system.j, "blue_rows": system.blue_rows,
            "d_ref": d_ref, "eps_center": float(p["eps_center"])}
    return sweep(distance_point, grid, base, cfg.workers, _DISTANCE_COLUMNS)


def _task_asym(cfg, p):
    system = _require_system(cfg)
    if not system.is_square or system.lx % 2 == 0:
        raise SymmetryUnavailableError("asym needs an odd square lattice with corner qubits")
    q1, q2 = system.qubit1, system.qubit2
    vals = {}
    for key, q, attr in (("eps1", q1, "epsilon"), ("eps2", q2, "epsilon"), ("g1", q1, "g"),
                         ("g2", q2, "g")):
        v = p[key] if p[key] is not None else (getattr(q, attr) if q is not None else None)
        if v is None:
            raise SpecError(f"asym needs {key}")
        vals[key] = float(v)
    center = p["eps_center"] if p["eps_center"] is not None else 0.5 * (vals["eps1"] + vals["eps2"])
    iso = _isolated_for(system)
    cal = edge_window(iso, float(center))
    fp, fm = CouplingFunctions(iso).pair(cal.lambda_mid)
    res = asym_metrics(AsymConfig(f_plus=fp, f_minus=fm, j=system.j, delta_E=cal.delta_E, **vals))
    return {"chi": list(res.chi), "lambda": list(res.lam), "omega_eff": res.omega_eff,
            "k_pr": res.k_pr, "f_plus": fp, "f_minus": fm, "limits": res.limits}


def _task_bonds(cfg, p):
    system = _require_system(cfg)
    return write_bond_csv(build_system(system.isolated()))


_WINDOW_PARAMS = {"g2L": [0.1], "n_eps": 6, "eps_tilde_frac": None, "L": None,
                  "eps_center": -1.76}

TASKS = {
    "spectrum": (_task_spectrum, {}),
    "bands": (_task_bands, {"kx_points": 201, "variant": "black-edge"}),
    "calibrate": (_task_calibrate, {"eps_tilde": -1.75}),
    "dynamics": (_task_dynamics, {"tmax": 2000.0, "samples": 4096, "eps": None, "g": None,
                                  "eps_list": None}),
    "boundary-roots": (_task_boundary_roots, {"eps": None, "g": None}),
    "omega-sweep": (_window_sweep, dict(_WINDOW_PARAMS, g2L=[0.01, 0.1, 0.3, 1.0, 3.0], n_eps=8)),
    "fidelity-sweep": (_window_sweep, dict(_WINDOW_PARAMS)),
    "distance-scan": (_task_distance_scan, {"d": None, "g2L": [0.1, 3.0], "n_eps": 6,
                                            "eps_tilde_frac": None, "eps_center": -1.765,
                                            "d_ref": None}),
    "asym": (_task_asym, {"eps1": None, "eps2": None, "g1": None, "g2": None,
                          "eps_center": None}),
    "bonds": (_task_bonds, {}),
}


def _validated_params(task: str, given: dict) -> dict:
    if task not in TASKS:
        raise SpecError(f"unknown task {task!r}; choose from {sorted(TASKS)}")
    defaults = TASKS[task][1]
    unknown = set(given) - set(defaults)
    if unknown:
        raise SpecError(f"unknown task_params for {task}: {sorted(unknown)}")
    out = dict(defaults)
    out.update(given)
    if task == "bands" and out["variant"] not in ("black-edge", "blue-edge", "both"):
        raise SpecError("variant must be black-edge, blue-edge or both")
    return out


# output --------------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.12g" % v
    return str(v)


def _flatten(doc: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in doc.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        elif isinstance(v, (list, tuple)):
            for i, x in enumerate(v, 1):
                out[f"{key}{i}"] = x
        else:
            out[key] = v
    return out


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    return v


def render(result, fmt: str) -> str:
    """Serialize a task result to text in ``fmt``."""
    if isinstance(result, str):
        if fmt != "csv":
            raise SpecError("this task only writes csv")
        return result
    if isinstance(result, dict):
        if fmt == "json":
            return json.dumps(_jsonable(result), indent=2) + "\n"
        flat = _flatten(result)
        result = Table(list(flat), [flat])
    if fmt == "json":
        return json.dumps([_jsonable({c: r.get(c) for c in result.columns}) for r in result.rows],
                          indent=1) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(result.columns)
    for r in result.rows:
        w.writerow(["" if r.get(c) is None else _fmt(r.get(c)) for c in result.columns])
    return buf.getvalue()


def run(cfg: RunConfig) -> str:
    """Execute one configured task and return the serialized output."""
    if cfg.fmt not in ("csv", "json"):
        raise SpecError(f"format must be csv or json, got {cfg.fmt!r}")
    if cfg.workers < 1:
        raise SpecError("workers must be at least 1")
    if not cfg.tolerance > 0:
        raise SpecError("tolerance must be positive")
    params = _validated_params(cfg.task, cfg.task_params)
    fn = TASKS[cfg.task][0]
    return render(fn(cfg, params), cfg.fmt)


# argument handling ----------------------------------------------------------------

_FLAG_PARAMS = ("eps", "g", "eps1", "eps2", "g1", "g2", "tmax", "samples")
_SYSTEM_ALIAS = {"eps": "eps1", "g": "g1"}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="edgelink",
                                 description="Qubits coupled through Hofstadter edge states")
    ap.add_argument("task", nargs="?", choices=sorted(TASKS), help="task (or set in --config)")
    ap.add_argument("--config", help="JSON run configuration")
    ap.add_argument("--out", help="output file (default stdout)")
    ap.add_argument("--format", dest="fmt", choices=("csv", "json"))
    ap.add_argument("--workers", type=int, help="worker processes (env EDGELINK_WORKERS)")
    ap.add_argument("--tolerance", type=float, help="root tolerance in units of J")
    ap.add_argument("--L", type=int, help="square lattice size")
    ap.add_argument("--lx", type=int)
    ap.add_argument("--ly", type=int)
    ap.add_argument("--d", type=int, help="edge distance between connection sites")
    for name in ("eps", "g", "eps1", "eps2", "g1", "g2", "tmax"):
        ap.add_argument(f"--{name}", type=float)
    ap.add_argument("--samples", type=int)
    return ap


def config_from_args(args) -> RunConfig:
    doc = {}
    if args.config:
        doc = json.loads(Path(args.config).read_text())
        if not isinstance(doc, dict):
            raise SpecError("config must be a JSON object")
        unknown = set(doc) - {"task", "system", "task_params", "output", "workers", "tolerance"}
        if unknown:
            raise SpecError(f"unknown config keys: {sorted(unknown)}")
    task = args.task or doc.get("task")
    if task is None:
        raise SpecError("no task given")
    sysdoc = dict(doc.get("system") or {})
    if args.L is not None:
        sysdoc["lx"] = sysdoc["ly"] = args.L
    if args.lx is not None:
        sysdoc["lx"] = args.lx
    if args.ly is not None:
        sysdoc["ly"] = args.ly
    if args.d is not None:
        sysdoc["d"] = args.d
    params = dict(doc.get("task_params") or {})
    accepted = TASKS[task][1] if task in TASKS else {}
    for name in _FLAG_PARAMS:
        v = getattr(args, name)
        if v is None:
            continue
        if name in accepted or name in ("tmax", "samples"):
            params[name] = v
        else:
            # qubit flags for tasks that read them from the system
            sysdoc[_SYSTEM_ALIAS.get(name, name)] = v
    system = SystemSpec.from_dict(sysdoc) if sysdoc else None
    output = doc.get("output") or {}
    env = os.environ.get("EDGELINK_WORKERS")
    workers = args.workers or doc.get("workers") or (int(env) if env else 1)
    tol = args.tolerance if args.tolerance is not None else doc.get("tolerance", 1e-12)
    return RunConfig(task=task, system=system, task_params=params,
                     out=args.out or output.get("path"),
                     fmt=args.fmt or output.get("format", "csv"), workers=int(workers),
                     tolerance=float(tol))


def _fail(exc: Exception, code: int) -> int:
    msg = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    print(json.dumps(msg), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        text = run(cfg)
    except _INVALID as exc:
        return _fail(exc, EXIT_INVALID)
    except _SOLVER as exc:
        return _fail(exc, EXIT_SOLVER)
    if cfg.out:
        Path(cfg.out).write_text(text, newline="")
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
