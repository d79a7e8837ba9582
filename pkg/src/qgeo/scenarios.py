"""Declarative scenarios: parse a JSON document, evaluate an operation over a
parameter grid and write a CSV table.

Document layout::

    {"scenarios": [{"name": "...", "model": {"kind": "ho", ...},
                    "operation": "tqgt", "sweep": {"ranges": {...}, "fixed": {...}},
                    "coords": ["X", "W"], "output": "file.csv",
                    "options": {...}, "tolerances": {...}}]}

``ranges`` map a coordinate to ``[lo, hi, count]``.  Each row of the output
holds the swept coordinates, the operation's outputs, a ``flag`` column and a
``status`` column; cells that are not finite are left empty and flagged.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .analysis import fit_damped_trajectory, track_extrema
from .entanglement import bifurcation_scan, purity
from .errors import ConfigError, QGeoError
from .geometry import palumbo_factor, scalar_curvature
from .models import (
    ChainModel,
    OscillatorModel,
    StateFamily,
    build_model,
    density_analysis,
    fock_coefficients,
)
from .params import DiffConfig, ParameterPoint, make_grid
from .qgt import berry_connection, tqgt

OPERATIONS = (
    "tqgt", "connection", "curvature", "palumbo", "purity",
    "bifurcation-scan", "density", "fock", "track-fit",
)
SCENARIO_KEYS = {"name", "model", "operation", "sweep", "coords", "output", "options", "tolerances"}
MODEL_KEYS = {
    "ho": set(), "iho": set(), "oscillator": set(), "hotdf": {"n"}, "chain": {"A", "basis"},
}
OPTION_KEYS = {
    "tqgt": {"mode"},
    "connection": set(),
    "curvature": set(),
    "palumbo": set(),
    "purity": {"subset", "chirp"},
    "bifurcation-scan": {"subset", "chirp"},
    "density": {"q"},
    "fock": {"n_max"},
    "track-fit": {"coord", "bracket", "follow", "family", "frequencies", "samples"},
}
TOLERANCE_KEYS = {"scheme", "step", "relative"}


@dataclass(frozen=True)
class Scenario:
    name: str
    model: dict
    operation: str
    ranges: dict
    fixed: dict
    coords: tuple[str, ...] = ()
    output: str = ""
    options: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)

    def build(self) -> StateFamily:
        spec = dict(self.model)
        return build_model(spec.pop("kind"), **spec)

    def diff_config(self) -> DiffConfig:
        return DiffConfig(**self.tolerances)

    def canonical(self) -> str:
        body = {
            "name": self.name, "model": self.model, "operation": self.operation,
            "sweep": {"ranges": self.ranges, "fixed": self.fixed},
            "coords": list(self.coords), "output": self.output,
            "options": self.options, "tolerances": self.tolerances,
        }
        return json.dumps(body, sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]


# ---------------------------------------------------------------- parsing


def _expect(cond: bool, message: str, path: str):
    if not cond:
        raise ConfigError(message, path)


def _number(v, path) -> float:
    _expect(isinstance(v, (int, float)) and not isinstance(v, bool), "expected a number", path)
    _expect(math.isfinite(v), "expected a finite number", path)
    return float(v)


def _unknown(obj: dict, allowed: set, path: str):
    extra = sorted(set(obj) - allowed)
    if extra:
        raise ConfigError(f"unknown key(s) {extra}; allowed {sorted(allowed)}", path)


def _parse_model(obj, path) -> dict:
    _expect(isinstance(obj, dict), "expected an object", path)
    _expect("kind" in obj, "missing 'kind'", path)
    kind = obj["kind"]
    _expect(isinstance(kind, str) and kind in MODEL_KEYS,
            f"unknown model kind {kind!r}; choose from {sorted(MODEL_KEYS)}", path + ".kind")
    _unknown(obj, MODEL_KEYS[kind] | {"kind"}, path)
    out = {"kind": kind}
    if "n" in obj:
        n = obj["n"]
        _expect(isinstance(n, int) and not isinstance(n, bool) and n >= 0,
                "expected a non-negative integer", path + ".n")
        out["n"] = n
    for key in ("A", "basis"):
        if key in obj:
            m = obj[key]
            _expect(isinstance(m, list) and m and all(isinstance(r, list) and len(r) == len(m) for r in m),
                    "expected a square matrix (list of rows)", f"{path}.{key}")
            out[key] = [[_number(v, f"{path}.{key}[{i}][{j}]") for j, v in enumerate(r)]
                        for i, r in enumerate(m)]
    if kind == "chain":
        _expect("A" in out, "chain model needs a coupling matrix 'A'", path)
    return out


def _parse_sweep(obj, path):
    _expect(isinstance(obj, dict), "expected an object", path)
    _unknown(obj, {"ranges", "fixed"}, path)
    ranges, fixed = {}, {}
    for name, spec in obj.get("ranges", {}).items():
        p = f"{path}.ranges.{name}"
        _expect(isinstance(spec, list) and len(spec) in (3, 4),
                "expected [lo, hi, count] or [start, stop, count, \"geometric\"]", p)
        lo, hi = _number(spec[0], p + "[0]"), _number(spec[1], p + "[1]")
        count = spec[2]
        _expect(isinstance(count, int) and not isinstance(count, bool) and count >= 1,
                "count must be a positive integer", p + "[2]")
        if len(spec) == 4:
            _expect(spec[3] in ("linear", "geometric"), "spacing must be linear or geometric", p + "[3]")
            if spec[3] == "geometric":
                _expect(lo * hi > 0, "geometric ends must be nonzero with the same sign", p)
        if len(spec) == 3 or spec[3] == "linear":
            _expect(lo <= hi, "lo must not exceed hi", p)
        ranges[name] = [lo, hi, count] + list(spec[3:])
    for name, v in obj.get("fixed", {}).items():
        fixed[name] = _number(v, f"{path}.fixed.{name}")
    overlap = set(ranges) & set(fixed)
    _expect(not overlap, f"{sorted(overlap)} both swept and fixed", path)
    return ranges, fixed


def _parse_options(op, obj, path) -> dict:
    _expect(isinstance(obj, dict), "expected an object", path)
    _unknown(obj, OPTION_KEYS[op], path)
    return dict(obj)


def _parse_scenario(obj, path) -> Scenario:
    _expect(isinstance(obj, dict), "expected an object", path)
    _unknown(obj, SCENARIO_KEYS, path)
    for key in ("name", "model", "operation", "sweep"):
        _expect(key in obj, f"missing required key {key!r}", path)
    name = obj["name"]
    _expect(isinstance(name, str) and name != "", "expected a non-empty string", path + ".name")
    op = obj["operation"]
    _expect(op in OPERATIONS, f"unknown operation {op!r}; choose from {list(OPERATIONS)}",
            path + ".operation")
    model = _parse_model(obj["model"], path + ".model")
    ranges, fixed = _parse_sweep(obj["sweep"], path + ".sweep")
    coords = obj.get("coords", [])
    _expect(isinstance(coords, list) and all(isinstance(c, str) for c in coords),
            "expected a list of coordinate names", path + ".coords")
    output = obj.get("output", f"{name}.csv")
    _expect(isinstance(output, str) and output != "", "expected a file name", path + ".output")
    options = _parse_options(op, obj.get("options", {}), path + ".options")
    tol = obj.get("tolerances", {})
    _expect(isinstance(tol, dict), "expected an object", path + ".tolerances")
    _unknown(tol, TOLERANCE_KEYS, path + ".tolerances")
    sc = Scenario(name, model, op, ranges, fixed, tuple(coords), output, options, dict(tol))

    # semantic checks that need the model
    try:
        handle = sc.build()
    except QGeoError as exc:
        raise ConfigError(str(exc), path + ".model") from exc
    try:
        sc.diff_config()
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), path + ".tolerances") from exc
    known = set(handle.names)
    for name_ in list(ranges) + list(fixed):
        _expect(name_ in known, f"unknown parameter {name_!r} for model {model['kind']}",
                f"{path}.sweep")
    for c in coords:
        _expect(c in known, f"unknown coordinate {c!r}", path + ".coords")
    if op in ("curvature",):
        _expect(len(coords) >= 2, "curvature needs at least two coordinates", path + ".coords")
    if op == "palumbo":
        _expect(len(coords) == 2, "palumbo needs exactly two coordinates", path + ".coords")
    if op in ("purity", "bifurcation-scan"):
        _expect(isinstance(handle, ChainModel), "operation needs a chain model", path + ".model")
    if op in ("density", "fock"):
        _expect(isinstance(handle, OscillatorModel), "operation needs an oscillator model",
                path + ".model")
    if op == "density":
        q = options.get("q")
        _expect(isinstance(q, list) and len(q) == 3, "expected q = [lo, hi, count]",
                path + ".options.q")
    if op == "bifurcation-scan":
        _expect(len(ranges) == 1, "a scan sweeps exactly one coordinate", path + ".sweep.ranges")
    if op == "track-fit":
        _expect(set(ranges) == {"t"}, "track-fit sweeps t only", path + ".sweep.ranges")
        for key in ("coord", "bracket"):
            _expect(key in options, f"missing option {key!r}", path + ".options")
        _expect(options["coord"] in known, "unknown search coordinate", path + ".options.coord")
        _expect(len(coords) >= 2, "curvature coordinates needed", path + ".coords")
    return sc


def parse_config(text: str) -> list[Scenario]:
    """Validate a JSON document; scenarios come back in declaration order."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}", "") from exc
    _expect(isinstance(doc, dict), "expected an object", "$")
    _unknown(doc, {"scenarios"}, "$")
    items = doc.get("scenarios")
    _expect(isinstance(items, list) and items, "expected a non-empty list", "$.scenarios")
    scenarios = [_parse_scenario(s, f"$.scenarios[{i}]") for i, s in enumerate(items)]
    names = [s.name for s in scenarios]
    _expect(len(set(names)) == len(names), "scenario names must be unique", "$.scenarios")
    outputs = [s.output for s in scenarios]
    _expect(len(set(outputs)) == len(outputs), "output files must be distinct", "$.scenarios")
    return scenarios


def bundled_config(name: str) -> str | None:
    """Text of a config shipped with the package (``demo`` or ``demo.json``)."""
    base = resources.files("qgeo") / "configs"
    for candidate in (name, name + ".json"):
        path = base / candidate
        if path.is_file():
            return path.read_text()
    return None


def bundled_configs() -> list[str]:
    base = resources.files("qgeo") / "configs"
    return sorted(p.name for p in base.iterdir() if p.name.endswith(".json"))


# ---------------------------------------------------------------- evaluation


@dataclass
class CsvTable:
    header: list[str]
    rows: list[list[str]]
    footer: list[str]
    path: Path | None = None

    def body(self) -> str:
        lines = [",".join(self.header)] + [",".join(r) for r in self.rows]
        return "\n".join(lines) + "\n"

    def text(self) -> str:
        return self.body() + "".join(f"# {line}\n" for line in self.footer)


def fmt(v) -> str:
    """17 significant digits: parses back to the same double."""
    return format(float(v), ".17g")


class _Row:
    def __init__(self):
        self.values: dict[str, float] = {}
        self.flags: list[str] = []
        self.status = "ok"


def _pairs(labels, upper=True):
    n = len(labels)
    return [(i, j) for i in range(n) for j in range(i if upper else i + 1, n)]


def _point_op(sc: Scenario, model: StateFamily, cfg: DiffConfig):
    """Column names and a per-point evaluator for the grid operations."""
    op = sc.operation
    coords = list(sc.coords) or list(model.names)
    if op == "tqgt":
        mode = sc.options.get("mode", "analytic")
        cols = [f"g_{coords[i]}_{coords[j]}" for i, j in _pairs(coords)]
        cols += [f"F_{coords[i]}_{coords[j]}" for i, j in _pairs(coords, False)]

        def run(p, row):
            res = tqgt(model, p, coords, mode=mode, cfg=cfg)
            row.flags += list(res.flags)
            for i, j in _pairs(coords):
                row.values[f"g_{coords[i]}_{coords[j]}"] = res.g[i, j]
            for i, j in _pairs(coords, False):
                row.values[f"F_{coords[i]}_{coords[j]}"] = res.F[i, j]
        return cols, run
    if op == "connection":
        cols = [f"A_{n}" for n in model.names]

        def run(p, row):
            for n, v in zip(model.names, berry_connection(model, p).values):
                row.values[f"A_{n}"] = v
        return cols, run
    if op == "curvature":
        def run(p, row):
            rep = scalar_curvature(model, p, coords, cfg)
            row.values["R"] = rep.R
            if rep.degraded:
                row.flags.append("degraded-stencil")
        return ["R"], run
    if op == "palumbo":
        k = palumbo_factor(model)

        def run(p, row):
            res = tqgt(model, p, coords)
            det = float(np.linalg.det(res.g))
            row.values.update(det_g=det, kF2=k * res.F[0, 1] ** 2,
                              residual=det - k * res.F[0, 1] ** 2)
        return ["det_g", "kF2", "residual"], run
    if op == "purity":
        subset = sc.options.get("subset", [0])
        chirp = bool(sc.options.get("chirp", False))

        def run(p, row):
            res = purity(model, p, subset, chirp)
            row.values.update(mu=res.mu, region=res.region)
        return ["mu", "region"], run
    if op == "fock":
        n_max = int(sc.options.get("n_max", 40))
        cols = ["Q00", "variance", "norm"]

        def run(p, row):
            fe = fock_coefficients(p, n_max, model)
            row.values.update(Q00=tqgt(model, p, ("t",)).g[0, 0],
                              variance=fe.energy_variance(), norm=fe.norm)
            if fe.truncated:
                row.flags.append("truncated")
        return cols, run
    if op == "density":
        lo, hi, count = sc.options["q"]
        qs = np.linspace(lo, hi, int(count))
        cols = [f"rho_q{k}" for k in range(len(qs))]

        def run(p, row):
            rep = density_analysis(p["X"], p["W"], p["B"], qs, [p.t])
            for k, v in enumerate(rep.density[0]):
                row.values[f"rho_q{k}"] = v
        return cols, run
    raise ConfigError(f"no grid evaluator for {op}", "operation")


def _rows_to_table(names, cols, rows: list[_Row]) -> tuple[list[str], list[list[str]]]:
    header = list(names) + cols + ["flag", "status"]
    out = []
    for point, row in rows:
        cells = [fmt(point[n]) for n in names]
        flags = list(row.flags)
        for c in cols:
            v = row.values.get(c)
            if v is None or not math.isfinite(v):
                cells.append("")
                if v is not None:
                    flags.append(f"non-finite:{c}")
            else:
                cells.append(fmt(v))
        cells.append(";".join(dict.fromkeys(flags)))
        cells.append(row.status)
        out.append(cells)
    return header, out


def _evaluate_grid(sc, model, threads):
    cfg = sc.diff_config()
    points = make_grid(sc.ranges, sc.fixed, model.names)
    cols, run = _point_op(sc, model, cfg)

    def one(p):
        row = _Row()
        try:
            run(p, row)
        except QGeoError as exc:
            row.status = type(exc).__name__
            row.values.clear()
        return p, row

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            rows = list(pool.map(one, points))
    else:
        rows = [one(p) for p in points]
    return _rows_to_table(list(sc.ranges), cols, rows), []


def _evaluate_scan(sc, model, threads):
    subset = sc.options.get("subset", [0])
    chirp = bool(sc.options.get("chirp", False))
    points = make_grid(sc.ranges, sc.fixed, model.names)
    scan = bifurcation_scan(model, points, subset, chirp)
    rows = []
    for p, a, b in zip(points, scan.results, scan.mirror_results):
        row = _Row()
        row.values.update(mu=a.mu, mirror_mu=b.mu, region=a.region, mirror_region=b.region)
        rows.append((p, row))
    table = _rows_to_table(list(sc.ranges), ["mu", "mirror_mu", "region", "mirror_region"], rows)
    summary = [
        f"mode: {scan.mode}",
        f"limit: {fmt(scan.limit)}",
        f"mirror_limit: {fmt(scan.mirror_limit)}",
        f"continuous: {str(scan.continuous).lower()}",
        f"zero_limit: {str(scan.zero_limit).lower()}",
    ]
    return table, summary


def _evaluate_track(sc, model, threads):
    o = sc.options
    cfg = sc.diff_config()
    coords = list(sc.coords)
    lo, hi, count = sc.ranges["t"][:3]
    times = np.round(np.linspace(lo, hi, count), 12)
    base = model.coerce({"t": lo, **sc.fixed, o["coord"]: sum(o["bracket"]) / 2})

    def quantity(p):
        return scalar_curvature(model, p, coords, cfg).R

    traj = track_extrema(quantity, base, times, o["coord"], tuple(o["bracket"]),
                         samples=int(o.get("samples", 46)), follow=o.get("follow"))
    rows = []
    for e in traj.samples:
        row = _Row()
        row.values.update(location=e.location, value=e.value)
        row.flags.append(e.kind)
        rows.append((ParameterPoint.make(e.t), row))
    table = _rows_to_table(["t"], ["location", "value"], rows)
    ts, xs = traj.track("min")
    summary = [f"missing: {len(traj.missing)}"]
    if len(ts) >= 8:
        fit = fit_damped_trajectory(ts, xs, o.get("family", "sin-damped"),
                                    tuple(o.get("frequencies", (1.0,))))
        summary += [f"fit_family: {fit.family}"] + [
            f"fit_{k}: {fmt(getattr(fit, k))}" for k in ("c0", "c1", "c2", "c3", "r2")
        ] + [f"fit_converged: {str(fit.converged).lower()}"]
    return table, summary


def run_scenario(sc: Scenario, out_dir: str | os.PathLike | None = None,
                 threads: int = 1) -> CsvTable:
    """Evaluate ``sc`` and write its CSV under ``out_dir``."""
    model = sc.build()
    if sc.operation == "bifurcation-scan":
        (header, rows), summary = _evaluate_scan(sc, model, threads)
    elif sc.operation == "track-fit":
        (header, rows), summary = _evaluate_track(sc, model, threads)
    else:
        (header, rows), summary = _evaluate_grid(sc, model, threads)
    footer = [
        f"model: {json.dumps(sc.model, sort_keys=True)}",
        f"operation: {sc.operation}",
        *summary,
        f"config-hash: {sc.digest()}",
        f"version: qgeo {__version__}",
    ]
    table = CsvTable(header, rows, footer)
    if out_dir is not None:
        path = Path(out_dir) / sc.output
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(table.text(), encoding="utf-8")
        table.path = path
    return table


def run_all(scenarios: list[Scenario], out_dir, threads: int = 1,
            report: Callable[[str], Any] | None = None) -> list[CsvTable]:
    tables = []
    for sc in scenarios:
        table = run_scenario(sc, out_dir, threads)
        if report:
            report(f"{sc.name}: {len(table.rows)} rows -> {table.path}")
        tables.append(table)
    return tables
