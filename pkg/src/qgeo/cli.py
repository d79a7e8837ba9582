"""Command line: ``qgeo run``, ``qgeo list-models`` and ``qgeo selftest``.

Exit codes: 0 success, 1 a scenario or self-check failed, 2 bad configuration.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from .entanglement import block_purity, purity
from .errors import ConfigError, QGeoError
from .geometry import palumbo_residual, scalar_curvature
from .models import MODEL_KINDS, ChainModel, HOModel, HOTDFModel, IHOModel, fock_coefficients, overlap_distance
from .qgt import gauge_check, tqgt
from .scenarios import bundled_config, bundled_configs, parse_config, run_all


# ---------------------------------------------------------------- self checks


def _check_ground_metric():
    g = tqgt(HOModel(), HOModel().point(0.3, X=1, W=1, B=1), ("X", "W")).g
    err = float(np.max(np.abs(g - np.array([[1, -1], [-1, 1]]) / 32)))
    return err < 1e-12, f"max error {err:.1e}"


def _check_hyperbolic():
    errs = []
    for model, p, coords in [
        (HOModel(), HOModel().point(1.0, X=1, W=1, B=2), ("t", "B")),
        (IHOModel(), IHOModel().point(0.4, X=-1.2, W=0.8, B=1.3), ("X", "W")),
        (HOTDFModel(), HOTDFModel().point(0.5, A=0.7, omega0=1.1), ("t", "A")),
    ]:
        errs.append(abs(scalar_curvature(model, p, coords).R + 16))
    return max(errs) < 5e-3, f"max |R + 16| {max(errs):.1e}"


def _check_chain_curvature():
    ch = ChainModel([[2, -1], [-1, 2]])
    r = scalar_curvature(ch, ch.point(0.8, X=1, Y=0.5, Z=1, B1=1.2, B2=0.9), ("X", "Y", "Z", "B1")).R
    return abs(r + 32) < 5e-2, f"R = {r:.4f}"


def _check_palumbo():
    res = [abs(palumbo_residual(HOModel(), HOModel().point(0.7, X=1.3, W=0.6, B=1.7), a, b))
           for a, b in [("t", "X"), ("X", "B"), ("W", "B")]]
    return max(res) < 1e-12, f"max residual {max(res):.1e}"


def _check_purity():
    ch = ChainModel([[2, -1], [-1, 2]])
    p = ch.point(0.7, X=1, Y=1, Z=1, B1=1.1, B2=0.8)
    a = purity(ch, p, [0]).mu
    b = block_purity(ch, p, [0])
    whole = purity(ch, p, [0, 1]).mu
    ok = abs(a - b) < 1e-10 and abs(whole - 1) < 1e-10
    return ok, f"mu {a:.6f}, block {b:.6f}, whole {whole:.12f}"


def _check_gauge():
    model = IHOModel()
    p = model.point(0.5, X=-0.8, W=1.2, B=0.9)
    rep = gauge_check(model, p, lambda q: math.sin(q["X"] * q.t) + q["B"] ** 2)
    return rep.max_dQ < 1e-7 and rep.max_dA_error < 1e-6, f"dQ {rep.max_dQ:.1e}, dA {rep.max_dA_error:.1e}"


def _check_dispersion():
    model = HOModel()
    p = model.point(0.4, X=1, W=1, B=2)
    q00 = tqgt(model, p, ("t",)).g[0, 0]
    var = fock_coefficients(p, 60).energy_variance()
    return abs(q00 - var) < 1e-6, f"Q00 {q00:.10f}, variance {var:.10f}"


def _check_fidelity():
    model = HOModel()
    p = model.point(0.9, X=1.1, W=0.9, B=1.4)
    d = np.array([0.3, -0.5, 0.2, 0.7]) * 1e-3
    g = tqgt(model, p).g
    dl2 = float(d @ g @ d)
    dist = overlap_distance(model, p, p.moved(d))
    return abs(dist / dl2 - 1) < 1e-2, f"ratio {dist / dl2:.6f}"


SELF_CHECKS: dict[str, Callable[[], tuple[bool, str]]] = {
    "ground-metric": _check_ground_metric,
    "hyperbolic-curvature": _check_hyperbolic,
    "chain-curvature": _check_chain_curvature,
    "palumbo": _check_palumbo,
    "purity": _check_purity,
    "gauge": _check_gauge,
    "energy-dispersion": _check_dispersion,
    "fidelity": _check_fidelity,
}


def selftest(pattern: str | None = None, out=print) -> bool:
    ok_all = True
    names = [n for n in SELF_CHECKS if pattern is None or pattern in n]
    if not names:
        out(f"no self-check matches {pattern!r}")
        return False
    for name in names:
        try:
            ok, detail = SELF_CHECKS[name]()
        except QGeoError as exc:
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        ok_all &= ok
        out(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return ok_all


# ---------------------------------------------------------------- entry point


def _read_config(arg: str) -> str:
    path = Path(arg)
    if path.is_file():
        return path.read_text(encoding="utf-8")
    if os.sep not in arg:
        text = bundled_config(arg)
        if text is not None:
            return text
    raise ConfigError(f"config file not found: {arg}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qgeo", description="time-dependent quantum geometry")
    parser.add_argument("--version", action="version", version=f"qgeo {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="evaluate the scenarios of a JSON config")
    run.add_argument("config", help="path to a config, or the name of a bundled one")
    run.add_argument("--out-dir", default=None,
                     help="output directory (default: $QGEO_OUT_DIR or the current directory)")
    run.add_argument("--threads", type=int, default=1)
    sub.add_parser("list-models", help="model kinds and bundled configs")
    st = sub.add_parser("selftest", help="run quick invariant checks")
    st.add_argument("--filter", default=None, help="only checks whose name contains this text")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list-models":
        for kind, desc in MODEL_KINDS.items():
            print(f"{kind:12s} {desc}")
        print("bundled configs: " + ", ".join(bundled_configs()))
        return 0
    if args.command == "selftest":
        return 0 if selftest(args.filter) else 1

    try:
        scenarios = parse_config(_read_config(args.config))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.threads < 1:
        print("config error: --threads must be at least 1", file=sys.stderr)
        return 2
    out_dir = args.out_dir or os.environ.get("QGEO_OUT_DIR") or "."
    try:
        run_all(scenarios, out_dir, args.threads, report=print)
    except (QGeoError, OSError) as exc:
        print(f"scenario failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
