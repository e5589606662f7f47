"""Command-line front end: ``sphlab {area,bubbles,bounds,liouville,covering}``."""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import os
import sys
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from . import bounds as bnd
from . import concentration as conc
from . import covering as cov
from . import liouville as lv
from .errors import (
    BudgetExceededError,
    NotQuasiNormalError,
    ScheduleTooShortError,
    SphlabError,
)
from .funcmodel import (
    FormulaFunc,
    RationalFunc,
    builtin_family,
    parse_schedule,
    random_rational,
)
from .quadrature import ls_integral, parse_domain

logger = logging.getLogger("sphlab")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BUDGET = 3
EXIT_NOT_QUASI_NORMAL = 4
EXIT_SCHEDULE = 5

EPILOG = """exit codes:
  0  success
  2  configuration or parse error
  3  quadrature cell budget exceeded
  4  family is not quasi-normal (flagged set is not a finite point set)
  5  index schedule too short
"""

DEFAULT_DOMAINS = {
    "area": "disk:0,0,1",
    "bubbles": "disk:0,0,1",
    "bounds": "disk:0,0,1",
    "liouville": "rect:-0.5,0.5,-0.5,0.5",
    "covering": "disk:0,0,1",
}


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    """Fully resolved run description; serialises with a fixed field order."""

    command: str
    family: Optional[str] = None
    n: Optional[int] = None
    m: int = 1
    value: float = 0.0
    indices: str = "1:128:geom"
    rational: Optional[str] = None
    domain: Optional[str] = None
    tol: float = 1e-8
    max_cells: int = 2**22
    s: float = 2.0
    resolution: Optional[int] = None
    check: Optional[str] = None
    c: Optional[float] = None
    C: Optional[float] = None
    solve: bool = False
    blowup: bool = False
    V: float = 4.0
    oracle: Optional[str] = None
    h: float = 2.0**-6
    oracle_area: bool = False
    eps: Optional[str] = None
    out: Optional[str] = None
    marty_csv: Optional[str] = None
    seed: int = 0
    threads: int = 1

    def to_json(self) -> dict:
        return dataclasses.asdict(self)


# --------------------------------------------------------------------------- output


def _plain(obj):
    """Normalise to JSON-ready builtins (complex -> [re, im], numpy scalars -> python)."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    return obj


def _emit(obj) -> str:
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return "%.17g" % obj if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, list):
        return "[" + ",".join(_emit(v) for v in obj) + "]"
    if isinstance(obj, dict):
        return "{" + ",".join(json.dumps(k) + ":" + _emit(v) for k, v in obj.items()) + "}"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj) -> str:
    """Deterministic JSON: insertion-ordered keys, floats with 17 significant digits."""
    return _emit(_plain(obj))


def _write(cfg: RunConfig, payload) -> None:
    text = dumps(payload) + "\n"
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def grid_csv(values: np.ndarray, bbox) -> str:
    ny, nx = values.shape
    lines = ["x0,x1,y0,y1,nx,ny", ",".join("%.17g" % float(v) for v in bbox) + f",{nx},{ny}"]
    for row in values:
        lines.append(",".join("%.17g" % v for v in row))
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------- config resolution


def _function(cfg: RunConfig):
    if cfg.rational:
        if cfg.rational.startswith("random:"):
            deg = int(cfg.rational.split(":", 1)[1])
            return random_rational(np.random.default_rng(cfg.seed), max_degree=deg)
        try:
            return RationalFunc.from_json(cfg.rational)
        except (ValueError, TypeError, KeyError) as exc:
            raise ConfigError(f"bad --rational: {exc}") from exc
    if cfg.family:
        if cfg.n is None:
            raise ConfigError("--family needs --n to select a member")
        return _family(cfg)[cfg.n]
    raise ConfigError("give --rational or --family with --n")


def _family(cfg: RunConfig):
    if not cfg.family:
        raise ConfigError("--family is required")
    try:
        idx = parse_schedule(cfg.indices)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    params = {}
    if cfg.family == "nP":
        params["m"] = cfg.m
    if cfg.family == "constant":
        params["value"] = cfg.value
    return builtin_family(cfg.family, idx, **params)


def _domain(cfg: RunConfig):
    return parse_domain(cfg.domain or DEFAULT_DOMAINS[cfg.command])


# --------------------------------------------------------------------------- commands


def cmd_area(cfg: RunConfig) -> int:
    f = _function(cfg)
    D = _domain(cfg)
    try:
        res = ls_integral(f, D, cfg.s, cfg.tol, max_cells=cfg.max_cells, workers=cfg.threads)
    except BudgetExceededError as exc:
        _write(cfg, {"error": str(exc), **(exc.partial.to_json() if exc.partial else {})})
        return EXIT_BUDGET
    _write(cfg, res.to_json())
    return EXIT_OK if res.converged else EXIT_BUDGET


def cmd_bubbles(cfg: RunConfig) -> int:
    F = _family(cfg)
    D = _domain(cfg)
    res = cfg.resolution or 128
    if cfg.marty_csv:
        mf = conc.family_marty_field(F, D, res)
        with open(cfg.marty_csv, "w") as fh:
            fh.write(grid_csv(mf.values, mf.bbox))
    eps = tuple(float(t) for t in cfg.eps.split(",")) if cfg.eps else conc.DEFAULT_EPS
    try:
        prof = conc.mass_profile(F, D, res, eps)
    except NotQuasiNormalError as exc:
        flagged = exc.flagged
        _write(
            cfg,
            {
                "error": "NotQuasiNormal",
                "message": str(exc),
                "flagged_cells": int(flagged.sum()) if flagged is not None else None,
                "clusters": len(exc.clusters),
            },
        )
        return EXIT_NOT_QUASI_NORMAL
    _write(cfg, prof.to_json())
    return EXIT_OK


def cmd_bounds(cfg: RunConfig) -> int:
    f = _function(cfg)
    kind = cfg.check or "fkr"
    param = cfg.C if kind == "dufresnoy" else cfg.c
    if param is None:
        raise ConfigError(f"--check {kind} needs {'--C' if kind == 'dufresnoy' else '--c'}")
    rep = bnd.verify_bound(f, kind, param, cfg.resolution or bnd.N_ANGLES)
    _write(cfg, rep.to_json())
    return EXIT_OK


def _oracle(name: str):
    if name == "z":
        return RationalFunc([0.0, 1.0])
    if name == "exp":
        return FormulaFunc(np.exp, np.exp, recip=lambda z: (np.exp(-z), -np.exp(-z)), label="exp")
    raise ConfigError(f"unknown --oracle {name!r}; expected z or exp")


def _rect_grid(cfg: RunConfig) -> lv.Grid2D:
    D = _domain(cfg)
    x0, x1, y0, y1 = D.bbox
    nx = int(round((x1 - x0) / cfg.h)) + 1
    ny = int(round((y1 - y0) / cfg.h)) + 1
    try:
        return lv.Grid2D(x0, x1, y0, y1, nx, ny)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_liouville(cfg: RunConfig) -> int:
    G = _rect_grid(cfg)
    if cfg.blowup:
        rows = lv.blowup_demo(_family(cfg), G, [0j] if cfg.family == "nz" else [])
        _write(cfg, {"h": G.h, "rows": [r.to_json() for r in rows]})
        return EXIT_OK
    f = _oracle(cfg.oracle or "z")
    exact = lv.log_sharp(f, G)
    out = {"h": G.h, "nx": G.nx, "ny": G.ny, "residual_max": float(np.abs(lv.liouville_residual(f, G)).max())}
    if cfg.solve:
        sol = lv.solve_liouville(cfg.V, exact, G)
        err = float(np.abs(sol.u - exact).max())
        out.update(sol.metadata())
        out["oracle_error"] = err
        out["oracle_error_over_h2"] = err / G.h**2
        if cfg.out:
            with open(cfg.out + ".csv" if not cfg.out.endswith(".csv") else cfg.out, "w") as fh:
                fh.write(lv.grid_to_csv(sol.u, G))
    sys.stdout.write(dumps(out) + "\n")
    return EXIT_OK


def cmd_covering(cfg: RunConfig) -> int:
    f = _function(cfg)
    if not isinstance(f, RationalFunc):
        raise ConfigError("covering needs a rational function")
    D = _domain(cfg)
    res = cfg.resolution or 64
    if cfg.C is not None:
        rep = cov.low_multiplicity_report(f, D, cfg.C, res)
        _write(cfg, rep.to_json())
        return EXIT_OK
    grid = cov.covering_area_oracle(f, D, res)
    quad = ls_integral(f, D, 2.0, cfg.tol, max_cells=cfg.max_cells, workers=cfg.threads)
    _write(
        cfg,
        {
            "oracle_area": grid,
            "quadrature_area": quad.value,
            "relative_difference": abs(grid - quad.value) / max(abs(quad.value), 1e-300),
            "resolution": res,
        },
    )
    return EXIT_OK


COMMANDS = {
    "area": cmd_area,
    "bubbles": cmd_bubbles,
    "bounds": cmd_bounds,
    "liouville": cmd_liouville,
    "covering": cmd_covering,
}


# --------------------------------------------------------------------------- parser


def _read_config_file(path: str) -> dict:
    out = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"config line without '=': {raw.rstrip()}")
            k, v = line.split("=", 1)
            out[k.strip().replace("-", "_")] = v.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file; command-line flags override it")
    common.add_argument("--family", choices=["nz", "exp_inz", "nP", "constant"])
    common.add_argument("--n", type=int, help="family member index for single-function commands")
    common.add_argument("--m", type=int, default=1, help="degree parameter of the nP family")
    common.add_argument("--value", type=float, default=0.0, help="value of the constant family")
    common.add_argument("--indices", default="1:128:geom", help="schedule: a:b:geom, a:b or a comma list")
    common.add_argument("--rational", help='JSON {"num": [[re,im],...], "den": [...]} or random:DEG')
    common.add_argument("--domain", help="disk:cx,cy,r | rect:x0,x1,y0,y1 | annulus:cx,cy,rin,rout | diskminus:...")
    common.add_argument("--tol", type=float, default=1e-8)
    common.add_argument("--max-cells", type=int, default=2**22, help="quadrature cell budget")
    common.add_argument("--resolution", type=int)
    common.add_argument("--out", help="write the JSON report here instead of stdout")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=None, help="worker threads (env SPHLAB_THREADS)")
    common.add_argument("--emit-config", action="store_true", help="print the resolved config and exit")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(
        prog="sphlab",
        description="Spherical-derivative experiments: areas, bubbles, bounds, Liouville, covering.",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = p.add_subparsers(dest="command", required=True)
    kw = dict(parents=[common], epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)

    a = sub.add_parser("area", help="(1/pi) int_D (f^#)^s", **kw)
    a.add_argument("--s", type=float, default=2.0)

    b = sub.add_parser("bubbles", help="irregular points and their masses", **kw)
    b.add_argument("--marty-csv", help="write the family Marty field as a CSV grid")
    b.add_argument("--eps", help="comma-separated radius schedule for mass estimation")

    c = sub.add_parser("bounds", help="check a Schwarz-type bound on the unit disk", **kw)
    c.add_argument("--check", choices=["dufresnoy", "steinmetz", "fkr"], default="fkr")
    c.add_argument("--c", type=float, dest="c")
    c.add_argument("--C", type=float, dest="C")

    lq = sub.add_parser("liouville", help="finite-difference Liouville checks", **kw)
    lq.add_argument("--solve", action="store_true")
    lq.add_argument("--blowup", action="store_true", help="tabulate u_n = log f_n^# for --family")
    lq.add_argument("--V", type=float, default=4.0)
    lq.add_argument("--oracle", choices=["z", "exp"])
    lq.add_argument("--h", type=float, default=2.0**-6)

    cv = sub.add_parser("covering", help="covering-count area oracle or low-multiplicity report", **kw)
    cv.add_argument("--oracle", action="store_true", dest="oracle_area")
    cv.add_argument("--C", type=float, dest="C")
    return p


def resolve(argv: List[str]) -> RunConfig:
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.config:
        fields = {f.name: f for f in dataclasses.fields(RunConfig)}
        given = {t.split("=")[0].lstrip("-").replace("-", "_") for t in argv if t.startswith("--")}
        for k, v in _read_config_file(ns.config).items():
            if k not in fields or k == "command":
                raise ConfigError(f"unknown config key {k!r}")
            if k not in given:  # flags on the command line win
                setattr(ns, k, _coerce(fields[k], v))
    vals = {f.name: getattr(ns, f.name) for f in dataclasses.fields(RunConfig) if hasattr(ns, f.name)}
    if vals.get("threads") is None:
        vals["threads"] = int(os.environ.get("SPHLAB_THREADS", "1"))
    return RunConfig(**vals)


def _coerce(f: dataclasses.Field, text: str):
    t = str(f.type)
    if text.lower() in ("none", "null", ""):
        return None
    if "bool" in t:
        return text.lower() in ("1", "true", "yes")
    if "int" in t:
        return int(text)
    if "float" in t:
        return float(text)
    return text


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        cfg = resolve(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"sphlab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.DEBUG if "-v" in argv or "--verbose" in argv else logging.WARNING)
    if "--emit-config" in argv:
        sys.stdout.write(dumps(cfg.to_json()) + "\n")
        return EXIT_OK
    try:
        return COMMANDS[cfg.command](cfg)
    except ScheduleTooShortError as exc:
        print(f"sphlab: {exc}", file=sys.stderr)
        return EXIT_SCHEDULE
    except BudgetExceededError as exc:
        print(f"sphlab: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except NotQuasiNormalError as exc:
        print(f"sphlab: {exc}", file=sys.stderr)
        return EXIT_NOT_QUASI_NORMAL
    except (ConfigError, ValueError, SphlabError) as exc:
        print(f"sphlab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
