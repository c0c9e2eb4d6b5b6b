"""``diffquad`` command-line front end.

Every subcommand reads an optional JSON config whose keys mirror the long
flags (``--max-degree`` is ``max_degree``); flags given on the command line
override the config.  Exit codes: 0 success, 1 verification failure,
2 malformed configuration, 3 numeric failure or unwritable output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from diffquad import kernels, quadrature
from diffquad.errors import DiffquadError, InvalidArgument, NumericFailure, SpectrumExhausted
from diffquad.measures import PointMeasure, dumps_stable, mesh_norm, min_separation
from diffquad.spaces import (EigenData, circle_space, gauss_product_rule,
                             pointcloud_space, sphere2_space, torus2_space)

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
SWEEP_HEADER = ["n", "wce", "tv", "reg_const", "discrepancy"]
PROFILE_HEADER = ["r", "sup_abs", "bound"]


class ConfigError(Exception):
    """Malformed or incomplete configuration (exit 2)."""


class OutputError(Exception):
    """Output could not be written (exit 3)."""


# ---------------------------------------------------------------------------
# configuration


COMMON = {
    "config": dict(help="JSON config file; keys mirror the long flags"),
    "space": dict(choices=["circle", "torus", "sphere", "pointcloud"]),
    "max_degree": dict(type=int, help="stored spectrum cap"),
    "eigendata": dict(help="EigenData JSON for --space pointcloud"),
    "seed": dict(type=int),
    "probe_resolution": dict(type=int),
    "out": dict(help="primary output path"),
}

TASKS = {
    "build-weights": {
        "nodes": dict(help="node file (JSON list or measure file)"),
        "rule": dict(choices=["trapezoid", "gauss", "product", "random"]),
        "num_nodes": dict(type=int),
        "order": dict(type=float, help="exactness order n"),
        "beta": dict(type=float),
        "constraint": dict(choices=list(quadrature.CONSTRAINTS)),
        "solver": dict(choices=["exact", "discrepancy"]),
        "report": dict(help="report path (default: <out>.report.json)"),
    },
    "verify": {
        "measures": dict(help="comma-separated measure files, one per order"),
        "orders": dict(help="comma-separated orders"),
        "rule": dict(choices=["trapezoid", "gauss", "product"]),
        "gamma": dict(type=float),
        "p": dict(),
        "trials": dict(type=int),
        "degree_factor": dict(type=float),
    },
    "wce-sweep": {
        "orders": dict(help="comma-separated orders"),
        "rule": dict(choices=["trapezoid", "gauss", "product"]),
        "gamma": dict(type=float),
        "p": dict(),
        "beta": dict(type=float),
        "trials": dict(type=int),
        "degree_factor": dict(type=float),
    },
    "kernel-profile": {
        "N": dict(type=float),
        "center": dict(help="comma-separated coordinates"),
        "radii": dict(type=int, help="number of log-spaced radii in [4/N, 1]"),
        "S": dict(type=float),
    },
    "mesh-stats": {
        "nodes": dict(),
        "rule": dict(choices=["trapezoid", "gauss", "product", "random"]),
        "num_nodes": dict(type=int),
    },
    "covering": {
        "orders": dict(),
        "rule": dict(choices=["trapezoid", "gauss", "product"]),
        "gamma": dict(type=float),
        "p": dict(),
        "floor": dict(type=float),
    },
    "product-defect": {
        "A": dict(type=float),
        "N": dict(type=float),
    },
}

TASK_HELP = {
    "build-weights": "exact or discrepancy-minimizing weights for a node set",
    "verify": "check the approximate-quadrature conditions on a sequence of measures",
    "wce-sweep": "worst-case error across orders, written as CSV",
    "kernel-profile": "sup of the localized kernel on rings of growing radius, written as CSV",
    "mesh-stats": "mesh norm and minimal separation of a node set",
    "covering": "covering-radius check for a sequence of measures",
    "product-defect": "distance of eigenfunction products from a larger polynomial space",
}

REQUIRED = {
    "build-weights": ["space"],
    "verify": ["space", "gamma", "p", "seed", "out"],
    "wce-sweep": ["space", "orders", "rule", "gamma", "p", "seed", "out"],
    "kernel-profile": ["space", "N", "out"],
    "mesh-stats": ["space", "out"],
    "covering": ["space", "orders", "rule", "gamma", "p", "out"],
    "product-defect": ["space", "A", "N", "out"],
}

DEFAULTS = {
    "max_degree": None,
    "trials": 200,
    "degree_factor": 4.0,
    "constraint": "simplex",
    "radii": 40,
    "S": 8.0,
    "floor": 0.5,
}


def _flag(name):
    return "--" + name.replace("_", "-")


class _ArgumentError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Raises instead of exiting so usage errors map to exit code 2 in one place."""

    def error(self, message):
        raise _ArgumentError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="diffquad", description="Construct and verify quadrature measures on "
                                                    "spaces with a known eigensystem.")
    sub = parser.add_subparsers(dest="task", required=True, parser_class=_Parser)
    for task, opts in TASKS.items():
        sp = sub.add_parser(task, help=TASK_HELP[task], description=TASK_HELP[task])
        for name, kw in {**COMMON, **opts}.items():
            # None marks "not given" so config values survive
            sp.add_argument(_flag(name), dest=name, default=None, **kw)
    return parser


def _load_config(path: str) -> tuple:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}:1: config must be a JSON object")
    return doc, text


def _key_line(text: str, key: str) -> int:
    for i, line in enumerate(text.splitlines(), 1):
        if f'"{key}"' in line:
            return i
    return 1


def resolve(args: argparse.Namespace) -> dict:
    """Merge config file, flags and defaults; validate required keys."""
    task = args.task
    allowed = set(COMMON) | set(TASKS[task])
    cfg = {}
    if args.config:
        doc, text = _load_config(args.config)
        for key, value in doc.items():
            norm = key.replace("-", "_")
            if norm == "task":
                if value != task:
                    raise ConfigError(f"{args.config}:{_key_line(text, key)}: config is for task "
                                      f"'{value}', not '{task}'")
                continue
            if norm not in allowed or norm == "config":
                raise ConfigError(f"{args.config}:{_key_line(text, key)}: unknown key '{key}' for {task}")
            cfg[norm] = value
    for key in allowed:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    for key, value in DEFAULTS.items():
        if key in allowed:
            cfg.setdefault(key, value)
    missing = [k for k in REQUIRED[task] if cfg.get(k) is None]
    if missing:
        raise ConfigError(f"{task}: missing required parameter(s): "
                          + ", ".join(_flag(k) for k in missing))
    cfg["task"] = task
    return cfg


# ---------------------------------------------------------------------------
# building blocks


def _default_cap(kind: str) -> int:
    return {"circle": 256, "torus": 32, "sphere": 16}[kind]


def make_space(cfg: dict):
    kind = cfg["space"]
    if kind == "pointcloud":
        if not cfg.get("eigendata"):
            raise ConfigError("--space pointcloud needs --eigendata")
        try:
            text = Path(cfg["eigendata"]).read_text()
        except OSError as exc:
            raise ConfigError(f"{cfg['eigendata']}: cannot read ({exc.strerror})") from None
        return pointcloud_space(EigenData.from_json(text))
    cap = cfg.get("max_degree") or _default_cap(kind)
    return {"circle": circle_space, "torus": torus2_space, "sphere": sphere2_space}[kind](int(cap))


def _ints(text) -> list:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse number list '{text}'") from None


def rule_measure(space, rule: str, n: float) -> PointMeasure:
    """Reference sequence member of order ``n``: exact on ``Pi_n``."""
    n_int = int(math.ceil(n))
    if rule == "trapezoid" and space.name == "circle":
        return quadrature.trapezoid_rule(n_int)
    if rule == "gauss" and space.name == "sphere2":
        return gauss_product_rule(n_int, 2 * n_int + 1)
    if rule == "product" and space.name == "torus2":
        return quadrature.torus_product_rule(n_int)
    raise ConfigError(f"rule '{rule}' is not available on the {space.name} space")


def load_nodes(space, cfg: dict) -> np.ndarray:
    if cfg.get("nodes"):
        try:
            doc = json.loads(Path(cfg["nodes"]).read_text())
        except OSError as exc:
            raise ConfigError(f"{cfg['nodes']}: cannot read ({exc.strerror})") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{cfg['nodes']}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
        if isinstance(doc, dict):
            doc = doc.get("points", doc.get("nodes"))
            if doc is None:
                raise ConfigError(f"{cfg['nodes']}:1: expected 'points' or 'nodes'")
        try:
            return space.as_points(np.asarray(doc, dtype=float))
        except (ValueError, InvalidArgument) as exc:
            raise ConfigError(f"{cfg['nodes']}: {exc}") from None
    rule = cfg.get("rule")
    if rule is None:
        raise ConfigError("give --nodes or --rule")
    num = cfg.get("num_nodes")
    if num is None:
        raise ConfigError("--rule needs --num-nodes")
    if rule == "random":
        if cfg.get("seed") is None:
            raise ConfigError("--rule random needs --seed")
        rng = np.random.Generator(np.random.Philox(key=int(cfg["seed"])))
        return space.random_points(rng, int(num))
    return rule_measure(space, rule, num).points


def _measure_file(path: str, space) -> PointMeasure:
    try:
        return PointMeasure.from_json(Path(path).read_text(), space)
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from None
    except (json.JSONDecodeError, InvalidArgument, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def measures_for(space, cfg: dict) -> dict:
    orders = _ints(cfg["orders"]) if cfg.get("orders") else None
    if cfg.get("measures"):
        files = [f for f in str(cfg["measures"]).split(",") if f]
        if orders is None or len(orders) != len(files):
            raise ConfigError("--measures needs --orders with one order per file")
        return {n: _measure_file(f, space) for n, f in zip(orders, files)}
    if orders is None or not cfg.get("rule"):
        raise ConfigError("give --orders with --rule or --measures")
    return {n: rule_measure(space, cfg["rule"], n) for n in orders}


def threads() -> int:
    try:
        return max(1, int(os.environ.get("DIFFQUAD_THREADS", "1")))
    except ValueError:
        raise ConfigError("DIFFQUAD_THREADS must be an integer") from None


def write_text(path: str, text: str) -> None:
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OutputError(f"{path}: cannot write ({exc.strerror})") from None


def emit_report(report, path: str) -> None:
    doc = report.to_dict() if hasattr(report, "to_dict") else report
    write_text(path, dumps_stable(doc))


def _csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format(v, ".17g") if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def sidecar_path(out: str) -> str:
    base, ext = os.path.splitext(out)
    return (base if ext else out) + ".json"


# ---------------------------------------------------------------------------
# tasks


def task_build_weights(cfg) -> int:
    space = make_space(cfg)
    nodes = load_nodes(space, cfg)
    constraint = cfg["constraint"]
    solver = cfg.get("solver") or ("exact" if constraint == "free" else "discrepancy")
    order = cfg.get("order")
    if solver == "exact" and order is None:
        raise ConfigError("--solver exact needs --order")
    problem = quadrature.QuadratureProblem(space, nodes, order if order is not None else math.nan,
                                           constraint=constraint, beta=cfg.get("beta"))
    if solver == "exact":
        sol = quadrature.exact_weights(problem)
    else:
        sol = quadrature.minimize_discrepancy(problem)
    report = {"solution": sol.to_dict(), "beta": problem.beta, "constraint": constraint,
              "solver": solver, "space": space.name, "nodes": int(nodes.shape[0]),
              "discrepancy": quadrature.discrepancy(space, sol.measure, problem.beta, 2)}
    if order is not None:
        resid = quadrature.moment_residuals(space, sol.measure, order)
        report["order"] = order
        report["exactness_residual"] = float(np.max(np.abs(resid)))
        report["regime"] = "exact" if report["exactness_residual"] <= quadrature.EXACT_TOL else "approximate"
    out = cfg.get("out") or "weights.json"
    write_text(out, sol.measure.to_json())
    emit_report(report, cfg.get("report") or out + ".report.json")
    return EXIT_OK


def task_verify(cfg) -> int:
    space = make_space(cfg)
    measures = measures_for(space, cfg)
    report = quadrature.verify_approx_class(space, measures, cfg["gamma"], cfg["p"], trials=int(cfg["trials"]),
                                            seed=int(cfg["seed"]), degree_factor=cfg["degree_factor"],
                                            probe_resolution=cfg.get("probe_resolution"))
    emit_report(report, cfg["out"])
    return EXIT_OK if report.verdict else EXIT_VERIFY


def sweep_rows(space, cfg) -> list:
    orders = _ints(cfg["orders"])
    beta = cfg.get("beta") or quadrature.default_beta(space)

    def one(n):
        nu = rule_measure(space, cfg["rule"], n)
        res = quadrature.worst_case_error(space, nu, cfg["gamma"], cfg["p"], n, int(cfg["trials"]),
                                          int(cfg["seed"]), cfg["degree_factor"])
        reg = quadrature.regularity_constant(nu, 1.0 / n, space=space,
                                             probe_resolution=cfg.get("probe_resolution")).constant
        return [n, res.value, nu.total_variation, reg, quadrature.discrepancy(space, nu, beta, 2)]

    with ThreadPoolExecutor(max_workers=threads()) as pool:
        return list(pool.map(one, orders))


def task_wce_sweep(cfg) -> int:
    space = make_space(cfg)
    rows = sweep_rows(space, cfg)
    ns = [r[0] for r in rows]
    for r in rows:
        r[0] = int(r[0]) if float(r[0]).is_integer() else r[0]
    slope = kernels.fit_loglog_slope(ns, [r[1] for r in rows])
    write_text(cfg["out"], _csv(SWEEP_HEADER, rows))
    emit_report({"fitted_slope": slope, "gamma": cfg["gamma"], "p": str(cfg["p"]), "orders": ns,
                 "rule": cfg["rule"], "seed": cfg["seed"], "trials": cfg["trials"],
                 "degree_factor": cfg["degree_factor"], "space": space.name,
                 "note": "worst-case errors are randomized lower estimates"}, sidecar_path(cfg["out"]))
    return EXIT_OK


def task_kernel_profile(cfg) -> int:
    space = make_space(cfg)
    N = cfg["N"]
    if cfg.get("center"):
        center = space.as_points(np.array([_ints(cfg["center"])]))
    else:
        center = space.probe_grid(1)[:1]
    radii = np.geomspace(min(4.0 / N, 1.0), 1.0, int(cfg["radii"]))
    prof = kernels.localization_profile(space, kernels.cutoff_mask(), N, center, radii, S=cfg["S"])
    write_text(cfg["out"], _csv(PROFILE_HEADER, prof.rows()))
    emit_report({"decay_exponent": prof.decay_exponent, "constant": prof.constant, "S": prof.S, "N": N},
                sidecar_path(cfg["out"]))
    return EXIT_OK


def task_mesh_stats(cfg) -> int:
    space = make_space(cfg)
    nodes = load_nodes(space, cfg)
    res = cfg.get("probe_resolution")
    doc = {"count": int(nodes.shape[0]), "mesh_norm": mesh_norm(space, nodes, res),
           "min_separation": min_separation(space, nodes) if nodes.shape[0] > 1 else None,
           "probe_resolution": res if res is not None else 4 * space.dimension_count}
    if doc["min_separation"]:
        doc["mesh_ratio"] = doc["mesh_norm"] / doc["min_separation"]
    emit_report(doc, cfg["out"])
    return EXIT_OK


def task_covering(cfg) -> int:
    space = make_space(cfg)
    report = quadrature.covering_check(space, measures_for(space, cfg), cfg["gamma"], cfg["p"],
                                       floor=cfg["floor"], probe_resolution=cfg.get("probe_resolution"))
    emit_report(report, cfg["out"])
    return EXIT_OK if report.passed else EXIT_VERIFY


def task_product_defect(cfg) -> int:
    space = make_space(cfg)
    value = quadrature.product_defect(space, cfg["A"], cfg["N"])
    emit_report({"A": cfg["A"], "N": cfg["N"], "defect": value, "space": space.name}, cfg["out"])
    return EXIT_OK


DISPATCH = {
    "build-weights": task_build_weights,
    "verify": task_verify,
    "wce-sweep": task_wce_sweep,
    "kernel-profile": task_kernel_profile,
    "mesh-stats": task_mesh_stats,
    "covering": task_covering,
    "product-defect": task_product_defect,
}


def run(cfg: dict) -> int:
    return DISPATCH[cfg["task"]](cfg)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = resolve(args)
        return run(cfg)
    except (_ArgumentError, ConfigError) as exc:
        print(f"diffquad: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvalidArgument as exc:
        print(f"diffquad: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OutputError, NumericFailure, SpectrumExhausted, DiffquadError, FloatingPointError) as exc:
        print(f"diffquad: error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
