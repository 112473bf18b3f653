"""Scenario runner.

A scenario is one YAML document describing a model, a list of queries
(each with small parameter grids), and how to answer them: analytically,
by Monte Carlo, or both with an agreement flag.  The runner emits one
tidy row per (query, grid point) in a fixed column order, so the output
feeds plotting tools directly; nothing is rendered here.

Determinism contract: rows are ordered by query index and grid position,
Monte Carlo seeds are derived per row from the scenario seed, and floats
are written with shortest round-trip repr.  Identical scenario files
therefore produce bitwise-identical artifacts regardless of --threads.

Exit codes: 0 success, 1 parse/validation failure, 2 at least one row
failed numerically (failed rows carry the error in their `note` column
and the run continues).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from itertools import product
from typing import Sequence

import numpy as np
import yaml

from . import mc as _mc
from .models import LevyModel, Orientation, UnsupportedModelError
from .overflow import OverflowQuery, overflow_at_t, prob_busy
from .scale import (FirstPassageQuery, expected_tau_inventory,
                    expected_tau_storage, fp_transform_inventory,
                    fp_transform_storage, kendall_cross_check,
                    overflow_by_time)
from .scale import cache_clear, cache_stats

__all__ = [
    "Scenario",
    "Query",
    "load_scenario",
    "validate_scenario",
    "execute",
    "write_rows",
    "main",
]

COLUMNS = [
    "kind", "family", "orientation", "t", "u", "z", "r",
    "analytic", "analytic_error", "analytic_method",
    "mc_estimate", "mc_stderr", "mc_ci_low", "mc_ci_high",
    "agree", "note",
]

_FAMILIES = {
    "gamma": (LevyModel.gamma, ("a", "b")),
    "inverse_gaussian": (LevyModel.inverse_gaussian, ("delta", "gamma")),
    "stable": (LevyModel.stable, ("alpha", "sigma")),
    "tempered_stable": (LevyModel.tempered_stable, ("alpha", "sigma", "lam")),
    "compound_poisson": (LevyModel.compound_poisson, ("rate", "mean")),
    "degenerate": (LevyModel.degenerate, ()),
}

_KINDS = {
    # kind -> (required params, optional params)
    "overflow_at_t": (("t", "u"), ("z",)),
    "overflow_by_t": (("t", "u"), ("z",)),
    "prob_busy": (("t",), ()),
    "expected_tau": (("u",), ("z",)),
    "fp_transform": (("u", "r"), ("z",)),
}

_METHODS = ("analytic", "mc", "both")
_FORMATS = ("csv", "json")


class ScenarioError(ValueError):
    """Scenario file failed to parse."""


@dataclass(frozen=True)
class Query:
    kind: str
    t: tuple = ()
    u: tuple = ()
    z: tuple = (0.0,)
    r: tuple = ()

    def grid(self):
        """Cross product in fixed (t, u, z, r) order; absent axes
        contribute a single None."""
        axes = [self.t or (None,), self.u or (None,),
                self.z or (None,), self.r or (None,)]
        return product(*axes)


@dataclass(frozen=True)
class Scenario:
    model: LevyModel
    method: str
    queries: tuple
    mc_paths: int = 0
    mc_step: float = 0.0
    mc_seed: int | None = None
    mc_horizon: float | None = None
    output_format: str = "csv"
    destination: str | None = None
    tolerance: float = 1e-7
    threads: int = 1


# ---------------------------------------------------------------------------
# parsing and validation


def load_scenario(path: str) -> dict:
    """Read and parse the YAML document; ScenarioError carries the
    line/column of a syntax problem."""
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except yaml.MarkedYAMLError as e:
        mark = e.problem_mark
        where = (f"line {mark.line + 1}, column {mark.column + 1}"
                 if mark is not None else "unknown position")
        raise ScenarioError(f"parse error at {where}: {e.problem}") from e
    except yaml.YAMLError as e:
        raise ScenarioError(f"parse error: {e}") from e
    except OSError as e:
        raise ScenarioError(f"cannot read {path}: {e.strerror}") from e
    if not isinstance(doc, dict):
        raise ScenarioError("scenario must be a YAML mapping")
    return doc


def _as_grid(value, where: str, diags: list) -> tuple:
    vals = value if isinstance(value, (list, tuple)) else [value]
    out = []
    for v in vals:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            diags.append(f"{where}: expected a number or list of numbers")
            return ()
        out.append(float(v))
    if not out:
        diags.append(f"{where}: empty grid")
    return tuple(out)


def _check_model(section, diags: list) -> LevyModel | None:
    if not isinstance(section, dict):
        diags.append("model: must be a mapping with family/params/orientation")
        return None
    unknown = set(section) - {"family", "params", "orientation"}
    for k in sorted(unknown):
        diags.append(f"model.{k}: unknown key")
    family = section.get("family")
    if family not in _FAMILIES:
        diags.append(f"model.family: must be one of {', '.join(sorted(_FAMILIES))}; "
                     f"got {family!r}")
        return None
    ctor, names = _FAMILIES[family]
    params = section.get("params", {}) or {}
    if not isinstance(params, dict):
        diags.append("model.params: must be a mapping")
        return None
    for k in sorted(set(params) - set(names)):
        diags.append(f"model.params.{k}: unknown parameter for {family} "
                     f"(takes {', '.join(names) or 'none'})")
    missing = [n for n in names if n not in params]
    if missing:
        diags.append(f"model.params: missing {', '.join(missing)} for {family}")
        return None
    orientation = section.get("orientation", "storage")
    if orientation not in ("storage", "inventory"):
        diags.append(f"model.orientation: must be storage or inventory, got {orientation!r}")
        return None
    try:
        return ctor(*(float(params[n]) for n in names),
                    orientation=Orientation(orientation))
    except (TypeError, ValueError) as e:
        diags.append(f"model.params: {e}")
        return None


def _check_query(i: int, section, model: LevyModel | None, diags: list) -> Query | None:
    where = f"queries[{i}]"
    if not isinstance(section, dict):
        diags.append(f"{where}: must be a mapping")
        return None
    kind = section.get("kind")
    if kind not in _KINDS:
        diags.append(f"{where}.kind: must be one of {', '.join(sorted(_KINDS))}; "
                     f"got {kind!r}")
        return None
    required, optional = _KINDS[kind]
    allowed = set(required) | set(optional) | {"kind"}
    for k in sorted(set(section) - allowed):
        diags.append(f"{where}.{k}: not used by kind {kind}")
    missing = [p for p in required if p not in section]
    if missing:
        diags.append(f"{where}: kind {kind} needs {', '.join(missing)}")
        return None
    grids = {}
    for p in ("t", "u", "z", "r"):
        if p in section:
            grids[p] = _as_grid(section[p], f"{where}.{p}", diags)
    if any(p in grids and not grids[p] for p in grids):
        return None

    for tv in grids.get("t", ()):
        if not (np.isfinite(tv) and tv > 0.0):
            diags.append(f"{where}.t: times must be positive and finite, got {tv}")
    for uv in grids.get("u", ()):
        if not np.isfinite(uv):
            diags.append(f"{where}.u: must be finite, got {uv}")
        elif kind == "overflow_at_t":
            if uv < 0.0:
                diags.append(f"{where}.u: level must be >= 0, got {uv}")
        elif uv <= 0.0:
            diags.append(f"{where}.u: level must be > 0, got {uv}")
    for zv in grids.get("z", ()):
        if not (np.isfinite(zv) and zv >= 0.0):
            diags.append(f"{where}.z: start level must be finite and >= 0, got {zv}")
    if kind in ("overflow_by_t", "expected_tau", "fp_transform"):
        for zv in grids.get("z", (0.0,)):
            for uv in grids.get("u", ()):
                if np.isfinite(zv) and np.isfinite(uv) and zv > uv:
                    diags.append(f"{where}: needs 0 <= z <= u, "
                                 f"got z={zv} with u={uv}")
                    break
    for rv in grids.get("r", ()):
        if not (np.isfinite(rv) and rv >= 0.0):
            diags.append(f"{where}.r: rate must be finite and >= 0, got {rv}")

    if model is not None:
        storage = model.orientation is Orientation.STORAGE
        if kind == "prob_busy" and not storage:
            diags.append(f"{where}: prob_busy is defined for the storage "
                         f"orientation only")
        if kind == "overflow_at_t":
            if any(zv != 0.0 for zv in grids.get("z", ())):
                diags.append(f"{where}.z: overflow_at_t starts from the empty "
                             f"state; z must be 0 or omitted")
            if not storage:
                if not model.has_density and model.family.value != "degenerate":
                    diags.append(f"{where}: inventory overflow_at_t goes through "
                                 f"Kendall's identity and needs a marginal "
                                 f"density; {model.family.value} has none "
                                 f"(use overflow_by_t)")
                if any(uv == 0.0 for uv in grids.get("u", ())):
                    diags.append(f"{where}.u: inventory overflow_at_t needs u > 0")
            elif not model.has_density and model.family.value != "degenerate":
                if any(uv > 0.0 for uv in grids.get("u", ())):
                    diags.append(f"{where}: overflow_at_t with u > 0 needs a "
                                 f"marginal density; {model.family.value} has "
                                 f"none (only u = 0 is supported)")

    return Query(kind,
                 t=grids.get("t", ()),
                 u=grids.get("u", ()),
                 z=grids.get("z", (0.0,)),
                 r=grids.get("r", ()))


def validate_scenario(doc: dict) -> tuple[Scenario | None, list[str]]:
    """Full static validation; returns (scenario, diagnostics).  The
    scenario is None whenever diagnostics are nonempty."""
    diags: list[str] = []
    known = {"model", "method", "queries", "mc", "output", "options"}
    for k in sorted(set(doc) - known):
        diags.append(f"{k}: unknown top-level key")

    model = _check_model(doc.get("model"), diags)

    method = doc.get("method", "analytic")
    if method not in _METHODS:
        diags.append(f"method: must be one of {', '.join(_METHODS)}; got {method!r}")
        method = "analytic"

    queries = []
    qsec = doc.get("queries", [])
    if not isinstance(qsec, list):
        diags.append("queries: must be a list")
        qsec = []
    for i, q in enumerate(qsec):
        parsed = _check_query(i, q, model, diags)
        if parsed is not None:
            queries.append(parsed)

    paths, step, seed, horizon = 0, 0.0, None, None
    msec = doc.get("mc")
    if msec is not None and not isinstance(msec, dict):
        diags.append("mc: must be a mapping")
        msec = None
    if method in ("mc", "both"):
        if msec is None:
            diags.append("mc: section required when method includes Monte Carlo")
            msec = {}
        for k in sorted(set(msec) - {"paths", "step", "seed", "horizon"}):
            diags.append(f"mc.{k}: unknown key")
        paths = msec.get("paths")
        if not isinstance(paths, int) or isinstance(paths, bool) or paths < 1:
            diags.append(f"mc.paths: must be a positive integer, got {paths!r}")
            paths = 0
        step = msec.get("step")
        if not isinstance(step, (int, float)) or isinstance(step, bool) \
                or not np.isfinite(step) or step <= 0.0:
            diags.append(f"mc.step: must be positive and finite, got {step!r}")
            step = 0.0
        seed = msec.get("seed")
        if seed is None:
            diags.append("mc.seed: mandatory for reproducibility when method "
                         "includes Monte Carlo")
        elif not isinstance(seed, int) or isinstance(seed, bool) \
                or not 0 <= seed < 2 ** 64:
            diags.append(f"mc.seed: must be a 64-bit unsigned integer, got {seed!r}")
            seed = None
        horizon = msec.get("horizon")
        if horizon is not None and (not isinstance(horizon, (int, float))
                                    or isinstance(horizon, bool)
                                    or not np.isfinite(horizon) or horizon <= 0.0):
            diags.append(f"mc.horizon: must be positive and finite, got {horizon!r}")
            horizon = None
        if step and queries:
            for i, q in enumerate(queries):
                for t, u, z, r in q.grid():
                    h = _row_horizon(q.kind, t, u, z, r, horizon)
                    if step > h:
                        diags.append(
                            f"queries[{i}]: mc.step {step} exceeds the "
                            f"simulation horizon {h} of a grid point")
                        break

    fmt, dest = "csv", None
    osec = doc.get("output")
    if osec is not None:
        if not isinstance(osec, dict):
            diags.append("output: must be a mapping")
        else:
            for k in sorted(set(osec) - {"format", "destination"}):
                diags.append(f"output.{k}: unknown key")
            fmt = osec.get("format", "csv")
            if fmt not in _FORMATS:
                diags.append(f"output.format: must be csv or json, got {fmt!r}")
                fmt = "csv"
            dest = osec.get("destination")
            if dest is not None and not isinstance(dest, str):
                diags.append("output.destination: must be a path string")
                dest = None

    tol, threads = 1e-7, 1
    psec = doc.get("options")
    if psec is not None:
        if not isinstance(psec, dict):
            diags.append("options: must be a mapping")
        else:
            for k in sorted(set(psec) - {"tolerance", "threads"}):
                diags.append(f"options.{k}: unknown key")
            tol = psec.get("tolerance", 1e-7)
            if not isinstance(tol, (int, float)) or isinstance(tol, bool) \
                    or not 0.0 < tol < 1.0:
                diags.append(f"options.tolerance: must lie in (0, 1), got {tol!r}")
                tol = 1e-7
            threads = psec.get("threads", 1)
            if not isinstance(threads, int) or isinstance(threads, bool) or threads < 1:
                diags.append(f"options.threads: must be a positive integer, got {threads!r}")
                threads = 1

    if diags or model is None:
        return None, diags
    return Scenario(model, method, tuple(queries), paths or 0, float(step or 0.0),
                    seed, horizon, fmt, dest, float(tol), threads), diags


def normalized_echo(scenario: Scenario) -> str:
    """Canonical YAML rendering of the parsed scenario."""
    d = {
        "model": {
            "family": scenario.model.family.value,
            "params": dict(scenario.model.param_dict),
            "orientation": scenario.model.orientation.value,
        },
        "method": scenario.method,
        "queries": [],
    }
    for q in scenario.queries:
        required, optional = _KINDS[q.kind]
        allowed = set(required) | set(optional)
        entry = {"kind": q.kind}
        for p in ("t", "u", "z", "r"):
            vals = getattr(q, p)
            if p in allowed and vals:
                entry[p] = list(vals)
        d["queries"].append(entry)
    if scenario.method in ("mc", "both"):
        d["mc"] = {"paths": scenario.mc_paths, "step": scenario.mc_step,
                   "seed": scenario.mc_seed}
        if scenario.mc_horizon is not None:
            d["mc"]["horizon"] = scenario.mc_horizon
    d["output"] = {"format": scenario.output_format}
    if scenario.destination:
        d["output"]["destination"] = scenario.destination
    d["options"] = {"tolerance": scenario.tolerance, "threads": scenario.threads}
    return yaml.safe_dump(d, sort_keys=False)


# ---------------------------------------------------------------------------
# execution


def _row_horizon(kind: str, t, u, z, r, override) -> float:
    if kind in ("overflow_at_t", "overflow_by_t", "prob_busy"):
        return float(t)
    if override is not None:
        return float(override)
    # passage-time queries need a base horizon; TauMean extends it on its
    # own, TauTransform relies on the censoring bound e^{-rT} instead
    return max(1.0, 2.0 * (float(u) - float(z)) + 1.0)


def _analytic_value(kind: str, model: LevyModel, t, u, z, r, tol: float):
    """(value, error_estimate or None, method tag)."""
    if kind == "overflow_at_t":
        if model.orientation is Orientation.STORAGE:
            res = overflow_at_t(OverflowQuery(model, t, u), tol=tol)
            return res.value, res.error_estimate, res.method.value
        res = kendall_cross_check(model, u, t, tol=tol)
        return res.value, res.error_estimate, "kendall-identity"
    if kind == "prob_busy":
        res = prob_busy(model, t, tol=min(tol, 1e-9))
        return res.value, res.error_estimate, res.method.value
    if kind == "overflow_by_t":
        res = overflow_by_time(FirstPassageQuery(model, z, u), t)
        return res.value, res.error_estimate, "gs-transform"
    if kind == "expected_tau":
        fn = (expected_tau_storage if model.orientation is Orientation.STORAGE
              else expected_tau_inventory)
        return fn(FirstPassageQuery(model, z, u)), None, "scale-mean"
    fn = (fp_transform_storage if model.orientation is Orientation.STORAGE
          else fp_transform_inventory)
    return fn(FirstPassageQuery(model, z, u), r), None, "scale-transform"


def _mc_functional(kind: str, t, u, z, r):
    """(functional, z0) pair for the Monte Carlo side of a row."""
    if kind == "overflow_at_t":
        return _mc.LevelExceeds(u, t), 0.0
    if kind == "prob_busy":
        return _mc.LevelExceeds(0.0, t), 0.0
    if kind == "overflow_by_t":
        return _mc.MaxExceeds(u, t), z
    if kind == "expected_tau":
        return _mc.TauMean(u), z
    return _mc.TauTransform(u, r), z


def _row_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(index,))
               .generate_state(1, np.uint64)[0])


def _run_row(scenario: Scenario, index: int, query: Query, point) -> dict:
    t, u, z, r = point
    row = {c: None for c in COLUMNS}
    row["kind"] = query.kind
    row["family"] = scenario.model.family.value
    row["orientation"] = scenario.model.orientation.value
    row["t"], row["u"], row["z"], row["r"] = t, u, z, r
    if query.kind in ("overflow_at_t", "prob_busy"):
        row["z"] = None
    note = []
    failed = False

    if scenario.method in ("analytic", "both"):
        try:
            value, err, tag = _analytic_value(query.kind, scenario.model,
                                              t, u, z, r, scenario.tolerance)
            row["analytic"], row["analytic_error"] = value, err
            row["analytic_method"] = tag
        except (ValueError, UnsupportedModelError, ArithmeticError) as e:
            note.append(f"analytic: {e}")
            failed = True

    if scenario.method in ("mc", "both"):
        try:
            horizon = _row_horizon(query.kind, t, u, z, r, scenario.mc_horizon)
            functional, z0 = _mc_functional(query.kind, t, u, z, r)
            cfg = _mc.SimulationConfig(scenario.model, horizon, scenario.mc_step,
                                       scenario.mc_paths,
                                       _row_seed(scenario.mc_seed, index), z0)
            est = _mc.estimate(functional, cfg)
            row["mc_estimate"] = est.estimate
            row["mc_stderr"] = est.std_error
            row["mc_ci_low"], row["mc_ci_high"] = est.ci_low, est.ci_high
            if est.censored and query.kind == "expected_tau":
                note.append(f"mc: {est.censored} of {est.paths} paths censored "
                            f"at the horizon; the mean is a lower bound")
        except (ValueError, UnsupportedModelError, ArithmeticError,
                _mc.SamplerError, _mc.EstimationError) as e:
            note.append(f"mc: {e}")
            failed = True

    if row["analytic"] is not None and row["mc_estimate"] is not None:
        row["agree"] = bool(abs(row["analytic"] - row["mc_estimate"])
                            <= 3.0 * row["mc_stderr"])
    row["note"] = "; ".join(note) if note else None
    row["_failed"] = failed
    return row


def execute(scenario: Scenario, threads: int | None = None) -> tuple[list[dict], int]:
    """Run every (query, grid point) row; returns (rows, failure count).

    Rows are ordered by query index then grid position whatever the
    thread count; each row draws its Monte Carlo seed from the scenario
    seed and its own index, so scheduling cannot change any number.
    A failed row keeps its place with the error in the note column.
    """
    specs = []
    for q in scenario.queries:
        for point in q.grid():
            specs.append((len(specs), q, point))
    workers = threads if threads is not None else scenario.threads
    if workers > 1 and len(specs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(
                lambda s: _run_row(scenario, s[0], s[1], s[2]), specs))
    else:
        rows = [_run_row(scenario, i, q, point) for i, q, point in specs]
    failures = sum(1 for row in rows if row.pop("_failed"))
    return rows, failures


# ---------------------------------------------------------------------------
# output


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _json_value(value):
    # strict JSON has no Infinity/NaN literal
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    return value


def write_rows(rows: list[dict], fmt: str, fh) -> None:
    if fmt == "csv":
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COLUMNS)
        for row in rows:
            writer.writerow([_cell(row[c]) for c in COLUMNS])
    else:
        fh.write(json.dumps([{c: _json_value(row[c]) for c in COLUMNS}
                             for row in rows], indent=2, allow_nan=False))
        fh.write("\n")


# ---------------------------------------------------------------------------
# entry points


def _cmd_run(args) -> int:
    try:
        doc = load_scenario(args.scenario)
    except ScenarioError as e:
        print(str(e), file=sys.stderr)
        return 1
    scenario, diags = validate_scenario(doc)
    if scenario is None:
        for d in diags:
            print(d, file=sys.stderr)
        return 1
    if args.tolerance is not None:
        scenario = replace(scenario, tolerance=args.tolerance)
    rows, errors = execute(scenario, threads=args.threads)
    fmt = args.format or scenario.output_format
    dest = args.output or scenario.destination
    if dest:
        with open(dest, "w", newline="") as fh:
            write_rows(rows, fmt, fh)
        status = f"wrote {len(rows)} rows to {dest}"
        if errors:
            status += f" ({errors} with errors)"
        print(status)
    else:
        write_rows(rows, fmt, sys.stdout)
    return 2 if errors else 0


def _cmd_validate(args) -> int:
    try:
        doc = load_scenario(args.scenario)
    except ScenarioError as e:
        print(str(e), file=sys.stderr)
        return 1
    scenario, diags = validate_scenario(doc)
    if scenario is None:
        for d in diags:
            print(d)
        return 1
    print("ok")
    print(normalized_echo(scenario), end="")
    return 0


def _cmd_cache(args) -> int:
    if args.action == "stats":
        count, size, where = cache_stats()
        print(f"{count} cached tables, {size} bytes, {where}")
    else:
        removed = cache_clear()
        print(f"removed {removed} cached tables")
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="levystore",
        description="Run or validate declarative scenarios for reflected "
                    "Levy-input storage and inventory models.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a scenario file")
    p_run.add_argument("scenario")
    p_run.add_argument("--output", help="artifact path (default: scenario "
                       "setting, else stdout)")
    p_run.add_argument("--format", choices=_FORMATS,
                       help="override the scenario output format")
    p_run.add_argument("--threads", type=int,
                       help="worker threads for query rows")
    p_run.add_argument("--tolerance", type=float,
                       help="override the analytic tolerance")
    p_run.set_defaults(fn=_cmd_run)

    p_val = sub.add_parser("validate", help="static checks, no computation")
    p_val.add_argument("scenario")
    p_val.set_defaults(fn=_cmd_validate)

    p_cache = sub.add_parser("cache", help="inspect or clear the table cache")
    p_cache.add_argument("action", choices=("stats", "clear"))
    p_cache.set_defaults(fn=_cmd_cache)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
