"""``intricacy compute | verify | sweep``.

Exit codes: 0 success, 1 verification failures, 2 invalid configuration
(nothing written), 3 budget or size limit hit (rows up to the last
completed ``n`` are written).
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import complexity_engine as eng
from .config import RunConfiguration, Task
from .errors import BudgetExceeded, IntricacyError, SizeLimitError, ValidationError
from .series import CSV_HEADER, TruncationSeries
from .verify import verify_suite

log = logging.getLogger("intricacy")

EXIT_OK, EXIT_VERIFY, EXIT_INVALID, EXIT_BUDGET = 0, 1, 2, 3
SWEEP_PARAMS = ("n", "V", "samples", "coeffs")

_PER_N = {
    "asc_top": eng.asc_top,
    "int_top": eng.int_top,
    "h_top": eng.h_top,
    "asc_mu": eng.asc_mu,
    "int_mu": eng.int_mu,
    "asc_mu_minus": eng.asc_mu_minus,
    "asc_minus_anchored": eng.asc_minus_anchored,
}


def _call(quantity, terms: eng.SubsetTerms, task: Task, ns) -> TruncationSeries:
    f = _PER_N[quantity]
    X, U, mu, code = terms.shift, terms.cover, terms.measure, terms.code
    if quantity in ("asc_top", "int_top"):
        return f(X, U, task.coeffs, ns, code=code, terms=terms)
    if quantity == "h_top":
        return f(X, U, ns, code=code, terms=terms)
    if quantity == "asc_minus_anchored":
        return f(X, mu, U, ns, code=code, terms=terms, coeffs=task.coeffs)
    return f(X, mu, U, task.coeffs, ns, code=code, terms=terms)


def run_task(cfg: RunConfiguration, index: int, margin: int, deadline: float | None,
             timings: bool) -> dict:
    """One task at one conditioning margin; never raises for engine errors."""
    task = cfg.tasks[index]
    out = {"index": index, "quantity": task.quantity, "shift": task.shift, "cover": task.cover,
           "measure": task.measure, "code": task.code, "margin": margin if task.code else None,
           "series": None, "errors": [], "status": "ok", "partition": None}
    try:
        X = cfg.shift(task.shift)
        U = cfg.cover(task.cover)
        mu = None if task.measure is None else cfg.measure(task.measure)
        code = None if task.code is None else cfg.code(task.code, X)
        opts = cfg.options(deadline, margin)
        if task.quantity == "asc_mu_plus":
            res = eng.asc_mu_plus(X, mu, U, task.coeffs, task.n, opts, extend=task.extend, code=code)
            series = res.series
            out["partition"] = {"window": [list(p) for p in res.partition.window.points],
                                "cells": [sorted("".join(map(str, w)) for w in e)
                                          for e in res.partition.elements],
                                "exhaustive": res.exhaustive}
        else:
            terms = eng.SubsetTerms(X, U, mu, code, opts)
            series = None
            for n in task.n:
                try:
                    part = _call(task.quantity, terms, task, [n])
                except (BudgetExceeded, SizeLimitError) as exc:
                    out["errors"].append(f"n={n}: {type(exc).__name__}: {exc}")
                    out["status"] = "budget"
                    break
                if series is None:
                    series = part
                else:
                    series.add(part.records[0])
                    series.approximate |= part.approximate
        if series is not None and not timings:
            for r in series.records:
                r.seconds = 0.0
        out["series"] = series
    except (BudgetExceeded, SizeLimitError) as exc:
        out["errors"].append(f"{type(exc).__name__}: {exc}")
        out["status"] = "budget"
    except IntricacyError as exc:
        out["errors"].append(f"{type(exc).__name__}: {exc}")
        out["status"] = "error"
    return out


def _run_all(cfg: RunConfiguration, jobs: int, timings: bool) -> list[dict]:
    deadline = None if cfg.time_budget is None else time.monotonic() + cfg.time_budget
    units = [(i, m) for i, t in enumerate(cfg.tasks) for m in (cfg.margins if t.code else [0])]
    if jobs <= 1 or len(units) <= 1:
        return [run_task(cfg, i, m, deadline, timings) for i, m in units]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(run_task, cfg, i, m, deadline, timings) for i, m in units]
        return [f.result() for f in futures]


def _csv_text(results: list[dict], scale: float) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in results:
        if r["series"] is not None:
            w.writerows(r["series"].rows(scale))
    return buf.getvalue()


def _report(cfg: RunConfiguration, results: list[dict], scale: float, status: str) -> dict:
    tasks = []
    for r in results:
        entry = {k: v for k, v in r.items() if k != "series"}
        entry["result"] = None if r["series"] is None else r["series"].to_dict(scale)
        tasks.append(entry)
    return {
        "name": cfg.raw.get("name", ""),
        "status": status,
        "units": "bits" if scale != 1.0 else "nats",
        "mode": cfg.mode,
        "seed": cfg.seed,
        "samples": cfg.samples if cfg.mode == "mc" else None,
        "tasks": tasks,
        "errors": [e for r in results for e in r["errors"]],
    }


def _write(out: Path, csv_name: str, csv_text: str, report_name: str, report: dict) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / csv_name).write_text(csv_text)
    (out / report_name).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")


def cmd_compute(cfg: RunConfiguration, out: Path, jobs: int = 1, bits: bool = False,
                timings: bool = False) -> int:
    if not cfg.tasks:
        raise ValidationError("configuration lists no tasks")
    cfg.resolve_all()
    results = _run_all(cfg, jobs, timings)
    scale = 1 / math.log(2) if bits else 1.0
    statuses = {r["status"] for r in results}
    status = "budget" if "budget" in statuses else "error" if "error" in statuses else "ok"
    _write(out, cfg.csv_name, _csv_text(results, scale), cfg.report_name,
           _report(cfg, results, scale, status))
    for e in (e for r in results for e in r["errors"]):
        log.warning(e)
    if status == "budget":
        return EXIT_BUDGET
    if status == "error":
        return EXIT_INVALID
    return EXIT_OK


def cmd_verify(cfg: RunConfiguration, out: Path, timings: bool = False) -> int:
    report = verify_suite(cfg)
    out.mkdir(parents=True, exist_ok=True)
    (out / "verify_report.json").write_text(json.dumps(report.as_dict(timings), indent=2) + "\n")
    for c in report.checks:
        dev = "" if c.deviation is None else f" dev={c.deviation:.3e} tol={c.tolerance:.1e}"
        print(f"{c.status.upper():8s} {c.name}{dev} {c.message}".rstrip())
    counts = report.counts()
    print(" ".join(f"{k}={v}" for k, v in counts.items()))
    return EXIT_OK if report.ok else EXIT_VERIFY


def sweep_config(raw: dict, param: str, value: str) -> dict:
    """Copy of ``raw`` with ``param`` set to ``value`` for every task."""
    raw = copy.deepcopy(raw)
    if param == "n":
        for t in raw.get("tasks", []):
            t["n"] = [int(value)]
    elif param == "V":
        raw["margins"] = [int(value)]
    elif param == "samples":
        raw["samples"] = int(value)
    elif param == "coeffs":
        for t in raw.get("tasks", []):
            t["coeffs"] = value
    else:
        raise ValidationError(f"cannot sweep {param!r}; choose from {', '.join(SWEEP_PARAMS)}")
    return raw


def cmd_sweep(raw: dict, param: str, values: list[str], out: Path, jobs: int = 1,
              bits: bool = False, timings: bool = False) -> int:
    """One result set per value under ``out/<param>=<value>``; all share the run seed."""
    configs = [(v, RunConfiguration.from_dict(sweep_config(raw, param, v))) for v in values]
    for _, cfg in configs:
        cfg.resolve_all()
    code, index = EXIT_OK, []
    for v, cfg in configs:
        sub = out / f"{param}={v}"
        rc = cmd_compute(cfg, sub, jobs, bits, timings)
        index.append({"value": v, "dir": sub.name, "exit": rc})
        code = max(code, rc)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.json").write_text(json.dumps({"parameter": param, "runs": index}, indent=2) + "\n")
    return code


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="intricacy", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="run configuration (JSON)")
    common.add_argument("--out", help="output directory (overrides the configuration)")
    common.add_argument("--mode", choices=("exact", "mc"))
    common.add_argument("--samples", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--budget-nodes", type=int)
    common.add_argument("--bits", action="store_true", help="report values in bits instead of nats")
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--timings", action="store_true",
                        help="fill the seconds column (outputs are then not byte-reproducible)")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("compute", parents=[common], help="evaluate the configured tasks")
    sub.add_parser("verify", parents=[common], help="run the invariant suite")
    sw = sub.add_parser("sweep", parents=[common], help="repeat compute over parameter values")
    sw.add_argument("--param", required=True, choices=SWEEP_PARAMS)
    sw.add_argument("--values", required=True, help="comma-separated values")
    return p


def _overrides(raw: dict, args) -> dict:
    raw = copy.deepcopy(raw)
    if args.mode:
        raw["mode"] = args.mode
    if args.samples is not None:
        raw["samples"] = args.samples
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.budget_nodes is not None:
        raw.setdefault("budgets", {})["nodes"] = args.budget_nodes
    return raw


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        try:
            raw = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read configuration {args.config}: {exc}") from exc
        raw = _overrides(raw, args)
        if args.command == "sweep":
            out = Path(args.out or raw.get("output", {}).get("dir", "out"))
            return cmd_sweep(raw, args.param, args.values.split(","), out, args.jobs, args.bits,
                             args.timings)
        cfg = RunConfiguration.from_dict(raw)
        out = Path(args.out or cfg.out_dir)
        if args.command == "verify":
            return cmd_verify(cfg, out, args.timings)
        return cmd_compute(cfg, out, args.jobs, args.bits, args.timings)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
