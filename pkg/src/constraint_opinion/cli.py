"""Command-line front end: ``com run | analyze | measure | verify``.

Exit codes: 0 converged (or success), 1 error, 2 cycle, 3 step budget
exhausted.  ``COM_LOG`` sets the log level (default WARNING).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import sys
import tempfile
import time
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from . import constraints as cs
from . import dynamics as dyn
from . import metrics as mt
from .dsl import Scenario, ScenarioSyntaxError, load, roundtrip
from .dsl.render import constraint_text
from .errors import OpinionModelError

log = logging.getLogger("constraint_opinion.cli")

EXIT_OK, EXIT_ERROR, EXIT_CYCLE, EXIT_BUDGET = 0, 1, 2, 3
_VERDICT_EXIT = {"converged": EXIT_OK, "cycle": EXIT_CYCLE, "budget_exhausted": EXIT_BUDGET}


class UsageError(Exception):
    pass


# --- output helpers -----------------------------------------------------------

def write_atomic(path: Path, text: str) -> None:
    """Write through a temporary file in the same directory, then rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return x
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if hasattr(x, "item"):  # numpy scalars
        return _jsonable(x.item())
    return x


def _fmt_distance(d: float) -> str:
    return "inf" if math.isinf(d) else repr(float(d))


# --- loading --------------------------------------------------------------------

def load_scenario(path: str) -> tuple[Scenario, str]:
    text = Path(path).read_text(encoding="utf-8")
    model = load(text)
    return model, text


def run_settings(model: Scenario, args) -> dict:
    """Flags override the scenario file."""
    cfg = {
        "max_steps": model.run.max_steps, "tol": model.run.tol,
        "history": model.run.history, "stride": model.run.stride,
    }
    for key in cfg:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    if cfg["max_steps"] < 1 or cfg["tol"] <= 0 or cfg["history"] < 1 or cfg["stride"] < 1:
        raise UsageError("--max-steps, --history and --stride must be >= 1 and --tol > 0")
    return cfg


def _update_name(model: Scenario) -> str:
    return "matrix" if model.update == "matrix" else f"biased({model.update.name})"


# --- matrix properties ---------------------------------------------------------

def matrix_properties(model: Scenario) -> dict:
    M = model.influence
    props = {
        "row_stochastic": dyn.is_row_stochastic(M),
        "strongly_connected": dyn.is_strongly_connected(M),
        "aperiodic": dyn.is_aperiodic(M),
        "period": dyn.period(M),
        "self_loop": dyn.has_self_loop(M),
        "constant": M.is_constant,
    }
    props["consensus_hypotheses"] = bool(
        props["row_stochastic"] and props["strongly_connected"] and props["aperiodic"]
    )
    if not M.is_constant and len(model.domains.value_variables) == 1:
        report = dyn.per_valuation_check(M)
        props["per_valuation"] = {
            "variable": report.variable,
            "passed": report.passed,
            "checks": [
                {"value": c.value, "row_stochastic": c.row_stochastic,
                 "strongly_connected": c.strongly_connected, "aperiodic": c.aperiodic,
                 "bad_rows": list(c.bad_rows)}
                for c in report.checks
            ],
        }
    return props


# --- distances ---------------------------------------------------------------

def _levels(model: Scenario, args) -> list:
    sr = model.semiring
    raw = getattr(args, "levels", None)
    if raw:
        out = []
        for text in raw:
            if sr.kind == "boolean":
                if text not in ("true", "false"):
                    raise UsageError(f"level {text!r}: use true or false in the boolean semiring")
                out.append(text == "true")
            else:
                try:
                    out.append(sr.coerce(float(text)) if sr.kind == "real" else sr.coerce(_fraction(text)))
                except ValueError as exc:
                    raise UsageError(f"level {text!r}: {exc}") from None
        return out
    return list(model.metric.levels)


def _fraction(text: str):
    return Fraction(text)


def _check_metric(model: Scenario, mode: str) -> None:
    if mode == "geq" and not model.semiring.is_ordered:
        raise UsageError(f"mode geq needs an ordered semiring; {model.semiring.name!r} is not")


def _distance_rows(model: Scenario, state, s, mode: str):
    """(component, i, j, distance) for every pair; component is '' without a tag."""
    cfg = model.metric.config
    fn = mt.delta_s if mode == "exact" else mt.delta_geq_s
    tag = model.domains.tag
    n = len(state)
    for i in range(n):
        for j in range(i + 1, n):
            if tag is None:
                yield "", i, j, fn(state[i], state[j], s, cfg)
            else:
                for agent, d in mt.per_agent(fn, state[i], state[j], s, cfg).items():
                    yield agent, i, j, d


def polarization_of(model: Scenario, state, s, mode: str) -> float:
    return max((d for *_, d in _distance_rows(model, state, s, mode)), default=0.0)


# --- commands ------------------------------------------------------------------

def _trace_rows(model: Scenario, trace: dyn.Trace):
    variables = model.domains.variables
    sr = model.semiring
    for t, state in zip(trace.steps, trace.states):
        for agent, c in zip(model.agents, state):
            for key, value in c.items():
                binding = dict(zip(c.support, key))
                yield [t, agent, *(binding.get(v, "") for v in variables), sr.format(value)]


def _state_json(model: Scenario, state) -> list:
    sr = model.semiring
    return [
        {
            "agent": agent,
            "support": list(c.support),
            "text": constraint_text(c),
            "entries": [[*key, sr.format(v)] for key, v in c.items()],
        }
        for agent, c in zip(model.agents, state)
    ]


def _config_echo(model: Scenario, settings: dict, text: str, levels, mode) -> dict:
    return {
        "semiring": model.semiring.name,
        "exact": model.exact,
        "update": _update_name(model),
        **settings,
        "metric": {"norm": model.metric.config.norm, "levels": [model.semiring.format(s) for s in levels],
                   "mode": mode},
        "scenario_sha256": hashlib.sha256(text.encode("utf-8")).hexdigest(),
    }


def cmd_run(args) -> int:
    model, text = load_scenario(args.scenario)
    settings = run_settings(model, args)
    mode = model.metric.mode
    levels = list(model.metric.levels)
    out = Path(args.out)
    start = time.perf_counter()
    trace = dyn.run(model.influence, model.opinions, update=model.update, **settings)
    elapsed = time.perf_counter() - start
    consensus = dyn.consensus_check(trace.final, settings["tol"])
    series = []
    if levels and (mode == "exact" or model.semiring.is_ordered):
        for t, state in zip(trace.steps, trace.states):
            series.append({"t": t, **{model.semiring.format(s): polarization_of(model, state, s, mode)
                                      for s in levels}})
    header = ["t", "agent", *model.domains.variables, "value"]
    write_atomic(out / "trace.csv", _csv_text(header, _trace_rows(model, trace)))
    report = {
        "scenario": str(args.scenario),
        "title": model.title,
        "verdict": trace.verdict.as_dict(),
        "steps": trace.final_step,
        "recorded_steps": trace.steps,
        "final_state": _state_json(model, trace.final),
        "consensus": None if consensus is None else constraint_text(consensus),
        "polarization": series,
        "matrix": matrix_properties(model),
        "wall_clock_seconds": round(elapsed, 6),
        "config": _config_echo(model, settings, text, levels, mode),
    }
    write_atomic(out / "report.json", json.dumps(_jsonable(report), indent=2) + "\n")
    v = trace.verdict
    detail = f" at step {v.step}" if v.kind == "converged" else \
        f" entered at step {v.step}, period {v.period}" if v.kind == "cycle" else f" after {trace.final_step} steps"
    print(f"{v.kind}{detail}")
    if consensus is not None:
        print(f"consensus: {constraint_text(consensus)}")
    print(f"wrote {out / 'trace.csv'} and {out / 'report.json'}")
    return _VERDICT_EXIT[v.kind]


def _yn(v) -> str:
    return "n/a" if v is None else ("yes" if v else "no")


def cmd_analyze(args) -> int:
    model, _ = load_scenario(args.scenario)
    props = matrix_properties(model)
    print(f"agents: {model.n}, semiring: {model.semiring.name}, update: {_update_name(model)}")
    print(f"row stochastic:      {_yn(props['row_stochastic'])}")
    print(f"strongly connected:  {_yn(props['strongly_connected'])}")
    print(f"aperiodic:           {_yn(props['aperiodic'])}")
    period = props["period"]
    print(f"period:              {'n/a' if period is None else period}")
    print(f"self-loop:           {_yn(props['self_loop'])}")
    print(f"consensus hypotheses hold: {_yn(props['consensus_hypotheses'])}")
    pv = props.get("per_valuation")
    if pv is not None:
        print(f"per-valuation check on {pv['variable']}: {'pass' if pv['passed'] else 'fail'}")
        for c in pv["checks"]:
            print(f"  {pv['variable']} = {c['value']}: row stochastic {_yn(c['row_stochastic'])}, "
                  f"strongly connected {_yn(c['strongly_connected'])}, aperiodic {_yn(c['aperiodic'])}")
    return EXIT_OK


def cmd_measure(args) -> int:
    model, _ = load_scenario(args.scenario)
    mode = args.mode or model.metric.mode
    _check_metric(model, mode)
    levels = _levels(model, args)
    if not levels:
        raise UsageError("no preference levels: pass --levels or set metric.levels in the scenario")
    settings = run_settings(model, args)
    trace = dyn.run(model.influence, model.opinions, update=model.update, **settings)
    sr = model.semiring
    tagged = model.domains.tag is not None
    dist_rows, pol_rows = [], []
    for t, state in zip(trace.steps, trace.states):
        for s in levels:
            worst = 0.0
            for comp, i, j, d in _distance_rows(model, state, s, mode):
                row = [t, sr.format(s), model.agents[i], model.agents[j], _fmt_distance(d)]
                dist_rows.append(row + [comp] if tagged else row)
                worst = max(worst, d)
            pol_rows.append([t, sr.format(s), _fmt_distance(worst)])
    out = Path(args.out)
    header = ["t", "s", "i", "j", "value"] + (["component"] if tagged else [])
    write_atomic(out / "distances.csv", _csv_text(header, dist_rows))
    write_atomic(out / "polarization.csv", _csv_text(["t", "s", "polarization"], pol_rows))
    print(f"{trace.verdict.kind}; {len(trace.steps)} recorded states, {len(levels)} level(s), mode {mode}")
    print(f"wrote {out / 'distances.csv'} and {out / 'polarization.csv'}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_checks

    only = None
    if args.only:
        try:
            only = {int(x) for x in args.only.split(",")}
        except ValueError:
            raise UsageError("--only takes comma-separated criterion numbers") from None
    results = run_checks(seed=args.seed, only=only)
    width = max((len(r.name) for r in results), default=10)
    for r in results:
        print(f"{r.criterion:>3}  {r.name:<{width}}  {'PASS' if r.passed else 'FAIL'}  {r.detail}")
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_ERROR


def cmd_render(args) -> int:
    model, _ = load_scenario(args.scenario)
    sys.stdout.write(roundtrip(model))
    return EXIT_OK


# --- entry point -------------------------------------------------------------

def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-steps", type=int, dest="max_steps", help="step budget (overrides the file)")
    p.add_argument("--tol", type=float, help="convergence tolerance (overrides the file)")
    p.add_argument("--history", type=int, help="states kept for cycle detection")
    p.add_argument("--stride", type=int, help="record every k-th state")
    p.add_argument("--out", default=".", help="output directory (default: current)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="com", description="Constraint opinion models.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="iterate a scenario and write trace.csv and report.json")
    p.add_argument("scenario")
    _add_run_flags(p)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("analyze", help="report influence-matrix properties without running")
    p.add_argument("scenario")
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("measure", help="write pairwise distances and polarization over time")
    p.add_argument("scenario")
    p.add_argument("--levels", nargs="+", help="preference levels s (default: metric.levels)")
    p.add_argument("--mode", choices=("exact", "geq"), help="solutions at s or at least s")
    _add_run_flags(p)
    p.set_defaults(fn=cmd_measure)

    p = sub.add_parser("verify", help="run the reference checks and print a pass/fail table")
    p.add_argument("--seed", type=int, default=0, help="seed for the randomized checks")
    p.add_argument("--only", help="comma-separated check numbers")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("render", help="print the canonical text of a scenario")
    p.add_argument("scenario")
    p.set_defaults(fn=cmd_render)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    level = logging.getLevelName(os.environ.get("COM_LOG", "WARNING").upper())
    logging.basicConfig(level=level if isinstance(level, int) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ScenarioSyntaxError as exc:
        print(f"{args.scenario}: syntax error: {exc}", file=sys.stderr)
    except (OpinionModelError, UsageError, OSError, ValueError, TypeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
