"""Batch command line front end.

Usage::

    poisson-stein {bound,simulate,rate-study,stein-check,validate} --config run.json
                  [--output DIR] [--threads K] [--seed S]

Exit status is 0 on success, 2 for an invalid configuration and 3 for a
numerical failure. Every run writes ``report.json``; ``rate-study`` and
``stein-check`` also write ``table.csv``.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import inspect
import json
import math
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .bounds import dejong_bound, finite_expansion_bound, sample_fourth_moment, theorem31_terms_mc
from .diagnostics import kolmogorov_distance
from .errors import DensityTooPeakedError, MethodUnsupportedError, NumericalDomainError
from .measure_space import IntegrationSpec
from .scenarios import SCENARIO_BUILDERS, run_rate_study, simulate
from .stein import SUP_BOUND, SteinFunction, increment_margin, stein_derivative, stein_residual, stein_solution

COMMANDS = ("bound", "simulate", "rate-study", "stein-check")
EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3
_SPEC_FIELDS = ("method", "nodes", "panels", "samples", "seed", "tolerance", "max_tensor_dim")


class ConfigError(Exception):
    """Raised with the list of violations of a run configuration."""

    def __init__(self, problems: list[str]):
        super().__init__("\n".join(problems))
        self.problems = problems


def _line_of(text: str, key: str) -> int:
    needle = f'"{key}"'
    for i, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return i
    return 1


def load_config(path: str) -> tuple[dict, str]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError([f"{path}:0: cannot read configuration ({exc.strerror})"]) from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}:{exc.lineno}: invalid JSON ({exc.msg})"]) from exc
    if not isinstance(cfg, dict):
        raise ConfigError([f"{path}:1: top level must be a JSON object"])
    return cfg, text


def validate(cfg: dict, text: str = "", path: str = "<config>", command: Optional[str] = None) -> list[str]:
    """Schema violations of a run configuration, each prefixed ``path:line:``."""
    problems = []

    def bad(key: str, msg: str) -> None:
        problems.append(f"{path}:{_line_of(text, key)}: {msg}")

    cmd = cfg.get("command", command)
    if cmd is None:
        bad("command", "missing field 'command'")
    elif cmd not in COMMANDS:
        bad("command", f"field 'command' must be one of {', '.join(COMMANDS)}; got {cmd!r}")
    elif command is not None and cmd != command:
        bad("command", f"field 'command' is {cmd!r} but the '{command}' subcommand was invoked")
    seed = cfg.get("seed")
    if seed is None:
        bad("seed", "missing field 'seed' (wall-clock seeding is not supported)")
    elif not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        bad("seed", "field 'seed' must be a nonnegative integer")
    if cmd in ("bound", "simulate", "rate-study"):
        scen = cfg.get("scenario")
        if not isinstance(scen, dict) or "name" not in scen:
            bad("scenario", "field 'scenario' must be an object with a 'name'")
        elif scen["name"] not in SCENARIO_BUILDERS:
            bad("name", f"unknown scenario {scen['name']!r}; known scenarios: {', '.join(sorted(SCENARIO_BUILDERS))}")
        else:
            params = scen.get("params", {})
            if not isinstance(params, dict):
                bad("params", "field 'scenario.params' must be an object")
            else:
                allowed = set(inspect.signature(SCENARIO_BUILDERS[scen["name"]]).parameters) - {"kwargs", "spec"}
                if scen["name"] == "ou_levy":
                    allowed |= {"lam", "T", "nu", "truncation_tol", "h", "variance"}
                for key in params:
                    if key not in allowed:
                        bad(key, f"unknown parameter {key!r} for scenario {scen['name']!r}; "
                                 f"allowed: {', '.join(sorted(allowed))}")
    if cmd in ("simulate", "rate-study") or (cmd == "bound" and cfg.get("bound", {}).get("theorem31")):
        reps = cfg.get("reps")
        if not isinstance(reps, int) or isinstance(reps, bool) or reps < 1:
            bad("reps", f"field 'reps' must be a positive integer; got {reps!r}")
    elif "reps" in cfg and (not isinstance(cfg["reps"], int) or cfg["reps"] < 1):
        bad("reps", f"field 'reps' must be a positive integer; got {cfg['reps']!r}")
    if cmd == "rate-study":
        rs = cfg.get("rate_study")
        if not isinstance(rs, dict):
            bad("rate_study", "field 'rate_study' must be an object with 'scales'")
        else:
            scales = rs.get("scales")
            if not isinstance(scales, list) or len(scales) < 3 or not all(isinstance(s, (int, float)) for s in scales):
                bad("scales", "field 'rate_study.scales' must list at least three numbers")
            elif any(b <= a for a, b in zip(scales, scales[1:])):
                bad("scales", "field 'rate_study.scales' must be strictly increasing")
    integ = cfg.get("integration", {})
    if not isinstance(integ, dict):
        bad("integration", "field 'integration' must be an object")
    else:
        for key in integ:
            if key not in _SPEC_FIELDS:
                bad(key, f"unknown integration field {key!r}; allowed: {', '.join(_SPEC_FIELDS)}")
        try:
            IntegrationSpec(**{k: v for k, v in integ.items() if k in _SPEC_FIELDS})
        except (TypeError, ValueError) as exc:
            bad("integration", f"invalid integration spec: {exc}")
    if cmd == "stein-check":
        st = cfg.get("stein", {})
        step = st.get("step", 1e-3) if isinstance(st, dict) else None
        if not isinstance(st, dict) or not (isinstance(step, (int, float)) and step > 0):
            bad("stein", "field 'stein' must be an object with a positive 'step'")
    return problems


def _spec(cfg: dict) -> Optional[IntegrationSpec]:
    integ = cfg.get("integration")
    return IntegrationSpec(**integ) if integ else None


def _build(cfg: dict, **override):
    scen = cfg["scenario"]
    params = dict(scen.get("params", {}), **override)
    builder = SCENARIO_BUILDERS[scen["name"]]
    spec = _spec(cfg)
    if spec is not None and "spec" in inspect.signature(builder).parameters:
        params["spec"] = spec
    return builder(**params)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def run_bound(cfg: dict, threads: Optional[int]) -> dict:
    scenario = _build(cfg)
    opts = cfg.get("bound", {})
    spec = _spec(cfg) or scenario.spec
    name = cfg["scenario"]["name"]
    if name == "dejong_cosine":
        h = scenario.expansion.terms[0][1].scaled(scenario.normalization.sd)
        report = dejong_bound(h, scenario.control, spec)
    else:
        report = finite_expansion_bound(scenario.expansion, scenario.control, spec)
    out = report.to_dict()
    if opts.get("theorem31"):
        terms = theorem31_terms_mc(scenario.expansion, scenario.control, cfg["reps"], cfg["seed"],
                                   z_samples=int(opts.get("z_samples", 256)), spec=spec, threads=threads)
        out["term_estimates"] = terms.to_dict()
    return out


def run_simulate(cfg: dict, threads: Optional[int]) -> dict:
    scenario = _build(cfg)
    sample = simulate(scenario, cfg["reps"], cfg["seed"], threads)
    res = kolmogorov_distance(sample)
    m4, m4_se = sample_fourth_moment(sample.values)
    return {"kolmogorov_distance": res.distance, "dkw_band_99": res.dkw_band, "mean": float(sample.values.mean()),
            "variance": float(sample.values.var(ddof=1)), "fourth_moment": m4, "fourth_moment_stderr": m4_se,
            "normalization": {"mean": scenario.normalization.mean, "sd": scenario.normalization.sd},
            "scenario_label": scenario.label}


def run_rate(cfg: dict, threads: Optional[int]):
    rs = cfg["rate_study"]
    scen = cfg["scenario"]
    param = rs.get("scale_param", "n" if scen["name"] != "ou_levy" else "T")
    fixed = dict(scen.get("params", {}))
    fixed.pop(param, None)
    spec = _spec(cfg)
    builder = SCENARIO_BUILDERS[scen["name"]]
    if spec is not None and "spec" in inspect.signature(builder).parameters:
        fixed["spec"] = spec
    table = run_rate_study(builder, rs["scales"], cfg["reps"], cfg["seed"], scale_param=param,
                           fixed=fixed, threads=threads, bootstrap=int(rs.get("bootstrap", 100)))
    report = {"scale_param": param, "rows": [r._asdict() for r in table.rows],
              "slope": table.slope, "slope_stderr": table.slope_stderr}
    return report, table.to_csv()


def run_stein(cfg: dict, seed: int):
    st = cfg.get("stein", {})
    xs = st.get("x", [-2.0, -0.5, 0.0, 0.5, 2.0])
    step = float(st.get("step", 1e-3))
    lo, hi = float(st.get("w_min", -8.0)), float(st.get("w_max", 8.0))
    w = np.linspace(lo, hi, int(round((hi - lo) / step)) + 1)
    rows = []
    summary = {"x": xs, "w_min": lo, "w_max": hi, "step": step}
    worst = {"residual": 0.0, "margin_upper": math.inf, "margin_deriv": math.inf, "min_f": math.inf}
    for x in xs:
        s = SteinFunction(float(x))
        f, fp, res = stein_solution(s, w), stein_derivative(s, w), stein_residual(s, w)
        mu, md = SUP_BOUND - f, 1.0 - np.abs(fp)
        worst["residual"] = max(worst["residual"], float(np.abs(res).max()))
        worst["margin_upper"] = min(worst["margin_upper"], float(mu.min()))
        worst["margin_deriv"] = min(worst["margin_deriv"], float(md.min()))
        worst["min_f"] = min(worst["min_f"], float(f.min()))
        rows.append(np.column_stack([w, np.full_like(w, x), f, fp, res, mu, md]))
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x57E1]))
    triples = int(st.get("triples", 10_000))
    tw, tu, tv = rng.uniform(-8, 8, triples), rng.uniform(-2, 2, triples), rng.uniform(-2, 2, triples)
    tx = rng.choice(np.asarray(xs, dtype=float), triples)
    inc = min(float(np.min(increment_margin(SteinFunction(x), tw[tx == x], tu[tx == x], tv[tx == x])))
              for x in np.unique(tx))
    summary.update(worst, increment_margin=inc, triples=triples)
    buf = []
    for block in rows:
        buf.extend(block.tolist())
    return summary, buf


def _write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) for v in row])


def execute(command: str, cfg: dict, output: Path, threads: Optional[int]) -> dict:
    output.mkdir(parents=True, exist_ok=True)
    report = {"command": command, "library_version": __version__, "seed": cfg["seed"],
              "config": cfg}
    if command == "bound":
        report["result"] = run_bound(cfg, threads)
    elif command == "simulate":
        report["result"] = run_simulate(cfg, threads)
    elif command == "rate-study":
        result, table = run_rate(cfg, threads)
        report["result"] = result
        (output / "table.csv").write_text(table)
    elif command == "stein-check":
        summary, rows = run_stein(cfg, cfg["seed"])
        report["result"] = summary
        _write_csv(output / "table.csv", ["w", "x", "f", "fprime", "residual", "margin_upper", "margin_deriv"], rows)
    report["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
    (output / "report.json").write_text(json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n")
    return report


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="poisson-stein", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS + ("validate",))
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--output", default=None, help="output directory (default: config 'output' or '.')")
    p.add_argument("--threads", type=int, default=None, help="worker threads (env POISSON_STEIN_THREADS)")
    p.add_argument("--seed", type=int, default=None, help="override the configuration seed")
    return p


def main(argv: Optional[list[str]] = None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg, text = load_config(args.config)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INVALID
    if args.seed is not None:
        cfg["seed"] = args.seed
    command = None if args.command == "validate" else args.command
    problems = validate(cfg, text, args.config, command)
    if args.command == "validate":
        for line in problems:
            print(line)
        return EXIT_INVALID if problems else EXIT_OK
    if problems:
        print("\n".join(problems), file=sys.stderr)
        return EXIT_INVALID
    cfg.setdefault("command", args.command)
    output = Path(args.output or cfg.get("output", "."))
    try:
        execute(args.command, cfg, output, args.threads)
    except (NumericalDomainError, MethodUnsupportedError, DensityTooPeakedError, FloatingPointError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
