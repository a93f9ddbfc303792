"""Command-line front end.

Subcommands: generate, solve, experiment, bounds, nsp, reproduce. Config
files are JSON; flags override file values. All data-file outputs are
deterministic under fixed seeds; per-cell wall times are written as 0.0
unless --timings is passed, so repeated runs produce byte-identical
files. Exit codes: 0 success, 1 validation error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime
import json
import math
import os
import sys

import numpy as np

from .datagen import (
    CorruptionSpec,
    build_dataset,
    dataset_from_csv,
    dataset_to_csv,
    make_polynomial,
)
from .dictionary import AugmentedMatrix, build_dictionary, normalize_columns
from .experiments import (
    ExperimentReport,
    SweepCell,
    TrialConfig,
    plot_data_text,
    preset_example,
    report_to_csv,
    run_sweep,
)
from .solver import SolverParams, douglas_rachford, solution_to_json
from .theory import (
    REGIMES,
    KappaSpec,
    check_kappa_condition,
    kappa_value,
    min_samples_kappa,
    nsp_check,
)

__all__ = ["main", "parse_and_dispatch"]

# constants assumed per regime when no --param overrides them
_DEFAULT_CONSTANTS = {
    "iid": {"C2": 1.0, "C3": 1.0},
    "alpha_mixing": {"alpha_bar": 1.0, "beta": 1.0, "c_alpha": 1.0, "C0": 1.0, "C2": 1.0},
    "c_mixing": {"sigma2": 1.0, "B": 1.0, "beta": 1.0},
    "uniformly_ergodic": {"lambda_doeblin": 0.5, "k0": 1.0, "B": 1.0},
}


class ValidationError(Exception):
    """Bad flags, malformed files, or inconsistent configuration."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def _read_text(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc


def _write_text(path: str, text: str):
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise ValidationError(f"cannot write {path}: {exc}") from exc


def _read_json(path: str) -> dict:
    text = _read_text(path)
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON at line {exc.lineno}") from exc
    if not isinstance(obj, dict):
        raise ValidationError(f"{path}: top-level JSON value must be an object")
    return obj


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _require(cfg: dict, key: str, where: str):
    if key not in cfg:
        raise ValidationError(f"{where}: missing required field {key!r}")
    return cfg[key]


def _truth_from_json(obj: dict, where: str):
    terms = _require(obj, "terms", where)
    dim = int(_require(obj, "dim", where))
    max_degree = int(_require(obj, "max_degree", where))
    try:
        term_map = {tuple(int(e) for e in exps): float(coef) for exps, coef in terms}
        return make_polynomial(term_map, dim, max_degree)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{where}: bad truth specification: {exc}") from exc


def _corruption_from_json(obj: dict, where: str) -> CorruptionSpec:
    try:
        return CorruptionSpec(
            sparsity=int(obj.get("sparsity", 0)),
            magnitude=float(obj.get("magnitude", 2.0)),
            target=str(obj.get("target", "outputs")),
        )
    except ValueError as exc:
        raise ValidationError(f"{where}: bad corruption spec: {exc}") from exc


def _solver_from_json(obj: dict, where: str) -> SolverParams:
    allowed = {"gamma", "sigma", "lam", "max_iters", "tol", "support_tau"}
    unknown = set(obj) - allowed
    if unknown:
        raise ValidationError(f"{where}: unknown solver fields {sorted(unknown)}")
    kwargs = {k: (int(v) if k == "max_iters" else float(v)) for k, v in obj.items()}
    try:
        return SolverParams(**kwargs)
    except ValueError as exc:
        raise ValidationError(f"{where}: bad solver params: {exc}") from exc


def _override_solver(params: SolverParams, args) -> SolverParams:
    changes = {}
    for flag, field in (
        ("lam", "lam"),
        ("gamma", "gamma"),
        ("sigma", "sigma"),
        ("tol", "tol"),
        ("max_iters", "max_iters"),
        ("support_tau", "support_tau"),
    ):
        v = getattr(args, flag, None)
        if v is not None:
            changes[field] = v
    if not changes:
        return params
    try:
        return dataclasses.replace(params, **changes)
    except ValueError as exc:
        raise ValidationError(f"bad solver override: {exc}") from exc


def _threads(args) -> int:
    if getattr(args, "threads", None) is not None:
        n = args.threads
    else:
        env = os.environ.get("ROBUSTFIT_THREADS")
        if env is not None:
            try:
                n = int(env)
            except ValueError as exc:
                raise ValidationError(
                    f"ROBUSTFIT_THREADS must be an integer, got {env!r}"
                ) from exc
        else:
            n = os.cpu_count() or 1
    if n < 1:
        raise ValidationError(f"threads must be >= 1, got {n}")
    return n


def _strip_timings(report: ExperimentReport) -> ExperimentReport:
    cells = tuple(dataclasses.replace(c, wall_ms=0.0) for c in report.cells)
    return ExperimentReport(cells=cells)


def _cmd_generate(args) -> int:
    cfg = _read_json(args.config)
    where = args.config
    truth = _truth_from_json(_require(cfg, "truth", where), where)
    m = int(args.m if args.m is not None else _require(cfg, "m", where))
    generator = args.generator or cfg.get("generator", "alpha_mixing")
    corr_obj = dict(cfg.get("corruption", {}))
    if args.sparsity is not None:
        corr_obj["sparsity"] = args.sparsity
    if args.magnitude is not None:
        corr_obj["magnitude"] = args.magnitude
    if args.target is not None:
        corr_obj["target"] = args.target
    corruption = _corruption_from_json(corr_obj, where)
    epsilon = args.epsilon if args.epsilon is not None else float(cfg.get("mismatch_epsilon", 0.0))
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    try:
        ds = build_dataset(
            truth, m, generator, corruption, seed=seed, mismatch_epsilon=epsilon
        )
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    _write_text(args.out, dataset_to_csv(ds))
    return 0


def _cmd_solve(args) -> int:
    cfg = _read_json(args.config)
    where = args.config
    p = int(_require(cfg, "p", where))
    normalize = bool(cfg.get("normalize", False))
    if args.normalize is not None:
        normalize = args.normalize == "true"
    params = _solver_from_json(dict(cfg.get("solver", {})), where)
    params = _override_solver(params, args)
    try:
        ds = dataset_from_csv(_read_text(args.data))
    except ValueError as exc:
        raise ValidationError(f"{args.data}: {exc}") from exc
    try:
        phi = build_dictionary(ds.U, p)
        if normalize:
            phi = normalize_columns(phi)
        aug = AugmentedMatrix(phi, params.lam)
        sol = douglas_rachford(aug, ds.y, params)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    text = solution_to_json(sol)
    if args.out:
        _write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def _base_config_from_json(cfg: dict, where: str) -> TrialConfig:
    truth = _truth_from_json(_require(cfg, "truth", where), where)
    corruption = _corruption_from_json(dict(cfg.get("corruption", {})), where)
    solver = _solver_from_json(dict(cfg.get("solver", {})), where)
    try:
        return TrialConfig(
            d=int(_require(cfg, "d", where)),
            p=int(_require(cfg, "p", where)),
            truth=truth,
            m=int(_require(cfg, "m", where)),
            generator=str(cfg.get("generator", "alpha_mixing")),
            corruption=corruption,
            mismatch_epsilon=float(cfg.get("mismatch_epsilon", 0.0)),
            solver=solver,
            normalize=bool(cfg.get("normalize", False)),
        )
    except ValueError as exc:
        raise ValidationError(f"{where}: {exc}") from exc


def _experiment_plan(cfg: dict, where: str):
    """A config either names a preset or spells out base + axis."""
    if "preset" in cfg:
        n = int(cfg["preset"])
        options = dict(cfg.get("options", {}))
        try:
            return preset_example(n, **options)
        except ValueError as exc:
            raise ValidationError(f"{where}: {exc}") from exc
    axis_obj = _require(cfg, "axis", where)
    name = str(_require(axis_obj, "name", f"{where}:axis"))
    values = _require(axis_obj, "values", f"{where}:axis")
    if not isinstance(values, list) or not values:
        raise ValidationError(f"{where}: axis values must be a non-empty list")
    base = _base_config_from_json(_require(cfg, "base", where), where)
    return base, (name, values)


def _write_report_files(report: ExperimentReport, out: str, timings: bool):
    if not timings:
        report = _strip_timings(report)
    _write_text(out, report_to_csv(report))
    stem = out[:-4] if out.endswith(".csv") else out
    for metric in ("success_joint", "success_c"):
        _write_text(f"{stem}.{metric}.xy", plot_data_text(report, metric))


def _cmd_experiment(args) -> int:
    cfg = _read_json(args.config)
    base, axis = _experiment_plan(cfg, args.config)
    n_trials = args.trials if args.trials is not None else int(cfg.get("n_trials", 100))
    master_seed = args.seed if args.seed is not None else int(cfg.get("master_seed", 0))
    try:
        report = run_sweep(
            base, axis, n_trials=n_trials, master_seed=master_seed, threads=_threads(args)
        )
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    _write_report_files(report, args.out, args.timings)
    return 0


def _parse_constant_overrides(pairs, regime) -> dict:
    params = dict(_DEFAULT_CONSTANTS[regime])
    for pair in pairs or ():
        if "=" not in pair:
            raise ValidationError(f"--param expects KEY=VALUE, got {pair!r}")
        key, _, raw = pair.partition("=")
        if key not in params:
            raise ValidationError(
                f"regime {regime!r} has no constant {key!r}; knows {sorted(params)}"
            )
        try:
            params[key] = float(raw)
        except ValueError as exc:
            raise ValidationError(f"--param {key}: {raw!r} is not a number") from exc
    return params


def _cmd_bounds(args) -> int:
    params = _parse_constant_overrides(args.param, args.regime)
    try:
        spec = KappaSpec(regime=args.regime, params=params)
        m_min = min_samples_kappa(spec, args.delta, args.r)
        out = {
            "regime": args.regime,
            "delta": args.delta,
            "r": args.r,
            "m_min": m_min,
            "kappa_at_m_min": kappa_value(spec, float(m_min) ** (-args.delta), m_min),
            "rhs_at_m_min": 3.0 * args.delta * args.r * math.log(m_min),
        }
        if args.m is not None:
            out["m"] = args.m
            out["condition"] = check_kappa_condition(spec, args.delta, args.r, args.m)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    text = _json_text(out)
    if args.out:
        _write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def _read_matrix_csv(path: str) -> np.ndarray:
    rows = []
    width = None
    for k, line in enumerate(_read_text(path).split("\n"), start=1):
        if not line.strip():
            continue
        try:
            row = [float(v) for v in line.split(",")]
        except ValueError as exc:
            raise ValidationError(f"{path}: line {k}: non-numeric entry") from exc
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ValidationError(
                f"{path}: line {k}: expected {width} columns, got {len(row)}"
            )
        rows.append(row)
    if not rows:
        raise ValidationError(f"{path}: no rows")
    return np.array(rows)


def _cmd_nsp(args) -> int:
    A = _read_matrix_csv(args.matrix)
    try:
        report = nsp_check(A, args.order)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    out = {
        "order_s": report.order_s,
        "alpha_max": report.alpha_max,
        "worst_set": [int(i) for i in report.worst_set],
        "nsp_holds": report.nsp_holds,
        "rho": report.rho if math.isfinite(report.rho) else None,
    }
    text = _json_text(out)
    if args.out:
        _write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


# per preset: (label, option values) for each sweep the full study needs
_REPRODUCE_SWEEPS = {
    1: ("s_theta", (5, 10, 12)),
    2: ("m", (43, 100)),
    3: ("s_theta", (3, 10, 15)),
    4: (None, (None,)),
}


def _cmd_reproduce(args) -> int:
    if args.n not in _REPRODUCE_SWEEPS:
        raise ValidationError("preset number must be 1..4")
    stamp = datetime.datetime.now().strftime("%Y%m%d-%H%M%S")
    out_dir = os.path.join(args.dir, f"reproduce-{args.n}-{stamp}")
    # same-second reruns get a numeric suffix instead of failing
    k = 1
    while True:
        try:
            os.makedirs(out_dir, exist_ok=False)
            break
        except FileExistsError:
            k += 1
            out_dir = os.path.join(args.dir, f"reproduce-{args.n}-{stamp}-{k}")
        except OSError as exc:
            raise ValidationError(f"cannot create {out_dir}: {exc}") from exc
    opt_name, values = _REPRODUCE_SWEEPS[args.n]
    threads = _threads(args)
    for v in values:
        options = {} if opt_name is None else {opt_name: v}
        base, axis = preset_example(args.n, **options)
        report = run_sweep(
            base, axis, n_trials=args.trials, master_seed=args.seed, threads=threads
        )
        suffix = "" if opt_name is None else f"_{opt_name}{v}"
        out = os.path.join(out_dir, f"report{suffix}.csv")
        _write_report_files(report, out, args.timings)
    sys.stdout.write(out_dir + "\n")
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="robustfit", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    g = sub.add_parser("generate", help="write a dataset CSV from a JSON config")
    g.add_argument("--config", required=True, help="JSON file with truth/m/generator/corruption/seed")
    g.add_argument("--out", required=True, help="output dataset CSV path")
    g.add_argument("--m", type=int, help="override sample count")
    g.add_argument("--generator", choices=("iid", "alpha_mixing", "markov"), help="override data generator")
    g.add_argument("--seed", type=int, help="override seed")
    g.add_argument("--sparsity", type=int, help="override corruption row count")
    g.add_argument("--magnitude", type=float, help="override corruption magnitude H")
    g.add_argument("--target", choices=("inputs", "outputs"), help="override corruption target")
    g.add_argument("--epsilon", type=float, help="override dense mismatch amplitude")
    g.set_defaults(fn=_cmd_generate)

    s = sub.add_parser("solve", help="recover coefficients from a dataset CSV")
    s.add_argument("--data", required=True, help="dataset CSV path")
    s.add_argument("--config", required=True, help="JSON file with p/normalize/solver")
    s.add_argument("--out", help="solution JSON path (default: stdout)")
    s.add_argument("--lam", type=float, help="override outlier weight lambda")
    s.add_argument("--gamma", type=float, help="override prox step")
    s.add_argument("--sigma", type=float, help="override residual ball radius")
    s.add_argument("--tol", type=float, help="override stopping tolerance")
    s.add_argument("--max-iters", dest="max_iters", type=int, help="override iteration cap")
    s.add_argument("--support-tau", dest="support_tau", type=float, help="override support threshold")
    s.add_argument("--normalize", choices=("true", "false"), help="override column normalization")
    s.set_defaults(fn=_cmd_solve)

    e = sub.add_parser("experiment", help="run a sweep and write report CSV + plot data")
    e.add_argument("--config", required=True, help="JSON file: {preset, options} or {base, axis}")
    e.add_argument("--out", required=True, help="report CSV path; plot .xy files share its stem")
    e.add_argument("--trials", type=int, help="override trials per cell")
    e.add_argument("--seed", type=int, help="override master seed")
    e.add_argument("--threads", type=int, help="worker threads (default: ROBUSTFIT_THREADS or cpu count)")
    e.add_argument("--timings", action="store_true", help="write real wall_ms (breaks byte determinism)")
    e.set_defaults(fn=_cmd_experiment)

    b = sub.add_parser("bounds", help="evaluate the sample-size condition, write JSON")
    b.add_argument("--regime", required=True, choices=REGIMES, help="dependence regime")
    b.add_argument("--delta", required=True, type=float, help="rate exponent in (0, 1/2)")
    b.add_argument("--r", required=True, type=int, help="dictionary column count")
    b.add_argument("--m", type=int, help="also check the condition at this m")
    b.add_argument("--param", action="append", help="override a regime constant, KEY=VALUE (repeatable)")
    b.add_argument("--out", help="output JSON path (default: stdout)")
    b.set_defaults(fn=_cmd_bounds)

    n = sub.add_parser("nsp", help="certify the null space property of a matrix CSV")
    n.add_argument("--matrix", required=True, help="dense matrix CSV (numeric rows, no header)")
    n.add_argument("--order", required=True, type=int, help="support size s to certify")
    n.add_argument("--out", help="output JSON path (default: stdout)")
    n.set_defaults(fn=_cmd_nsp)

    r = sub.add_parser("reproduce", help="run one study preset end-to-end into a timestamped directory")
    r.add_argument("n", type=int, help="preset number 1..4")
    r.add_argument("--trials", type=int, default=100, help="trials per cell (default 100)")
    r.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    r.add_argument("--threads", type=int, help="worker threads (default: ROBUSTFIT_THREADS or cpu count)")
    r.add_argument("--dir", default=".", help="parent directory for the output (default .)")
    r.add_argument("--timings", action="store_true", help="write real wall_ms (breaks byte determinism)")
    r.set_defaults(fn=_cmd_reproduce)
    return parser


def parse_and_dispatch(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:
        # argparse --help exits 0 through here
        return int(exc.code or 0)
    except Exception as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(parse_and_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
