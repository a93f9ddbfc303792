"""Monte Carlo harness: trial pipeline, sweeps, presets, and report files.

A trial generates one dataset, solves it, and scores support recovery.
A sweep repeats trials along one named axis and aggregates rates per
cell. Seeds are derived from the master seed and (cell, trial) indices
so reports are reproducible regardless of thread count or execution
order.
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import math
import time
from dataclasses import dataclass

import numpy as np

from .datagen import (
    CorruptionSpec,
    GroundTruthPolynomial,
    build_dataset,
    coefficient_vector,
    make_polynomial,
)
from .dictionary import AugmentedMatrix, build_dictionary, normalize_columns
from .solver import SolverParams, douglas_rachford

__all__ = [
    "TrialConfig",
    "TrialResult",
    "SweepCell",
    "ExperimentReport",
    "run_trial",
    "run_sweep",
    "preset_example",
    "report_to_csv",
    "report_from_csv",
    "plot_data_text",
    "REPORT_COLUMNS",
]

_GENERATORS = ("iid", "alpha_mixing", "markov")


@dataclass(frozen=True)
class TrialConfig:
    """Everything needed to run one recovery trial deterministically."""

    d: int
    p: int
    truth: GroundTruthPolynomial
    m: int
    generator: str = "alpha_mixing"
    corruption: CorruptionSpec = CorruptionSpec(sparsity=5)
    mismatch_epsilon: float = 0.0
    solver: SolverParams = SolverParams()
    normalize: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.d < 1 or self.p < 0:
            raise ValueError("d must be >= 1 and p >= 0")
        if self.truth.dim != self.d:
            raise ValueError(f"truth has dim {self.truth.dim}, config says {self.d}")
        if self.truth.max_degree > self.p:
            raise ValueError(
                f"truth degree {self.truth.max_degree} exceeds dictionary degree {self.p}"
            )
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.generator not in _GENERATORS:
            raise ValueError(f"generator must be one of {_GENERATORS}")
        if self.mismatch_epsilon < 0:
            raise ValueError("mismatch_epsilon must be >= 0")
        if not isinstance(self.seed, (int, np.integer)) or self.seed < 0:
            raise ValueError("seed must be a non-negative integer")


@dataclass(frozen=True)
class TrialResult:
    success_c: bool
    success_e: bool
    success_joint: bool
    l1_error_c: float
    iters: int
    converged: bool


def run_trial(cfg: TrialConfig) -> TrialResult:
    """Generate -> solve -> score one instance.

    Success is exact support match after thresholding: the recovered
    coefficient support against the truth's nonzeros, and the recovered
    outlier support against the injected rows. Solver non-convergence is
    recorded in the result, not raised.
    """
    ds = build_dataset(
        cfg.truth,
        cfg.m,
        cfg.generator,
        cfg.corruption,
        seed=cfg.seed,
        mismatch_epsilon=cfg.mismatch_epsilon,
    )
    phi = build_dictionary(ds.U, cfg.p)
    if cfg.normalize:
        phi = normalize_columns(phi)
    aug = AugmentedMatrix(phi, cfg.solver.lam)
    sol = douglas_rachford(aug, ds.y, cfg.solver)
    c_true = coefficient_vector(cfg.truth, phi.indices)
    true_support = np.nonzero(np.abs(c_true) > 0)[0]
    success_c = sol.c_support.size == true_support.size and bool(
        np.all(sol.c_support == true_support)
    )
    injected = np.asarray(sorted(ds.corruption_support), dtype=int)
    success_e = sol.e_support.size == injected.size and bool(
        np.all(sol.e_support == injected)
    )
    return TrialResult(
        success_c=success_c,
        success_e=success_e,
        success_joint=success_c and success_e,
        l1_error_c=float(np.abs(sol.c - c_true).sum()),
        iters=sol.iters_used,
        converged=sol.converged,
    )


@dataclass(frozen=True)
class SweepCell:
    axis_name: str
    axis_value: float
    n_trials: int
    success_c: float
    success_e: float
    success_joint: float
    mean_l1_error: float
    mean_iters: float
    wall_ms: float


@dataclass(frozen=True)
class ExperimentReport:
    cells: tuple

    def cell(self, axis_value) -> SweepCell:
        for c in self.cells:
            if c.axis_value == axis_value:
                return c
        raise KeyError(f"no cell with axis value {axis_value!r}")


def _apply_axis(base: TrialConfig, name: str, value) -> TrialConfig:
    """Bind one axis value into a config.

    truth_p rebuilds the single-power family f(x) = -1 - 2*x_1^p used by
    the degree-sweep table; the other axes replace plain fields.
    """
    if name == "m":
        return dataclasses.replace(base, m=int(value))
    if name == "s_theta":
        corr = dataclasses.replace(base.corruption, sparsity=int(value))
        return dataclasses.replace(base, corruption=corr)
    if name == "H":
        corr = dataclasses.replace(base.corruption, magnitude=float(value))
        return dataclasses.replace(base, corruption=corr)
    if name == "mismatch_epsilon":
        return dataclasses.replace(base, mismatch_epsilon=float(value))
    if name == "truth_p":
        zero = (0,) * base.d
        power = (int(value),) + (0,) * (base.d - 1)
        truth = make_polynomial({zero: -1.0, power: -2.0}, base.d, base.p)
        return dataclasses.replace(base, truth=truth)
    raise ValueError(f"unknown axis {name!r}")


def _trial_seed(master_seed: int, cell_idx: int, trial_idx: int) -> int:
    ss = np.random.SeedSequence(master_seed, spawn_key=(cell_idx, trial_idx))
    return int(ss.generate_state(1, np.uint64)[0])


def _timed_trial(cfg: TrialConfig):
    t0 = time.perf_counter()
    res = run_trial(cfg)
    return res, (time.perf_counter() - t0) * 1000.0


def run_sweep(
    base: TrialConfig,
    axis,
    n_trials: int = 100,
    master_seed: int = 0,
    threads: int = 1,
) -> ExperimentReport:
    """Run n_trials per axis value and aggregate success rates.

    axis is a (name, values) pair. Child seeds depend only on
    (master_seed, cell index, trial index), and aggregation walks trials
    in index order, so the report is identical for any thread count.
    wall_ms is the summed per-trial compute time of the cell.
    """
    axis_name, axis_values = axis
    axis_values = list(axis_values)
    if not axis_values:
        raise ValueError("axis has no values")
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    if threads < 1:
        raise ValueError("threads must be >= 1")

    configs = []
    for ci, v in enumerate(axis_values):
        cell_cfg = _apply_axis(base, axis_name, v)
        for ti in range(n_trials):
            configs.append(
                dataclasses.replace(cell_cfg, seed=_trial_seed(master_seed, ci, ti))
            )

    if threads == 1:
        outcomes = [_timed_trial(cfg) for cfg in configs]
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(_timed_trial, configs))

    cells = []
    for ci, v in enumerate(axis_values):
        cell = outcomes[ci * n_trials : (ci + 1) * n_trials]
        results = [r for r, _ in cell]
        n_c = sum(r.success_c for r in results)
        n_e = sum(r.success_e for r in results)
        n_j = sum(r.success_joint for r in results)
        errs = [r.l1_error_c for r in results if r.success_c]
        cells.append(
            SweepCell(
                axis_name=axis_name,
                axis_value=v,
                n_trials=n_trials,
                success_c=n_c / n_trials,
                success_e=n_e / n_trials,
                success_joint=n_j / n_trials,
                mean_l1_error=float(np.mean(errs)) if errs else math.nan,
                mean_iters=float(np.mean([r.iters for r in results])),
                wall_ms=float(sum(ms for _, ms in cell)),
            )
        )
    return ExperimentReport(cells=tuple(cells))


_EX1_TRUTH = {(0, 0, 0): 1.0, (1, 1, 1): -2.0, (5, 0, 0): 5.0}
_EX3_TRUTH = {
    (0, 0, 0, 0, 0, 0, 0, 0, 0, 0): -8.5,
    (1, 0, 0, 1, 0, 0, 0, 0, 0, 0): 9.6,
    (0, 1, 0, 0, 1, 0, 0, 0, 0, 0): 0.3,
    (3, 0, 0, 0, 0, 0, 0, 0, 0, 0): 5.7,
    (0, 0, 1, 0, 0, 0, 0, 0, 2, 0): 1.9,
}
_EX4_TRUTH = {
    (0,) * 20: -1.0,
    (2,) + (0,) * 19: 2.0,
    (0, 0, 0, 0, 1) + (0,) * 14 + (1,): 0.5,
}

PRESET1_M_GRID = (30, 40, 45, 50, 55, 63, 70, 84, 100, 126, 150, 200)


def preset_example(n: int, **options):
    """Return (base TrialConfig, axis) for one of the four study setups.

    1: quintic in d=3, sweep m, outliers of weight lam=10; option
       s_theta in {5, 10, 12} (default 5).
    2: single power -1 - 2*x_1^p in a degree-10 dictionary (normalized
       columns), sweep the power; option m in {43, 100} (default 100).
    3: five-term cubic in d=10 at half sampling with lam=2, sweep the
       outlier magnitude H; options s_theta in {3, 10, 15} (default 3)
       and rate in {0.5, 0.175} (default 0.5).
    4: quadratic in d=20 under dense sinusoidal mismatch, sweep epsilon;
       coefficient supports are scored with a coarser threshold sized to
       the mismatch-induced coefficient noise.
    """
    known = {
        1: {"s_theta"},
        2: {"m"},
        3: {"s_theta", "rate"},
        4: set(),
    }
    if n not in known:
        raise ValueError("preset number must be 1..4")
    extra = set(options) - known[n]
    if extra:
        raise ValueError(f"preset {n} does not accept options {sorted(extra)}")

    if n == 1:
        s_theta = int(options.get("s_theta", 5))
        if s_theta not in (5, 10, 12):
            raise ValueError("preset 1 s_theta must be 5, 10, or 12")
        base = TrialConfig(
            d=3,
            p=5,
            truth=make_polynomial(_EX1_TRUTH, 3, 5),
            m=PRESET1_M_GRID[0],
            generator="alpha_mixing",
            corruption=CorruptionSpec(sparsity=s_theta, magnitude=2.0, target="outputs"),
            solver=SolverParams(lam=10.0, max_iters=10000),
        )
        return base, ("m", list(PRESET1_M_GRID))

    if n == 2:
        m = int(options.get("m", 100))
        if m not in (43, 100):
            raise ValueError("preset 2 m must be 43 (15%) or 100 (35%)")
        base = TrialConfig(
            d=3,
            p=10,
            truth=make_polynomial({(0, 0, 0): -1.0, (2, 0, 0): -2.0}, 3, 10),
            m=m,
            generator="alpha_mixing",
            corruption=CorruptionSpec(sparsity=5, magnitude=2.0, target="outputs"),
            solver=SolverParams(lam=1.0),
            normalize=True,
        )
        return base, ("truth_p", [2, 3, 5, 8, 10])

    if n == 3:
        s_theta = int(options.get("s_theta", 3))
        if s_theta not in (3, 10, 15):
            raise ValueError("preset 3 s_theta must be 3, 10, or 15")
        rate = float(options.get("rate", 0.5))
        if rate not in (0.5, 0.175):
            raise ValueError("preset 3 rate must be 0.5 or 0.175")
        m = round(rate * 286)
        base = TrialConfig(
            d=10,
            p=3,
            truth=make_polynomial(_EX3_TRUTH, 10, 3),
            m=m,
            generator="alpha_mixing",
            corruption=CorruptionSpec(sparsity=s_theta, magnitude=0.5, target="outputs"),
            solver=SolverParams(lam=2.0),
        )
        return base, ("H", [0.5, 2.0, 10.0])

    base = TrialConfig(
        d=20,
        p=2,
        truth=make_polynomial(_EX4_TRUTH, 20, 2),
        m=50,
        generator="alpha_mixing",
        corruption=CorruptionSpec(sparsity=3, magnitude=2.0, target="outputs"),
        solver=SolverParams(lam=1.0, max_iters=5000, support_tau=0.01),
    )
    return base, ("mismatch_epsilon", [0.0, 1e-5, 1e-4, 1e-3])


REPORT_COLUMNS = (
    "axis_name",
    "axis_value",
    "n_trials",
    "success_c",
    "success_e",
    "success_joint",
    "mean_l1_error",
    "mean_iters",
    "wall_ms",
)


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return repr(int(x))
    return repr(float(x))


def report_to_csv(report: ExperimentReport) -> str:
    lines = [",".join(REPORT_COLUMNS)]
    for c in report.cells:
        lines.append(
            ",".join(
                _fmt(v)
                for v in (
                    c.axis_name,
                    c.axis_value,
                    c.n_trials,
                    c.success_c,
                    c.success_e,
                    c.success_joint,
                    c.mean_l1_error,
                    c.mean_iters,
                    c.wall_ms,
                )
            )
        )
    return "\n".join(lines) + "\n"


def report_from_csv(text: str) -> ExperimentReport:
    lines = [ln for ln in text.split("\n") if ln]
    if not lines or lines[0] != ",".join(REPORT_COLUMNS):
        raise ValueError("report header does not match the expected schema")
    cells = []
    for k, ln in enumerate(lines[1:], start=2):
        parts = ln.split(",")
        if len(parts) != len(REPORT_COLUMNS):
            raise ValueError(f"line {k}: expected {len(REPORT_COLUMNS)} fields")
        cells.append(
            SweepCell(
                axis_name=parts[0],
                axis_value=float(parts[1]),
                n_trials=int(parts[2]),
                success_c=float(parts[3]),
                success_e=float(parts[4]),
                success_joint=float(parts[5]),
                mean_l1_error=float(parts[6]),
                mean_iters=float(parts[7]),
                wall_ms=float(parts[8]),
            )
        )
    return ExperimentReport(cells=tuple(cells))


def plot_data_text(report: ExperimentReport, metric: str = "success_joint") -> str:
    """Two-column x,y text for one curve, one point per axis value."""
    if metric not in ("success_c", "success_e", "success_joint", "mean_l1_error"):
        raise ValueError(f"unknown metric {metric!r}")
    lines = []
    for c in report.cells:
        lines.append(f"{_fmt(c.axis_value)},{_fmt(getattr(c, metric))}")
    return "\n".join(lines) + "\n"
