"""Douglas-Rachford solver for sparse recovery with sparse corruption.

Solves min ||w||_1 subject to ||y - A w||_2 <= sigma over w = [lam*e, c],
where A = [lam^-1 Id_m, Phi] couples the corruption estimate e and the
coefficient vector c. The objective splits as g1(w, v) = ||w||_1 + (ball
indicator at v) and g2 = indicator of the graph {v = A w}; both proximal
maps are cheap (soft-thresholding plus ball projection, and one symmetric
positive-definite solve prepared once and reused every iteration).

Scale conventions, fixed here and used by everything downstream: the solver
works on the columns it is given, so with a column-normalized dictionary
the coefficients live at the normalized scale. Supports are thresholded at
that working scale; the reported coefficient vector c is mapped back to the
raw-column scale through DesignMatrix.column_scales; the corruption
estimate is e = w[:m] / lam; the reported objective is
||c_solved||_1 + lam ||e||_1, i.e. the working-scale objective value.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from robustfit.dictionary import (
    AugmentedMatrix,
    apply_augmented,
    apply_augmented_adjoint,
)

__all__ = [
    "SolverParams",
    "SolverState",
    "RecoverySolution",
    "NormalFactorization",
    "shrink",
    "project_ball",
    "prox_g1",
    "prox_g2",
    "precompute_normal_factorization",
    "douglas_rachford",
    "threshold_support",
    "solution_to_json",
    "solution_from_json",
]


@dataclass(frozen=True)
class SolverParams:
    """Tunables of the splitting iteration.

    support_tau is the magnitude threshold (at the solver's working scale)
    that turns dense solution vectors into reported supports.
    """

    gamma: float = 1.0
    sigma: float = 1e-10
    lam: float = 1.0
    max_iters: int = 20000
    tol: float = 1e-9
    support_tau: float = 1e-4

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if self.lam <= 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.tol <= 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.support_tau < 0:
            raise ValueError(f"support_tau must be >= 0, got {self.support_tau}")


@dataclass
class SolverState:
    """Shadow and primal iterates of the splitting loop.

    The primal pair always satisfies (w, v) = prox_g1(w_tilde, v_tilde).
    """

    w_tilde: np.ndarray
    v_tilde: np.ndarray
    w: np.ndarray
    v: np.ndarray
    iter: int


@dataclass(frozen=True)
class RecoverySolution:
    """Unpacked solver output.

    c is at the raw-column scale; supports were thresholded at the working
    scale (see module docstring). objective = ||c_solved||_1 + lam ||e||_1.
    """

    c: np.ndarray
    e: np.ndarray
    c_support: np.ndarray
    e_support: np.ndarray
    objective: float
    residual: float
    iters_used: int
    converged: bool


def shrink(w: np.ndarray, gamma: float) -> np.ndarray:
    """Soft-thresholding: sign(w) * max(|w| - gamma, 0) componentwise."""
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    w = np.asarray(w, dtype=float)
    return np.sign(w) * np.maximum(np.abs(w) - gamma, 0.0)


def project_ball(v: np.ndarray, y: np.ndarray, sigma: float) -> np.ndarray:
    """Euclidean projection of v onto the ball of radius sigma around y."""
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    v = np.asarray(v, dtype=float)
    diff = v - y
    nrm = float(np.linalg.norm(diff))
    if nrm <= sigma:
        return v.copy()
    return y + (sigma / nrm) * diff


def prox_g1(w, v, gamma: float, y, sigma: float):
    """Proximal map of ||w||_1 + ball indicator: separable in (w, v)."""
    return shrink(w, gamma), project_ball(v, y, sigma)


@dataclass(frozen=True)
class NormalFactorization:
    """Reusable solver for (Id + A^T A) x = b built on one Cholesky factor.

    The big system reduces to the smaller of two symmetric positive-definite
    systems: with c = 1 + lam^-2, either M = c Id_m + Phi Phi^T (factored
    when m <= r) or G = c Id_r + Phi^T Phi (when m > r), via
    (Id + A^T A)^-1 b = b - A^T M^-1 A b and
    M^-1 t = (t - Phi G^-1 Phi^T t) / c.
    """

    aug: AugmentedMatrix
    cho: tuple
    side: str
    c_lam: float

    def solve(self, b: np.ndarray) -> np.ndarray:
        phi = self.aug.phi.values
        t = apply_augmented(self.aug, b)
        if self.side == "m":
            u = cho_solve(self.cho, t, check_finite=False)
        else:
            inner = cho_solve(self.cho, phi.T @ t, check_finite=False)
            u = (t - phi @ inner) / self.c_lam
        return b - apply_augmented_adjoint(self.aug, u)


def precompute_normal_factorization(aug: AugmentedMatrix) -> NormalFactorization:
    """Factor the small side of Id + A^T A once, for reuse every iteration."""
    phi = aug.phi.values
    m, r = phi.shape
    c_lam = 1.0 + 1.0 / aug.lam**2
    if m <= r:
        mat = c_lam * np.eye(m) + phi @ phi.T
    else:
        mat = c_lam * np.eye(r) + phi.T @ phi
    try:
        cho = cho_factor(mat, lower=True, check_finite=False)
    except LinAlgError as exc:
        raise RuntimeError(
            "Cholesky failed on a matrix that is positive definite by "
            f"construction; condition estimate {np.linalg.cond(mat):.3e}"
        ) from exc
    return NormalFactorization(
        aug=aug, cho=cho, side="m" if m <= r else "r", c_lam=c_lam
    )


def prox_g2(w, v, fact: NormalFactorization, aug: AugmentedMatrix):
    """Projection onto the coupling set {(w, v): v = A w}."""
    b = np.asarray(w, dtype=float) + apply_augmented_adjoint(aug, np.asarray(v, dtype=float))
    w_new = fact.solve(b)
    return w_new, apply_augmented(aug, w_new)


def threshold_support(x: np.ndarray, tau: float) -> np.ndarray:
    """Indices where |x| strictly exceeds tau, in increasing order."""
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    return np.nonzero(np.abs(np.asarray(x)) > tau)[0]


def douglas_rachford(
    aug: AugmentedMatrix, y: np.ndarray, params: SolverParams | None = None,
    return_state: bool = False,
):
    """Run the splitting iteration to solve the corrupted recovery problem.

    Shadow update: (w~, v~) <- (w~, v~) + prox_g2(2 p1 - (w~, v~)) - p1 with
    p1 = prox_g1(w~, v~); the primal pair is prox_g1 of the current shadow.
    Starts at w~ = 0, v~ = y. Stops when the fixed-point residual (the norm
    of the shadow update, relative to max(1, shadow norm)) drops below
    params.tol, or at params.max_iters (flagged via converged=False, not an
    error). The residual is the update step itself, so a zero residual
    certifies an exact fixed point; the primal pair can sit still for many
    early iterations while the shadows move, which is why the test is not
    on the primal. A non-finite iterate raises with the iteration number.
    """
    if params is None:
        params = SolverParams()
    if aug.lam != params.lam:
        raise ValueError(
            f"operator was built with lambda={aug.lam} but params.lam={params.lam}"
        )
    y = np.asarray(y, dtype=float)
    m = aug.n_rows
    if y.shape != (m,):
        raise ValueError(f"y has shape {y.shape}, expected ({m},)")
    if not np.all(np.isfinite(y)):
        raise ValueError("y contains non-finite entries")
    fact = precompute_normal_factorization(aug)
    w_tilde = np.zeros(aug.total_cols)
    v_tilde = y.copy()
    converged = False
    n_updates = 0
    while n_updates < params.max_iters:
        p1w = shrink(w_tilde, params.gamma)
        p1v = project_ball(v_tilde, y, params.sigma)
        p2w, p2v = prox_g2(2.0 * p1w - w_tilde, 2.0 * p1v - v_tilde, fact, aug)
        dw = p2w - p1w
        dv = p2v - p1v
        scale = max(1.0, float(np.sqrt(w_tilde @ w_tilde + v_tilde @ v_tilde)))
        w_tilde += dw
        v_tilde += dv
        n_updates += 1
        if not (np.all(np.isfinite(w_tilde)) and np.all(np.isfinite(v_tilde))):
            raise RuntimeError(f"non-finite iterate at iteration {n_updates}")
        step = float(np.sqrt(dw @ dw + dv @ dv))
        if step < params.tol * scale:
            converged = True
            break

    p1w = shrink(w_tilde, params.gamma)
    p1v = project_ball(v_tilde, y, params.sigma)
    e = p1w[:m] / params.lam
    c_solved = p1w[m:]
    c = c_solved / aug.phi.column_scales
    solution = RecoverySolution(
        c=c,
        e=e,
        c_support=threshold_support(c_solved, params.support_tau),
        e_support=threshold_support(e, params.support_tau),
        objective=float(np.abs(p1w).sum()),
        residual=float(np.linalg.norm(y - apply_augmented(aug, p1w))),
        iters_used=n_updates,
        converged=converged,
    )
    if return_state:
        state = SolverState(
            w_tilde=w_tilde, v_tilde=v_tilde, w=p1w, v=p1v, iter=n_updates
        )
        return solution, state
    return solution


def solution_to_json(sol: RecoverySolution) -> str:
    """Serialize with shortest round-trip floats and a fixed key order."""
    payload = {
        "c": [float(v) for v in sol.c],
        "e": [float(v) for v in sol.e],
        "c_support": [int(i) for i in sol.c_support],
        "e_support": [int(i) for i in sol.e_support],
        "objective": sol.objective,
        "residual": sol.residual,
        "iters": sol.iters_used,
        "converged": sol.converged,
    }
    return json.dumps(payload, indent=2) + "\n"


def solution_from_json(text: str) -> RecoverySolution:
    data = json.loads(text)
    required = {"c", "e", "c_support", "e_support", "objective", "residual", "iters", "converged"}
    missing = required - set(data)
    if missing:
        raise ValueError(f"solution JSON missing fields {sorted(missing)}")
    return RecoverySolution(
        c=np.asarray(data["c"], dtype=float),
        e=np.asarray(data["e"], dtype=float),
        c_support=np.asarray(data["c_support"], dtype=int),
        e_support=np.asarray(data["e_support"], dtype=int),
        objective=float(data["objective"]),
        residual=float(data["residual"]),
        iters_used=int(data["iters"]),
        converged=bool(data["converged"]),
    )
