"""Concentration-bound evaluators, sample-size calculators, and numerical
null-space-property certification backed by an exact dense simplex.

The four kappa functions give the exponent in tail bounds of the form
Pr(|sample mean - expectation| >= zeta) <= exp(-kappa(zeta, m)) for four
dependence regimes: i.i.d. rows, exponentially strongly alpha-mixing rows,
geometrically C-mixing rows, and uniformly ergodic Markov chains. Dictionary
recovery needs kappa(m^-delta, m) >= 3 delta r log m; the checkers and
sample-size calculators below evaluate that condition and the closed-form
m-bounds that follow from it.

The null space property of order s asks every nonzero kernel vector to carry
less than half its l1 mass on any s coordinates. nsp_check certifies it
exactly on desk-scale matrices by solving one small LP per (support, sign
pattern) pair with the two-phase simplex implemented here.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from robustfit.dictionary import build_dictionary, enumerate_multi_indices

__all__ = [
    "KappaSpec",
    "NspReport",
    "LpResult",
    "kappa_iid",
    "kappa_alpha",
    "kappa_cmix",
    "kappa_ue",
    "kappa_value",
    "check_kappa_condition",
    "min_samples_kappa",
    "min_samples_nsp",
    "min_samples_stable_nsp",
    "lambda_threshold",
    "estimate_D",
    "nsp_check",
    "simplex_lp",
    "l1_min_exact",
]

REGIMES = ("iid", "alpha_mixing", "c_mixing", "uniformly_ergodic")

_REQUIRED_PARAMS = {
    "iid": ("C2", "C3"),
    "alpha_mixing": ("alpha_bar", "beta", "c_alpha", "C0", "C2"),
    "c_mixing": ("sigma2", "B", "beta"),
    "uniformly_ergodic": ("lambda_doeblin", "k0", "B"),
}


@dataclass(frozen=True)
class KappaSpec:
    """A dependence regime plus the constants its tail bound needs."""

    regime: str
    params: dict

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}, expected one of {REGIMES}")
        missing = [k for k in _REQUIRED_PARAMS[self.regime] if k not in self.params]
        if missing:
            raise ValueError(f"regime {self.regime!r} missing constants {missing}")
        for k in _REQUIRED_PARAMS[self.regime]:
            if self.params[k] <= 0:
                raise ValueError(f"constant {k} must be positive, got {self.params[k]}")


@dataclass(frozen=True)
class NspReport:
    """Result of certifying the null space property at one order."""

    order_s: int
    alpha_max: float
    worst_set: tuple
    nsp_holds: bool
    rho: float


def kappa_iid(zeta: float, m: float, C2: float, C3: float) -> float:
    """Tail exponent for i.i.d. rows: zeta^2 m / (C2 + C3 zeta) - log 2."""
    _check_zeta_m(zeta, m, 1)
    if C2 <= 0 or C3 <= 0:
        raise ValueError("C2 and C3 must be positive")
    return zeta * zeta * m / (C2 + C3 * zeta) - math.log(2.0)


def kappa_alpha(
    zeta: float,
    m: float,
    alpha_bar: float,
    beta: float,
    c_alpha: float,
    C0: float,
    C2: float,
) -> float:
    """Tail exponent under exponentially strong alpha-mixing.

    Blocks of length ceil((8m/c_alpha)^(1/(beta+1))) reduce the effective
    sample count to m_alpha = floor(m / block); the bound then matches the
    independent case with C1 = 2(1 + 4 e^(-2 alpha_bar)) in place of 2 and
    C3 = (2/3) C0.
    """
    _check_zeta_m(zeta, m, 1)
    for name, val in (
        ("alpha_bar", alpha_bar),
        ("beta", beta),
        ("c_alpha", c_alpha),
        ("C0", C0),
        ("C2", C2),
    ):
        if val <= 0:
            raise ValueError(f"{name} must be positive, got {val}")
    block = math.ceil((8.0 * m / c_alpha) ** (1.0 / (beta + 1.0)))
    m_alpha = math.floor(m / block)
    if m_alpha == 0:
        raise ValueError(
            f"m too small for blocking: m={m} gives block length {block} (m_alpha=0)"
        )
    C1 = 2.0 * (1.0 + 4.0 * math.exp(-2.0 * alpha_bar))
    C3 = (2.0 / 3.0) * C0
    return zeta * zeta * m_alpha / (C2 + C3 * zeta) - math.log(C1)


def kappa_cmix(zeta: float, m: float, sigma2: float, B: float, beta: float) -> float:
    """Tail exponent under geometric C-mixing.

    m zeta^2 / (8 (log m)^(2/beta) (sigma2 + zeta B / 3)) - log 4, valid
    for m >= 2 so the log is positive.
    """
    _check_zeta_m(zeta, m, 2)
    for name, val in (("sigma2", sigma2), ("B", B), ("beta", beta)):
        if val <= 0:
            raise ValueError(f"{name} must be positive, got {val}")
    return (
        m * zeta * zeta
        / (8.0 * math.log(m) ** (2.0 / beta) * (sigma2 + zeta * B / 3.0))
        - math.log(4.0)
    )


def kappa_ue(zeta: float, m: float, lambda_doeblin: float, k0: float, B: float) -> float:
    """Tail exponent for uniformly ergodic Markov chains.

    ((m-1)/2) (lambda zeta / (k0 B) - 3/(m-1))^2 - log 2, valid only when
    m >= 1 + 3 k0 B / (lambda zeta); smaller m raises with the bound named.
    """
    _check_zeta_m(zeta, m, 1)
    for name, val in (("lambda_doeblin", lambda_doeblin), ("k0", k0), ("B", B)):
        if val <= 0:
            raise ValueError(f"{name} must be positive, got {val}")
    validity = 1.0 + 3.0 * k0 * B / (lambda_doeblin * zeta)
    if m + 1e-12 < validity:
        raise ValueError(
            f"m={m} below the validity bound m >= 1 + 3*k0*B/(lambda*zeta) = {validity}"
        )
    inner = lambda_doeblin * zeta / (k0 * B) - 3.0 / (m - 1.0)
    return 0.5 * (m - 1.0) * inner * inner - math.log(2.0)


def _check_zeta_m(zeta: float, m: float, m_lo: float):
    if zeta <= 0:
        raise ValueError(f"zeta must be positive, got {zeta}")
    if m < m_lo:
        raise ValueError(f"m must be >= {m_lo}, got {m}")


def kappa_value(spec: KappaSpec, zeta: float, m: float) -> float:
    """Evaluate the spec's regime at (zeta, m)."""
    p = spec.params
    if spec.regime == "iid":
        return kappa_iid(zeta, m, p["C2"], p["C3"])
    if spec.regime == "alpha_mixing":
        return kappa_alpha(
            zeta, m, p["alpha_bar"], p["beta"], p["c_alpha"], p["C0"], p["C2"]
        )
    if spec.regime == "c_mixing":
        return kappa_cmix(zeta, m, p["sigma2"], p["B"], p["beta"])
    return kappa_ue(zeta, m, p["lambda_doeblin"], p["k0"], p["B"])


def check_kappa_condition(spec: KappaSpec, delta: float, r: int, m: float) -> bool:
    """True iff kappa(m^-delta, m) >= 3 delta r log m for the given regime."""
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    if r < 0:
        raise ValueError(f"r must be >= 0, got {r}")
    zeta = float(m) ** (-delta)
    return kappa_value(spec, zeta, m) >= 3.0 * delta * r * math.log(m)


def min_samples_kappa(
    spec: KappaSpec, delta: float, r: int, m_cap: int = 2**40
) -> int:
    """Smallest integer m with kappa(m^-delta, m) >= 3 delta r log m.

    Searches by doubling then bisection; evaluator validity errors at small
    m count as the condition failing there. Raises if the condition still
    fails at m_cap (e.g. delta too large for the regime's growth).
    """

    def holds(m):
        try:
            return check_kappa_condition(spec, delta, r, m)
        except ValueError:
            return False

    lo, hi = 1, 2
    while not holds(hi):
        lo, hi = hi, hi * 2
        if hi > m_cap:
            raise ValueError(
                f"condition not satisfied up to m={m_cap}; "
                "the exponent may not grow fast enough for this delta"
            )
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if holds(mid):
            hi = mid
        else:
            lo = mid
    return hi


def min_samples_nsp(
    B_X: float, B_Theta: float, s: int, D: float, delta: float, p: int, d: int = 1
) -> int:
    """Smallest m meeting both sample-size inequalities for exact recovery.

    m >= (max(3 + 3 B_X^p, 4/D))^(1/delta) and
    m > (4 + 8 s (1 + (B_X + B_Theta)^p)) / D. The dimension d does not
    enter the displayed bounds; it is accepted for interface symmetry.
    """
    _check_bound_args(B_X, B_Theta, s, D, p)
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    base = max(3.0 + 3.0 * B_X**p, 4.0 / D)
    m1 = math.ceil(base ** (1.0 / delta))
    t2 = (4.0 + 8.0 * s * (1.0 + (B_X + B_Theta) ** p)) / D
    m2 = math.floor(t2) + 1
    return max(m1, m2, 1)


def min_samples_stable_nsp(
    B_X: float, B_Theta: float, s: int, D: float, delta: float, p: int, rho: float
) -> int:
    """Smallest m meeting the stable-recovery sample bound with constant rho.

    Clauses: m >= (3 + 3 B_X^p)^(1/delta), m >= (4/D)^(1/delta), and
    m > (4 + 4 s (rho+1) (1 + (B_X + B_Theta)^p)) / (rho D).
    """
    _check_bound_args(B_X, B_Theta, s, D, p)
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    if not 0.0 < rho < 1.0:
        raise ValueError(f"rho must lie in (0, 1), got {rho}")
    m1 = math.ceil((3.0 + 3.0 * B_X**p) ** (1.0 / delta))
    m2 = math.ceil((4.0 / D) ** (1.0 / delta))
    t3 = (4.0 + 4.0 * s * (rho + 1.0) * (1.0 + (B_X + B_Theta) ** p)) / (rho * D)
    m3 = math.floor(t3) + 1
    return max(m1, m2, m3, 1)


def lambda_threshold(
    m: float, D: float, s: int, B_X: float, B_Theta: float, p: int
) -> float:
    """Corruption weights above 4 / (m D - 8 s (1 + (B_X + B_Theta)^p)) work.

    Raises when the denominator is not positive (m too small for the
    threshold to exist).
    """
    _check_bound_args(B_X, B_Theta, s, D, p)
    denom = m * D - 8.0 * s * (1.0 + (B_X + B_Theta) ** p)
    if denom <= 0:
        raise ValueError(
            f"m too small: m*D = {m * D} does not exceed "
            f"8*s*(1+(B_X+B_Theta)^p) = {m * D - denom}"
        )
    return 4.0 / denom


def _check_bound_args(B_X, B_Theta, s, D, p):
    if B_X <= 0:
        raise ValueError(f"B_X must be positive, got {B_X}")
    if B_Theta < 0:
        raise ValueError(f"B_Theta must be >= 0, got {B_Theta}")
    if s < 0:
        raise ValueError(f"s must be >= 0, got {s}")
    if D <= 0:
        raise ValueError(f"D must be positive, got {D}")
    if p < 0:
        raise ValueError(f"p must be >= 0, got {p}")


def estimate_D(sampler, d: int, p: int, n_directions: int, n_samples: int, seed) -> float:
    """Monte Carlo estimate of inf over unit-l1 coefficient directions c of
    E|sum_alpha c_alpha x^alpha|.

    Directions are drawn with exponential magnitudes normalized to l1 norm
    one and independent random signs; each direction's expectation is
    estimated from n_samples fresh draws of sampler(n, rng) -> n-by-d array.
    The returned minimum over finitely many directions is an upper bound on
    the true infimum, so treat it as an optimistic D.
    """
    if n_directions < 1 or n_samples < 1:
        raise ValueError("n_directions and n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    indices = enumerate_multi_indices(d, p)
    r = len(indices)
    best = math.inf
    for _ in range(n_directions):
        mags = rng.exponential(size=r)
        total = mags.sum()
        if total == 0.0:
            continue
        c = (mags / total) * rng.choice([-1.0, 1.0], size=r)
        X = np.asarray(sampler(n_samples, rng), dtype=float)
        if X.ndim != 2 or X.shape != (n_samples, d):
            raise ValueError(
                f"sampler returned shape {X.shape}, expected ({n_samples}, {d})"
            )
        phi = build_dictionary(X, p)
        val = float(np.abs(phi.values @ c).mean())
        if val < best:
            best = val
    return best


# ---------------------------------------------------------------------------
# Exact dense simplex (two-phase, Bland's rule)
# ---------------------------------------------------------------------------

_SIMPLEX_TOL = 1e-9
_MAX_PIVOTS = 50000


@dataclass(frozen=True)
class LpResult:
    """Outcome of one LP solve: status in {optimal, infeasible, unbounded}."""

    status: str
    optimum: float | None
    x: np.ndarray | None


def simplex_lp(c_obj, A_ineq=None, b_ineq=None, A_eq=None, b_eq=None) -> LpResult:
    """Minimize c_obj @ x over A_ineq x <= b_ineq, A_eq x = b_eq, x free.

    Dense two-phase simplex with Bland's anti-cycling rule and a 1e-9
    pivot tolerance. Free variables are split internally into positive and
    negative parts. Intended for small, well-scaled instances; this is the
    exact oracle behind nsp_check and the solver equivalence tests.
    """
    c_obj = np.atleast_1d(np.asarray(c_obj, dtype=float))
    n = c_obj.size
    A_le, b_le = _coerce_system(A_ineq, b_ineq, n, "A_ineq")
    A_eq_, b_eq_ = _coerce_system(A_eq, b_eq, n, "A_eq")
    m_le, m_eq = A_le.shape[0], A_eq_.shape[0]
    m = m_le + m_eq
    if m == 0:
        if np.any(c_obj != 0.0):
            return LpResult("unbounded", None, None)
        return LpResult("optimal", 0.0, np.zeros(n))

    # standard-form columns: x+ (n), x- (n), slacks (m_le), artificials (var)
    A = np.vstack([A_le, A_eq_])
    b = np.concatenate([b_le, b_eq_]).astype(float)
    body = np.hstack([A, -A, np.zeros((m, m_le))])
    for i in range(m_le):
        body[i, 2 * n + i] = 1.0
    flipped = b < 0
    body[flipped] *= -1.0
    b = np.abs(b)

    n_slack_cols = 2 * n + m_le
    basis = [-1] * m
    art_rows = []
    for i in range(m):
        if i < m_le and not flipped[i]:
            basis[i] = 2 * n + i  # slack enters the initial basis directly
        else:
            art_rows.append(i)
    n_art = len(art_rows)
    total = n_slack_cols + n_art
    T = np.zeros((m + 1, total + 1))
    T[:m, :n_slack_cols] = body
    T[:m, -1] = b
    for k, i in enumerate(art_rows):
        T[i, n_slack_cols + k] = 1.0
        basis[i] = n_slack_cols + k

    if n_art:
        cost1 = np.zeros(total)
        cost1[n_slack_cols:] = 1.0
        _install_cost(T, basis, cost1)
        status = _run_simplex(T, basis, total)
        if status != "optimal":  # phase 1 is bounded below by zero
            raise RuntimeError(f"phase-1 simplex returned {status}")
        if -T[-1, -1] > 1e-7:
            return LpResult("infeasible", None, None)
        T, basis = _evict_artificials(T, basis, n_slack_cols)
        m = len(basis)

    cost2 = np.zeros(T.shape[1] - 1)
    cost2[:n] = c_obj
    cost2[n : 2 * n] = -c_obj
    _install_cost(T, basis, cost2)
    status = _run_simplex(T, basis, n_slack_cols)
    if status == "unbounded":
        return LpResult("unbounded", None, None)
    x_std = np.zeros(T.shape[1] - 1)
    for i, col in enumerate(basis):
        x_std[col] = T[i, -1]
    x = x_std[:n] - x_std[n : 2 * n]
    return LpResult("optimal", float(c_obj @ x), x)


def _coerce_system(A, b, n, name):
    if A is None and b is None:
        return np.zeros((0, n)), np.zeros(0)
    if A is None or b is None:
        raise ValueError(f"{name} and its right-hand side must be given together")
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if A.shape != (b.size, n):
        raise ValueError(
            f"{name} has shape {A.shape}, expected ({b.size}, {n}) to match "
            f"{b.size} right-hand sides over {n} variables"
        )
    return A, b


def _install_cost(T, basis, cost):
    """Load a cost row and price out the current basis."""
    T[-1, :-1] = cost
    T[-1, -1] = 0.0
    for i, col in enumerate(basis):
        if T[-1, col] != 0.0:
            T[-1] -= T[-1, col] * T[i]


def _run_simplex(T, basis, n_allowed):
    """Pivot to optimality over columns [0, n_allowed); Bland's rule."""
    m = T.shape[0] - 1
    for _ in range(_MAX_PIVOTS):
        enter = -1
        for j in range(n_allowed):
            if T[-1, j] < -_SIMPLEX_TOL:
                enter = j
                break
        if enter < 0:
            return "optimal"
        best = math.inf
        leave = -1
        for i in range(m):
            a = T[i, enter]
            if a > _SIMPLEX_TOL:
                ratio = T[i, -1] / a
                if ratio < best - 1e-12 or (
                    ratio <= best + 1e-12 and (leave < 0 or basis[i] < basis[leave])
                ):
                    best = min(best, ratio)
                    leave = i
        if leave < 0:
            return "unbounded"
        _pivot(T, basis, leave, enter)
    raise RuntimeError(f"simplex did not terminate within {_MAX_PIVOTS} pivots")


def _pivot(T, basis, row, col):
    T[row] /= T[row, col]
    piv = T[row]
    for i in range(T.shape[0]):
        if i != row and T[i, col] != 0.0:
            T[i] -= T[i, col] * piv
    basis[row] = col


def _evict_artificials(T, basis, n_real):
    """Pivot zero-valued artificials out of the basis; drop redundant rows."""
    m = T.shape[0] - 1
    keep = []
    for i in range(m):
        if basis[i] < n_real:
            keep.append(i)
            continue
        piv = -1
        for j in range(n_real):
            if abs(T[i, j]) > _SIMPLEX_TOL:
                piv = j
                break
        if piv >= 0:
            _pivot(T, basis, i, piv)
            keep.append(i)
        # else: row is redundant (all-zero over real columns), drop it
    rows = keep + [m]
    T2 = np.hstack([T[rows][:, :n_real], T[rows][:, -1:]])
    basis2 = [basis[i] for i in keep]
    return T2, basis2


def l1_min_exact(phi_values, y, lam: float = 1.0):
    """Exact minimum of ||c||_1 + lam ||e||_1 subject to Phi c + e = y.

    Recast as an LP with auxiliary bound variables and solved by the exact
    simplex; returns (c, e, optimum). Only for tiny instances (the LP has
    2(r + m) variables and 2(r + m) + m rows).
    """
    phi_values = np.asarray(phi_values, dtype=float)
    y = np.asarray(y, dtype=float)
    m, r = phi_values.shape
    if y.shape != (m,):
        raise ValueError(f"y has shape {y.shape}, expected ({m},)")
    if lam <= 0:
        raise ValueError(f"lam must be positive, got {lam}")
    n = 2 * (r + m)  # variables: c, e, t_c, t_e
    c_obj = np.concatenate([np.zeros(r + m), np.ones(r), lam * np.ones(m)])
    # |c| <= t_c and |e| <= t_e as four sign blocks
    eye_r = np.eye(r)
    eye_m = np.eye(m)
    zr_rm = np.zeros((r, m))
    zm_rr = np.zeros((m, r))
    A_ineq = np.vstack(
        [
            np.hstack([eye_r, zr_rm, -eye_r, zr_rm]),
            np.hstack([-eye_r, zr_rm, -eye_r, zr_rm]),
            np.hstack([zm_rr, eye_m, zm_rr, -eye_m]),
            np.hstack([zm_rr, -eye_m, zm_rr, -eye_m]),
        ]
    )
    b_ineq = np.zeros(2 * (r + m))
    A_eq = np.hstack([phi_values, eye_m, np.zeros((m, r + m))])
    res = simplex_lp(c_obj, A_ineq, b_ineq, A_eq, y)
    if res.status != "optimal":
        raise RuntimeError(f"l1 oracle LP returned {res.status}")
    return res.x[:r], res.x[r : r + m], res.optimum


# ---------------------------------------------------------------------------
# Null space property certification
# ---------------------------------------------------------------------------

_NSP_BUDGET = 10**6


def kernel_basis(A: np.ndarray) -> np.ndarray:
    """Orthonormal basis of ker(A) as columns; singular values below
    1e-10 times the largest are treated as zero."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    _, svals, Vt = np.linalg.svd(A, full_matrices=True)
    if svals.size == 0 or svals[0] == 0.0:
        rank = 0
    else:
        rank = int(np.sum(svals >= 1e-10 * svals[0]))
    return Vt[rank:].T


def nsp_check(A: np.ndarray, s: int) -> NspReport:
    """Certify the null space property of order s for a dense matrix.

    Computes alpha_max = max over supports |S| = s and kernel vectors v
    with ||v||_1 <= 1 of ||v_S||_1 by solving one LP per (S, sign pattern).
    The property holds iff alpha_max < 1/2; rho = alpha_max/(1 - alpha_max)
    is the stable constant when it does. Guarded to C(N,s) 2^s <= 1e6 LPs.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    N = A.shape[1]
    if s < 1:
        raise ValueError(f"order s must be >= 1, got {s}")
    if s > N:
        raise ValueError(f"order s={s} exceeds the number of columns {N}")
    n_lps = math.comb(N, s) * 2**s
    if n_lps > _NSP_BUDGET:
        raise ValueError(
            f"C({N},{s})*2^{s} = {n_lps} LPs exceeds the budget {_NSP_BUDGET}; "
            "use a smaller matrix or order"
        )
    K = kernel_basis(A)
    k = K.shape[1]
    if k == 0:
        return NspReport(order_s=s, alpha_max=0.0, worst_set=(), nsp_holds=True, rho=0.0)

    alpha_max = 0.0
    worst = ()
    n_t = k + N  # LP variables: kernel coordinates t, then bounds u
    ones_row = np.concatenate([np.zeros(k), np.ones(N)])
    base_rows = np.vstack(
        [
            np.hstack([K, -np.eye(N)]),
            np.hstack([-K, -np.eye(N)]),
            ones_row,
        ]
    )
    b_ineq = np.concatenate([np.zeros(2 * N), [1.0]])
    for S in itertools.combinations(range(N), s):
        # v -> -v symmetry: fixing the first sign to +1 halves the patterns
        for signs in itertools.product((1.0, -1.0), repeat=s - 1):
            sigma = (1.0,) + signs
            c_obj = np.zeros(n_t)
            for sig, idx in zip(sigma, S):
                c_obj[:k] -= sig * K[idx]  # maximize => minimize the negative
            res = simplex_lp(c_obj, base_rows, b_ineq)
            if res.status != "optimal":
                raise RuntimeError(f"null-space LP returned {res.status}")
            v = K @ res.x[:k]
            nv = float(np.abs(v).sum())
            if nv <= 1e-12:
                continue
            cand = float(np.abs(v[list(S)]).sum()) / nv
            if cand > alpha_max:
                alpha_max = cand
                worst = tuple(S)
    # the SVD/LP pipeline carries rounding noise of order 1e-13; margins
    # below that floor must not flip the certificate, so round the report
    # to 12 significant digits (boundary cases land exactly on 1/2)
    alpha_max = float(f"{min(alpha_max, 1.0):.12g}")
    rho = alpha_max / (1.0 - alpha_max) if alpha_max < 1.0 else math.inf
    return NspReport(
        order_s=s,
        alpha_max=alpha_max,
        worst_set=worst,
        nsp_holds=alpha_max < 0.5,
        rho=rho,
    )
