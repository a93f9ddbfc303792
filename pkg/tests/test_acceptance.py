"""Acceptance gate: ten end-to-end criteria covering the full pipeline.

Each test prints exactly one [criterion N] PASS/FAIL line on the real
terminal (capture suspended), with indented notes documenting the
measured rates behind threshold checks. The Monte Carlo criteria (1-5)
run the study presets at 100 trials per cell and dominate the runtime.
"""

import math
import time

import numpy as np
import pytest

from robustfit.datagen import (
    CorruptionSpec,
    build_dataset,
    coefficient_vector,
    make_polynomial,
)
from robustfit.dictionary import (
    AugmentedMatrix,
    DesignMatrix,
    build_dictionary,
    enumerate_multi_indices,
)
from robustfit.experiments import preset_example, run_sweep
from robustfit.solver import (
    SolverParams,
    douglas_rachford,
    precompute_normal_factorization,
    project_ball,
    prox_g1,
    prox_g2,
    shrink,
)
from robustfit.theory import (
    KappaSpec,
    check_kappa_condition,
    kappa_alpha,
    kappa_cmix,
    kappa_iid,
    kappa_ue,
    kernel_basis,
    l1_min_exact,
    min_samples_nsp,
    nsp_check,
    simplex_lp,
)

N_TRIALS = 100
MASTER_SEED = 0


def _report(capsys, n, label, ok, notes=()):
    with capsys.disabled():
        print(f"\n[criterion {n:2d}] {label}: {'PASS' if ok else 'FAIL'}", flush=True)
        for note in notes:
            print(f"              {note}", flush=True)


def _rate_line(tag, rates):
    return tag + "  " + "  ".join(f"{k}:{v:.2f}" for k, v in rates.items())


# ---------------------------------------------------------------------------
# criteria 1-2: recovery rate versus sample count for the quintic target
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def quintic_sweeps():
    """Success rates over the m grid for 5 and 12 corrupted rows."""
    rates, elapsed = {}, {}
    for s_theta in (5, 12):
        base, axis = preset_example(1, s_theta=s_theta)
        t0 = time.monotonic()
        report = run_sweep(
            base, axis, n_trials=N_TRIALS, master_seed=MASTER_SEED, threads=1
        )
        elapsed[s_theta] = time.monotonic() - t0
        rates[s_theta] = {int(c.axis_value): c.success_joint for c in report.cells}
    return rates, elapsed


def test_criterion_01_recovery_rate_vs_sample_count(quintic_sweeps, capsys):
    rates, elapsed = quintic_sweeps
    r5 = rates[5]
    ok_large = r5[150] >= 0.90
    under = {m: v for m, v in r5.items() if m < 56}
    ok_under = any(v >= 0.90 for v in under.values())
    ok_budget = elapsed[5] <= 600.0
    ok = ok_large and ok_under and ok_budget
    notes = [
        _rate_line("s_theta=5 joint rates by m:", r5),
        f"rate at m=150: {r5[150]:.2f} (need >= 0.90)",
        f"best undersampled rate (m < 56): {max(under.values()):.2f} (need >= 0.90)",
        f"sweep wall time: {elapsed[5]:.0f} s (budget 600 s)",
    ]
    _report(capsys, 1, "recovery rate vs sample count (quintic, 5 outliers)", ok, notes)
    assert ok_large, f"rate at m=150 is {r5[150]:.2f}, below 0.90"
    assert ok_budget, f"sweep took {elapsed[5]:.0f} s, over the 600 s budget"
    assert ok_under, (
        "no undersampled m (< 56) reaches a 0.90 joint rate: the l1 minimizer "
        "trades the degree-5 term against outlier mass for this sampling law, "
        f"peaking at {max(under.values()):.2f}"
    )


def test_criterion_02_ordering_in_corruption_sparsity(quintic_sweeps, capsys):
    rates, _ = quintic_sweeps
    gaps = {m: rates[5][m] - rates[12][m] for m in rates[5]}
    ok = all(g >= -0.10 for g in gaps.values())
    worst = min(gaps, key=gaps.get)
    notes = [
        _rate_line("s_theta=12 joint rates by m:", rates[12]),
        f"worst margin rate(s=5) - rate(s=12): {gaps[worst]:+.2f} at m={worst} "
        "(need >= -0.10)",
    ]
    _report(capsys, 2, "heavier corruption never helps (s=5 vs s=12)", ok, notes)
    assert ok, f"rate(s=5) below rate(s=12) - 0.10 at m={worst}: gap {gaps[worst]:.2f}"


# ---------------------------------------------------------------------------
# criterion 3: single-power family at two sampling levels
# ---------------------------------------------------------------------------


def test_criterion_03_single_power_family(capsys):
    rates = {}
    for m in (100, 43):
        base, axis = preset_example(2, m=m)
        report = run_sweep(
            base, axis, n_trials=N_TRIALS, master_seed=MASTER_SEED, threads=1
        )
        rates[m] = {int(c.axis_value): c.success_joint for c in report.cells}
    ok_dense = all(v >= 0.90 for v in rates[100].values())
    ok_sparse = all(v >= 0.60 for v in rates[43].values())
    ok = ok_dense and ok_sparse
    notes = [
        _rate_line("m=100 joint rates by power p:", rates[100]),
        _rate_line("m=43  joint rates by power p:", rates[43]),
        "need >= 0.90 at m=100 and >= 0.60 at m=43 for every power",
    ]
    _report(capsys, 3, "single-power recovery at 35% and 15% sampling", ok, notes)
    assert ok_dense, f"m=100 rates {rates[100]} dip below 0.90"
    assert ok_sparse, f"m=43 rates {rates[43]} dip below 0.60"


# ---------------------------------------------------------------------------
# criterion 4: outlier magnitude and sparsity trends
# ---------------------------------------------------------------------------


def test_criterion_04_magnitude_and_sparsity_trends(capsys):
    rate = {}
    for s_theta in (3, 10, 15):
        base, axis = preset_example(3, s_theta=s_theta)
        report = run_sweep(
            base, axis, n_trials=N_TRIALS, master_seed=MASTER_SEED, threads=1
        )
        rate[s_theta] = {float(c.axis_value): c.success_joint for c in report.cells}
    ok_h = all(rate[s][10.0] >= rate[s][0.5] - 0.05 for s in (3, 10, 15))
    ok_s = all(rate[3][h] >= rate[15][h] for h in (0.5, 2.0, 10.0))
    ok_cell = rate[3][10.0] >= 0.90
    ok = ok_h and ok_s and ok_cell
    notes = [
        _rate_line(f"s_theta={s}  joint rates by H:", rate[s]) for s in (3, 10, 15)
    ] + [f"cell (H=10, s_theta=3): {rate[3][10.0]:.2f} (need >= 0.90)"]
    _report(capsys, 4, "larger outliers help, more outliers hurt", ok, notes)
    assert ok_h, "rate(H=10) fell more than 0.05 below rate(H=0.5) at some s_theta"
    assert ok_s, "rate(s_theta=3) fell below rate(s_theta=15) at some H"
    assert ok_cell, f"cell (H=10, s_theta=3) is {rate[3][10.0]:.2f}, below 0.90"


# ---------------------------------------------------------------------------
# criterion 5: dense sinusoidal mismatch
# ---------------------------------------------------------------------------


def test_criterion_05_dense_mismatch(capsys):
    base, axis = preset_example(4)
    report = run_sweep(
        base, axis, n_trials=N_TRIALS, master_seed=MASTER_SEED, threads=1
    )
    by_eps = {float(c.axis_value): c for c in report.cells}
    r0 = by_eps[0.0].success_c
    r3 = by_eps[1e-3].success_c
    # two-proportion MC noise at 100 trials per cell
    noise = 2.0 * math.sqrt(r0 * (1.0 - r0) / N_TRIALS + r3 * (1.0 - r3) / N_TRIALS)
    gap = r0 - r3
    ok_clean = r0 >= 0.90
    ok_band = 0.60 <= r3 <= 1.0
    ok_gap = gap >= 0.02 or gap <= noise
    ok_l1 = all(c.mean_l1_error <= 0.05 for c in report.cells)
    ok = ok_clean and ok_band and ok_gap and ok_l1
    notes = [
        _rate_line("coefficient-support rates by epsilon:",
                   {f"{e:g}": c.success_c for e, c in sorted(by_eps.items())}),
        _rate_line("mean l1 errors over successes:",
                   {f"{e:g}": c.mean_l1_error for e, c in sorted(by_eps.items())}),
        f"gap rate(eps=0) - rate(eps=1e-3) = {gap:+.3f}; "
        f"two-sigma MC noise {noise:.3f} -> "
        + ("gap exceeds 0.02" if gap >= 0.02 else "within MC noise"),
    ]
    _report(capsys, 5, "recovery under dense sinusoidal mismatch", ok, notes)
    assert ok_clean, f"clean-data coefficient rate {r0:.2f} below 0.90"
    assert ok_band, f"rate at eps=1e-3 is {r3:.2f}, outside [0.60, 1.0]"
    assert ok_gap, f"gap {gap:.3f} neither >= 0.02 nor within MC noise {noise:.3f}"
    assert ok_l1, f"mean l1 error exceeds 0.05: {[c.mean_l1_error for c in report.cells]}"


# ---------------------------------------------------------------------------
# criterion 6: splitting solver vs exact simplex oracle
# ---------------------------------------------------------------------------


def _random_design(rng, m, r):
    values = rng.normal(size=(m, r))
    return DesignMatrix(
        values=values,
        indices=enumerate_multi_indices(r - 1, 1),
        column_scales=np.ones(r),
        dim=r - 1,
        max_degree=1,
    )


def _l1_lp(phi_values, y, lam, cost_jitter=None):
    """Same recast as the packaged oracle, with optionally jittered costs."""
    m, r = phi_values.shape
    cost = np.concatenate([np.zeros(r + m), np.ones(r), lam * np.ones(m)])
    if cost_jitter is not None:
        cost = cost * (1.0 + cost_jitter)
    eye_r, eye_m = np.eye(r), np.eye(m)
    zr, zm = np.zeros((r, m)), np.zeros((m, r))
    A_ineq = np.vstack(
        [
            np.hstack([eye_r, zr, -eye_r, zr]),
            np.hstack([-eye_r, zr, -eye_r, zr]),
            np.hstack([zm, eye_m, zm, -eye_m]),
            np.hstack([zm, -eye_m, zm, -eye_m]),
        ]
    )
    A_eq = np.hstack([phi_values, eye_m, np.zeros((m, r + m))])
    res = simplex_lp(cost, A_ineq, np.zeros(2 * (r + m)), A_eq, y)
    assert res.status == "optimal"
    return res.x[: r + m]


def test_criterion_06_solver_matches_lp_oracle(capsys):
    rng = np.random.default_rng(1234)
    m, r, lam = 8, 6, 1.0
    params = SolverParams(lam=lam, tol=1e-11, max_iters=40000)
    t0 = time.monotonic()
    worst_obj = worst_sol = 0.0
    unique_count = 0
    for _ in range(10):
        dm = _random_design(rng, m, r)
        c0 = np.zeros(r)
        c0[rng.choice(r, 2, replace=False)] = rng.uniform(1.0, 2.0, 2) * rng.choice(
            [-1.0, 1.0], 2
        )
        e0 = np.zeros(m)
        e0[rng.integers(m)] = rng.uniform(2.0, 4.0) * rng.choice([-1.0, 1.0])
        y = dm.values @ c0 + e0
        c_lp, e_lp, opt = l1_min_exact(dm.values, y, lam)
        sol = douglas_rachford(AugmentedMatrix(dm, lam), y, params)
        dr_pair = np.concatenate([sol.c, sol.e])
        lp_pair = np.concatenate([c_lp, e_lp])
        worst_obj = max(worst_obj, abs(sol.objective - opt))
        # argmin uniqueness probed by re-solving under two cost jitters
        unique = all(
            np.max(np.abs(
                _l1_lp(dm.values, y, lam, 1e-7 * rng.uniform(-1, 1, 2 * (r + m)))
                - lp_pair
            )) <= 1e-9
            for _ in range(2)
        )
        if unique:
            unique_count += 1
            worst_sol = max(worst_sol, float(np.max(np.abs(dr_pair - lp_pair))))
    elapsed = time.monotonic() - t0
    ok = worst_obj <= 1e-6 and worst_sol <= 1e-5 and elapsed <= 10.0
    notes = [
        f"worst objective gap over 10 instances: {worst_obj:.2e} (need <= 1e-6)",
        f"worst solution gap on {unique_count} unique-argmin instances: "
        f"{worst_sol:.2e} (need <= 1e-5)",
        f"wall time: {elapsed:.1f} s (budget 10 s)",
    ]
    _report(capsys, 6, "splitting solver matches the exact simplex oracle", ok, notes)
    assert worst_obj <= 1e-6
    assert worst_sol <= 1e-5
    assert elapsed <= 10.0


# ---------------------------------------------------------------------------
# criterion 7: noiseless exact recovery at m=200
# ---------------------------------------------------------------------------


def test_criterion_07_noiseless_exact_recovery(capsys):
    truth = make_polynomial({(0, 0, 0): 1.0, (1, 1, 1): -2.0, (5, 0, 0): 5.0}, 3, 5)
    params = SolverParams(lam=10.0, sigma=1e-10)
    hits = 0
    worst_err = 0.0
    for seed in range(100):
        ds = build_dataset(
            truth, 200, "alpha_mixing", CorruptionSpec(5, 2.0, "outputs"), seed=seed
        )
        phi = build_dictionary(ds.U, 5)
        sol = douglas_rachford(AugmentedMatrix(phi, params.lam), ds.y, params)
        c_true = coefficient_vector(truth, phi.indices)
        err = float(np.max(np.abs(sol.c - c_true)))
        exact = (
            np.array_equal(sol.c_support, np.nonzero(c_true)[0])
            and np.array_equal(sol.e_support, np.sort(ds.corruption_support))
            and err <= 1e-6
        )
        if exact:
            hits += 1
            worst_err = max(worst_err, err)
    ok = hits >= 99
    notes = [
        f"exact joint recoveries: {hits}/100 seeds (need >= 99)",
        f"worst coefficient sup-error among hits: {worst_err:.2e} (need <= 1e-6)",
    ]
    _report(capsys, 7, "noiseless exact recovery at m=200", ok, notes)
    assert ok, f"only {hits}/100 seeds recovered exactly"


# ---------------------------------------------------------------------------
# criterion 8: proximal operator properties
# ---------------------------------------------------------------------------


def _grid_prox_1d(objective, center, half_width):
    """Three-stage grid refinement of a 1-d prox objective."""
    lo, hi = center - half_width, center + half_width
    for _ in range(3):
        xs = np.linspace(lo, hi, 4001)
        vals = objective(xs)
        k = int(np.argmin(vals))
        step = xs[1] - xs[0]
        lo, hi = xs[k] - step, xs[k] + step
    return 0.5 * (lo + hi)


def test_criterion_08_prox_properties(capsys):
    rng = np.random.default_rng(99)
    # soft-thresholding is nonexpansive
    shrink_ok = True
    for _ in range(100):
        a, b = rng.normal(size=(2, 20))
        gamma = float(rng.uniform(0.0, 2.0))
        shrink_ok &= np.linalg.norm(shrink(a, gamma) - shrink(b, gamma)) <= (
            np.linalg.norm(a - b) + 1e-12
        )
    # ball projection is idempotent
    ball_gap = 0.0
    for _ in range(50):
        v, y = rng.normal(size=(2, 15))
        sigma = float(rng.uniform(0.1, 2.0))
        p1 = project_ball(v, y, sigma)
        ball_gap = max(ball_gap, float(np.max(np.abs(project_ball(p1, y, sigma) - p1))))
    # the coupling projection lands on {v = A w}
    couple_gap = 0.0
    for _ in range(10):
        dm = _random_design(rng, 6, 4)
        aug = AugmentedMatrix(dm, 1.7)
        fact = precompute_normal_factorization(aug)
        w, v = rng.normal(size=10), rng.normal(size=6)
        w2, v2 = prox_g2(w, v, fact, aug)
        a_w2 = w2[:6] / 1.7 + dm.values @ w2[6:]
        couple_gap = max(couple_gap, float(np.max(np.abs(a_w2 - v2))))
    # separable prox matches brute-force 1-d minimizations
    g1_gap = 0.0
    for w0, v0, gamma, y0, sigma in (
        (1.7, 2.0, 0.6, 0.5, 0.3),
        (-0.4, 0.45, 0.9, 0.5, 0.3),
        (0.2, -3.0, 1.5, 1.0, 0.8),
    ):
        w_hat, v_hat = prox_g1(
            np.array([w0]), np.array([v0]), gamma, np.array([y0]), sigma
        )
        w_ref = _grid_prox_1d(
            lambda x: 0.5 * (x - w0) ** 2 + gamma * np.abs(x), w0, abs(w0) + 1.0
        )
        vs = np.linspace(y0 - sigma, y0 + sigma, 4001)
        v_ref = vs[int(np.argmin(0.5 * (vs - v0) ** 2))]
        if abs(v0 - y0) <= sigma:
            v_ref = v0
        g1_gap = max(g1_gap, abs(w_hat[0] - w_ref), abs(v_hat[0] - v_ref))
    ok = shrink_ok and ball_gap <= 1e-14 and couple_gap <= 1e-10 and g1_gap <= 1e-6
    notes = [
        f"ball-projection idempotence gap: {ball_gap:.1e} (need <= 1e-14)",
        f"coupling-set residual: {couple_gap:.1e} (need <= 1e-10)",
        f"separable prox vs grid: {g1_gap:.1e} (need <= 1e-6)",
    ]
    _report(capsys, 8, "proximal operator properties", ok, notes)
    assert shrink_ok and ball_gap <= 1e-14 and couple_gap <= 1e-10 and g1_gap <= 1e-6


# ---------------------------------------------------------------------------
# criterion 9: null space property certifier
# ---------------------------------------------------------------------------


def test_criterion_09_nsp_certifier(capsys):
    pair = nsp_check(np.array([[1.0, 1.0]]), 1)
    ok_pair = pair.alpha_max == 0.5 and not pair.nsp_holds
    eye = nsp_check(np.eye(3), 1)
    ok_eye = eye.alpha_max == 0.0 and eye.nsp_holds
    # random wide matrix against a dense angular sweep of its 2-d kernel
    rng = np.random.default_rng(7)
    A = rng.normal(size=(4, 6))
    rep = nsp_check(A, 2)
    N = kernel_basis(A)
    assert N.shape == (6, 2)
    theta = np.linspace(0.0, np.pi, 400000, endpoint=False)
    V = np.abs(N @ np.vstack([np.cos(theta), np.sin(theta)]))
    V.sort(axis=0)
    angular = float(np.max(V[-2:].sum(axis=0) / V.sum(axis=0)))
    grid_gap = abs(rep.alpha_max - angular)
    ok_grid = grid_gap <= 1e-4
    alphas = [nsp_check(A, s).alpha_max for s in (1, 2, 3)]
    ok_mono = all(b >= a - 1e-12 for a, b in zip(alphas, alphas[1:]))
    ok = ok_pair and ok_eye and ok_grid and ok_mono
    notes = [
        f"[1 1] worst ratio: {pair.alpha_max} (exact 0.5, property fails)",
        f"angular-grid gap on random 4x6: {grid_gap:.2e} (need <= 1e-4)",
        f"worst ratios by order: {[round(a, 4) for a in alphas]} (nondecreasing)",
    ]
    _report(capsys, 9, "null space property certifier", ok, notes)
    assert ok_pair and ok_eye and ok_grid and ok_mono


# ---------------------------------------------------------------------------
# criterion 10: concentration exponents and sample-size calculators
# ---------------------------------------------------------------------------


def _iid_condition_restated(m, r, delta, C2, C3):
    # holds iff r <= (kappa - log 2) / (3 delta log m) in closed form
    zeta = m ** (-delta)
    cap = (m ** (1.0 - 2.0 * delta) / (C2 + C3 * zeta) - math.log(2.0)) / (
        3.0 * delta * math.log(m)
    )
    return r <= cap


def test_criterion_10_bounds_suite(capsys):
    c1 = 2.0 * (1.0 + 4.0 * math.exp(-2.0))
    hand_gaps = [
        abs(kappa_iid(1.0, 1, 1.0, 1.0) - (0.5 - math.log(2.0))),
        abs(
            kappa_alpha(1.0, 1000, alpha_bar=1.0, beta=1.0, c_alpha=8.0, C0=1.5, C2=1.0)
            - (31.0 / 2.0 - math.log(c1))
        ),
        abs(
            kappa_cmix(1.0, math.e**2, sigma2=1.0, B=3.0, beta=2.0)
            - (math.e**2 / 32.0 - math.log(4.0))
        ),
        abs(
            kappa_ue(1.0, 7, lambda_doeblin=1.0, k0=1.0, B=1.0)
            - (0.75 - math.log(2.0))
        ),
    ]
    ok_hand = max(hand_gaps) <= 1e-12
    rng = np.random.default_rng(2025)
    agree = 0
    for _ in range(1000):
        m = int(rng.integers(2, 10**6))
        delta = float(rng.uniform(0.02, 0.49))
        r = int(rng.integers(0, 500))
        C2 = float(rng.uniform(0.2, 4.0))
        C3 = float(rng.uniform(0.2, 4.0))
        spec = KappaSpec("iid", {"C2": C2, "C3": C3})
        if check_kappa_condition(spec, delta, r, m) == _iid_condition_restated(
            m, r, delta, C2, C3
        ):
            agree += 1
    ok_tuples = agree == 1000
    # boundary of the exact-recovery sample bound
    b_x, b_theta, s, d_const, delta, p = 1.3, 0.7, 4, 0.35, 0.4, 3
    m_star = min_samples_nsp(b_x, b_theta, s, d_const, delta, p)

    def satisfies(m):
        lhs = max(3.0 + 3.0 * b_x**p, 4.0 / d_const)
        return m >= lhs ** (1.0 / delta) and m > (
            4.0 + 8.0 * s * (1.0 + (b_x + b_theta) ** p)
        ) / d_const

    ok_boundary = satisfies(m_star) and not satisfies(m_star - 1)
    ok = ok_hand and ok_tuples and ok_boundary
    notes = [
        f"worst hand-value gap across four exponent evaluators: {max(hand_gaps):.1e}",
        f"condition checker vs closed form: {agree}/1000 random tuples agree",
        f"minimal sample count {m_star} satisfies the bound; {m_star - 1} violates it",
    ]
    _report(capsys, 10, "concentration exponents and sample-size bounds", ok, notes)
    assert ok_hand and ok_tuples and ok_boundary
