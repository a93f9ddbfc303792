"""robustfit: sparse polynomial recovery from dependent data with outliers."""

from robustfit.datagen import (
    CorruptionResult,
    CorruptionSpec,
    Dataset,
    GroundTruthPolynomial,
    MarkovChainModel,
    add_model_mismatch,
    build_dataset,
    coefficient_vector,
    dataset_from_csv,
    dataset_to_csv,
    evaluate_polynomial,
    gen_alpha_mixing,
    gen_iid,
    gen_markov_chain,
    inject_corruption,
    make_polynomial,
    markov_chain_model,
    simulate_markov_chain,
)
from robustfit.dictionary import (
    AugmentedMatrix,
    DesignMatrix,
    MultiIndex,
    apply_augmented,
    apply_augmented_adjoint,
    build_dictionary,
    enumerate_multi_indices,
    evaluate_monomial,
    n_monomials,
    normalize_columns,
)
from robustfit.experiments import (
    REPORT_COLUMNS,
    ExperimentReport,
    SweepCell,
    TrialConfig,
    TrialResult,
    plot_data_text,
    preset_example,
    report_from_csv,
    report_to_csv,
    run_sweep,
    run_trial,
)
from robustfit.solver import (
    NormalFactorization,
    RecoverySolution,
    SolverParams,
    SolverState,
    douglas_rachford,
    precompute_normal_factorization,
    project_ball,
    prox_g1,
    prox_g2,
    shrink,
    solution_from_json,
    solution_to_json,
    threshold_support,
)
from robustfit.theory import (
    KappaSpec,
    LpResult,
    NspReport,
    check_kappa_condition,
    estimate_D,
    kappa_alpha,
    kappa_cmix,
    kappa_iid,
    kappa_ue,
    kappa_value,
    l1_min_exact,
    lambda_threshold,
    min_samples_kappa,
    min_samples_nsp,
    min_samples_stable_nsp,
    nsp_check,
    simplex_lp,
)

__version__ = "0.1.0"

__all__ = [
    # data generation
    "GroundTruthPolynomial",
    "make_polynomial",
    "CorruptionSpec",
    "CorruptionResult",
    "Dataset",
    "MarkovChainModel",
    "gen_iid",
    "gen_alpha_mixing",
    "gen_markov_chain",
    "markov_chain_model",
    "simulate_markov_chain",
    "inject_corruption",
    "evaluate_polynomial",
    "add_model_mismatch",
    "coefficient_vector",
    "build_dataset",
    "dataset_to_csv",
    "dataset_from_csv",
    # dictionary
    "AugmentedMatrix",
    "DesignMatrix",
    "MultiIndex",
    "apply_augmented",
    "apply_augmented_adjoint",
    "build_dictionary",
    "enumerate_multi_indices",
    "evaluate_monomial",
    "n_monomials",
    "normalize_columns",
    # solver
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
    # theory
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
    # experiments
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
    "__version__",
]
