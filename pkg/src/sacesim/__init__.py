"""Monte Carlo study engine for RCT outcomes truncated by death.

Compares complete case analysis, multiple imputation, and a survivor-average
causal effect estimator across a factorial grid of treatment effects on
outcome and on survival, with deterministic parallel execution.
"""

__version__ = "0.1.0"

from .config import (
    DgmParams,
    RunPlan,
    ScenarioSpec,
    default_dgm_params,
    default_run_plan,
    load_run_plan,
    plan_n_sim,
    save_run_plan,
    scenario_grid,
)
from .dgm import (
    TrialDataset,
    calibrate_survival_intercept,
    dump_trial_csv,
    generate_trial,
)
from .estimators import (
    EstimateRecord,
    bounds_chiba,
    bounds_zhang,
    estimate_cca,
    estimate_mi,
    estimate_sace_hayden,
    impute_outcomes,
    pool_rubin,
)
from .metrics import (
    PerformanceSummary,
    bounds_containment,
    compute_bias,
    compute_coverage,
    compute_mse,
    coverage_band,
    mean_estimate,
)
from .oracle import (
    EstimandSet,
    StratumLabel,
    average_reference,
    classify_stratum,
    sace_reference,
    strata_census,
)
from .runner import (
    SimulationRecord,
    StudyResult,
    emit_plot_data,
    export_results,
    run_grid,
    run_scenario,
)
from .stats import (
    FitResult,
    RngStream,
    fit_logistic,
    fit_ols,
    inv_logit,
    norm_quantile,
    sample_mvn,
    spawn_stream,
    wald_ci,
)

__all__ = [
    "DgmParams", "RunPlan", "ScenarioSpec", "default_dgm_params", "default_run_plan",
    "load_run_plan", "plan_n_sim", "save_run_plan", "scenario_grid",
    "TrialDataset", "calibrate_survival_intercept", "dump_trial_csv", "generate_trial",
    "EstimateRecord", "bounds_chiba", "bounds_zhang", "estimate_cca", "estimate_mi",
    "estimate_sace_hayden", "impute_outcomes", "pool_rubin",
    "PerformanceSummary", "bounds_containment", "compute_bias", "compute_coverage",
    "compute_mse", "coverage_band", "mean_estimate",
    "EstimandSet", "StratumLabel", "average_reference", "classify_stratum",
    "sace_reference", "strata_census",
    "SimulationRecord", "StudyResult", "emit_plot_data", "export_results",
    "run_grid", "run_scenario",
    "FitResult", "RngStream", "fit_logistic", "fit_ols", "inv_logit",
    "norm_quantile", "sample_mvn", "spawn_stream", "wald_ci",
]
