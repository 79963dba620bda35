"""Scenario definitions, data-generating parameters, and simulation run plans.

The default parameter set targets a very-preterm-infant trial: a cognitive
score with marginal mean ~100 and SD ~15, survival to follow-up around 84%,
and gestational age as the dominant survival predictor. Every number here is
an overridable default of the plan file, not an estimate from real data.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field, replace

import numpy as np

from .stats import norm_quantile

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

COVARIATE_NAMES = ("gestational_age", "head_circumference", "ses", "apgar")

SACE_COVARIATES_DEFAULT = ("gestational_age", "head_circumference", "apgar")
MI_COVARIATES_DEFAULT = ("gestational_age", "head_circumference", "ses")

APGAR_VALUES = tuple(range(1, 11))
SES_VALUES = tuple(range(2, 13))

DEFAULT_N_SIM = 1300
DEFAULT_MI_COUNT = 10
DEFAULT_BOOTSTRAP_REPS = 200
DEFAULT_CONFIDENCE_LEVEL = 0.95
DEFAULT_CHIBA_ALPHA_RANGE = (0.0, 2.0)
DEFAULT_MASTER_SEED = 20240811


class PlanValidationError(ValueError):
    """A plan file or plan object violates the documented schema."""


@dataclass(frozen=True)
class ScenarioSpec:
    """One cell of the scenario grid.

    effect_on_outcome is the mean difference on the score scale;
    effect_on_survival_logodds is the log odds ratio for survival.
    """

    id: str
    effect_on_outcome: float
    effect_on_survival_logodds: float
    sace_covariate_set: tuple[str, ...] = SACE_COVARIATES_DEFAULT
    mi_covariate_set: tuple[str, ...] = MI_COVARIATES_DEFAULT

    @property
    def effect_on_survival_or(self) -> float:
        return math.exp(self.effect_on_survival_logodds)


@dataclass(frozen=True)
class OutcomeCoefs:
    """Linear model for the score: intercept + GA(days) + HC(cm) + SES, noise SD."""

    intercept: float
    gestational_age: float
    head_circumference: float
    ses: float
    residual_sd: float


@dataclass(frozen=True)
class SurvivalCoefs:
    """Log-odds model for survival: intercept + GA(days) + HC(cm) + Apgar."""

    intercept: float
    gestational_age: float
    head_circumference: float
    apgar: float


@dataclass(frozen=True)
class CovariateModel:
    """Apgar-stratified covariate distributions.

    Apgar is categorical on 1..10; (GA, HC) are bivariate normal around
    per-Apgar means with one shared 2x2 covariance; SES is categorical on
    2..12 with per-Apgar probabilities.
    """

    apgar_probs: tuple[float, ...]
    ga_means: tuple[float, ...]
    hc_means: tuple[float, ...]
    ga_hc_covariance: tuple[tuple[float, float], tuple[float, float]]
    ses_probs: tuple[tuple[float, ...], ...]


@dataclass(frozen=True)
class DgmParams:
    outcome: OutcomeCoefs
    survival: SurvivalCoefs
    covariates: CovariateModel
    n_per_trial: int = 500
    allocation: tuple[int, int] = (250, 250)


@dataclass(frozen=True)
class RunPlan:
    master_seed: int
    scenarios: tuple[ScenarioSpec, ...]
    dgm: DgmParams
    n_sim: int = DEFAULT_N_SIM
    confidence_level: float = DEFAULT_CONFIDENCE_LEVEL
    mi_count: int = DEFAULT_MI_COUNT
    bootstrap_reps: int = DEFAULT_BOOTSTRAP_REPS
    chiba_alpha_range: tuple[float, float] = DEFAULT_CHIBA_ALPHA_RANGE


def scenario_grid() -> list[ScenarioSpec]:
    """The 9 scenarios: {+5, 0, -5} score effect x {2, 1, 0.5} survival odds ratio.

    Labels run A..I with the outcome effect varying slowest, matching the
    usual presentation order.
    """
    grid = []
    labels = iter("ABCDEFGHI")
    for outcome_effect in (5.0, 0.0, -5.0):
        for logodds in (math.log(2.0), 0.0, math.log(0.5)):
            grid.append(ScenarioSpec(
                id=next(labels),
                effect_on_outcome=outcome_effect,
                effect_on_survival_logodds=logodds,
            ))
    return grid


def plan_n_sim(sigma: float, delta: float, alpha: float) -> int:
    """Replications needed so the estimate's Monte Carlo error stays below delta.

    ceil((z_{1-alpha/2} * sigma / delta)^2), with sigma the anticipated
    standard error of a single estimate.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    z = norm_quantile(1.0 - alpha / 2.0)
    return math.ceil((z * sigma / delta) ** 2)


def _ses_distribution(apgar: int) -> tuple[float, ...]:
    # Mid-peaked SES distribution, drifting slightly upward with Apgar.
    center = 6.5 + 0.1 * apgar
    values = np.arange(2, 13, dtype=float)
    weights = np.exp(-((values - center) ** 2) / (2.0 * 2.2**2))
    weights /= weights.sum()
    return tuple(float(w) for w in weights)


def default_covariate_model() -> CovariateModel:
    """Default covariate distributions for a very-preterm cohort.

    Apgar skews high; GA/HC means rise with Apgar (GA 180-200 days,
    HC 24-26.3 cm); the shared covariance uses SDs of 12 days and 1.8 cm
    with correlation 0.6.
    """
    return CovariateModel(
        apgar_probs=(0.005, 0.01, 0.02, 0.04, 0.06, 0.09, 0.13, 0.20, 0.25, 0.195),
        ga_means=tuple(178.0 + 2.2 * a for a in APGAR_VALUES),
        hc_means=tuple(23.8 + 0.25 * a for a in APGAR_VALUES),
        ga_hc_covariance=((144.0, 12.96), (12.96, 3.24)),
        ses_probs=tuple(_ses_distribution(a) for a in APGAR_VALUES),
    )


def default_dgm_params() -> DgmParams:
    """Default generating model.

    Outcome coefficients give marginal mean ~100 and SD ~15. Survival
    coefficients make gestational age dominate head circumference
    (0.10 x 12.7 days vs 0.06 x 1.86 cm on the SD scale); the intercept is
    frozen from `calibrate_survival_intercept` so marginal survival under a
    null survival effect is ~0.84.
    """
    return DgmParams(
        outcome=OutcomeCoefs(
            intercept=-32.23,
            gestational_age=0.45,
            head_circumference=1.5,
            ses=0.8,
            residual_sd=12.7,
        ),
        survival=SurvivalCoefs(
            intercept=-20.676,
            gestational_age=0.10,
            head_circumference=0.06,
            apgar=0.25,
        ),
        covariates=default_covariate_model(),
        n_per_trial=500,
        allocation=(250, 250),
    )


def default_run_plan(master_seed: int = DEFAULT_MASTER_SEED) -> RunPlan:
    return RunPlan(
        master_seed=master_seed,
        scenarios=tuple(scenario_grid()),
        dgm=default_dgm_params(),
    )


def _check(condition: bool, field_name: str, message: str) -> None:
    if not condition:
        raise PlanValidationError(f"{field_name}: {message}")


def validate_scenario(spec: ScenarioSpec) -> None:
    _check(bool(spec.id), "scenarios.id", "must be a nonempty label")
    for name, subset in (("sace_covariates", spec.sace_covariate_set),
                         ("mi_covariates", spec.mi_covariate_set)):
        _check(len(subset) > 0, f"scenarios.{name}", "must be nonempty")
        unknown = [c for c in subset if c not in COVARIATE_NAMES]
        _check(not unknown, f"scenarios.{name}",
               f"unknown covariates {unknown}; allowed: {list(COVARIATE_NAMES)}")
        _check(len(set(subset)) == len(subset), f"scenarios.{name}", "contains duplicates")


def validate_dgm(dgm: DgmParams) -> None:
    _check(dgm.outcome.residual_sd > 0, "dgm.outcome.residual_sd", "must be positive")
    cov = np.asarray(dgm.covariates.ga_hc_covariance, dtype=float)
    _check(cov.shape == (2, 2), "dgm.covariates.ga_hc_covariance", "must be 2x2")
    _check(bool(np.allclose(cov, cov.T)), "dgm.covariates.ga_hc_covariance", "must be symmetric")
    eigvals = np.linalg.eigvalsh(cov)
    _check(bool(eigvals.min() > 0), "dgm.covariates.ga_hc_covariance",
           "must be positive definite")
    probs = np.asarray(dgm.covariates.apgar_probs, dtype=float)
    _check(probs.shape == (10,), "dgm.covariates.apgar_probs", "must have 10 entries (Apgar 1..10)")
    _check(bool((probs >= 0).all()), "dgm.covariates.apgar_probs", "must be nonnegative")
    _check(abs(probs.sum() - 1.0) < 1e-8, "dgm.covariates.apgar_probs", "must sum to 1")
    _check(len(dgm.covariates.ga_means) == 10, "dgm.covariates.ga_means", "must have 10 entries")
    _check(len(dgm.covariates.hc_means) == 10, "dgm.covariates.hc_means", "must have 10 entries")
    _check(len(dgm.covariates.ses_probs) == 10, "dgm.covariates.ses_probs",
           "must have one distribution per Apgar category")
    for i, row in enumerate(dgm.covariates.ses_probs):
        rowarr = np.asarray(row, dtype=float)
        _check(rowarr.shape == (11,), f"dgm.covariates.ses_probs[{i}]",
               "must have 11 entries (SES 2..12)")
        _check(bool((rowarr >= 0).all()), f"dgm.covariates.ses_probs[{i}]", "must be nonnegative")
        _check(abs(rowarr.sum() - 1.0) < 1e-8, f"dgm.covariates.ses_probs[{i}]", "must sum to 1")
    _check(dgm.n_per_trial >= 2, "dgm.n_per_trial", "must be at least 2")
    _check(len(dgm.allocation) == 2, "dgm.allocation", "must have two arm counts")
    _check(all(a > 0 for a in dgm.allocation), "dgm.allocation", "arm counts must be positive")
    _check(sum(dgm.allocation) == dgm.n_per_trial, "dgm.allocation",
           f"arm counts {dgm.allocation} must sum to n_per_trial={dgm.n_per_trial}")


def validate_plan(plan: RunPlan) -> None:
    _check(plan.n_sim >= 2, "n_sim", f"must be at least 2, got {plan.n_sim}")
    _check(0.0 < plan.confidence_level < 1.0, "confidence_level",
           f"must be in (0, 1), got {plan.confidence_level}")
    _check(plan.mi_count >= 2, "mi_count", f"must be at least 2, got {plan.mi_count}")
    _check(plan.bootstrap_reps >= 0, "bootstrap_reps", "must be nonnegative")
    _check(len(plan.scenarios) > 0, "scenarios", "must not be empty")
    ids = [s.id for s in plan.scenarios]
    _check(len(set(ids)) == len(ids), "scenarios", f"duplicate scenario ids in {ids}")
    lo, hi = plan.chiba_alpha_range
    _check(lo <= hi, "chiba_alpha_range", f"lower bound {lo} exceeds upper bound {hi}")
    for spec in plan.scenarios:
        validate_scenario(spec)
    validate_dgm(plan.dgm)


# --- plan file (TOML) ---------------------------------------------------


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, (tuple, list)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {type(value)!r} to TOML")


def dumps_plan(plan: RunPlan) -> str:
    """Serialize a plan to its canonical TOML text (floats round-trip exactly)."""
    lines = [
        "# Simulation run plan",
        f"master_seed = {plan.master_seed}",
        f"n_sim = {plan.n_sim}",
        f"confidence_level = {_toml_value(plan.confidence_level)}",
        f"mi_count = {plan.mi_count}",
        f"bootstrap_reps = {plan.bootstrap_reps}",
        f"chiba_alpha_range = {_toml_value(plan.chiba_alpha_range)}",
        "",
        "[dgm]",
        f"n_per_trial = {plan.dgm.n_per_trial}",
        f"allocation = {_toml_value(plan.dgm.allocation)}",
        "",
        "[dgm.outcome]",
        f"intercept = {_toml_value(plan.dgm.outcome.intercept)}",
        f"gestational_age = {_toml_value(plan.dgm.outcome.gestational_age)}",
        f"head_circumference = {_toml_value(plan.dgm.outcome.head_circumference)}",
        f"ses = {_toml_value(plan.dgm.outcome.ses)}",
        f"residual_sd = {_toml_value(plan.dgm.outcome.residual_sd)}",
        "",
        "[dgm.survival]",
        f"intercept = {_toml_value(plan.dgm.survival.intercept)}",
        f"gestational_age = {_toml_value(plan.dgm.survival.gestational_age)}",
        f"head_circumference = {_toml_value(plan.dgm.survival.head_circumference)}",
        f"apgar = {_toml_value(plan.dgm.survival.apgar)}",
        "",
        "[dgm.covariates]",
        f"apgar_probs = {_toml_value(plan.dgm.covariates.apgar_probs)}",
        f"ga_means = {_toml_value(plan.dgm.covariates.ga_means)}",
        f"hc_means = {_toml_value(plan.dgm.covariates.hc_means)}",
        f"ga_hc_covariance = {_toml_value(plan.dgm.covariates.ga_hc_covariance)}",
        f"ses_probs = {_toml_value(plan.dgm.covariates.ses_probs)}",
    ]
    for spec in plan.scenarios:
        lines += [
            "",
            "[[scenarios]]",
            f"id = {_toml_value(spec.id)}",
            f"effect_on_outcome = {_toml_value(spec.effect_on_outcome)}",
            f"effect_on_survival_logodds = {_toml_value(spec.effect_on_survival_logodds)}",
            f"sace_covariates = {_toml_value(spec.sace_covariate_set)}",
            f"mi_covariates = {_toml_value(spec.mi_covariate_set)}",
        ]
    return "\n".join(lines) + "\n"


def save_run_plan(plan: RunPlan, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(dumps_plan(plan))


def _expect_table(data: dict, key: str) -> dict:
    value = data.get(key, {})
    if not isinstance(value, dict):
        raise PlanValidationError(f"{key}: expected a table")
    return value


def _get_scalar(table: dict, key: str, kind, default, context: str):
    if key not in table:
        return default
    value = table[key]
    if kind is float and isinstance(value, int):
        value = float(value)
    if not isinstance(value, kind):
        raise PlanValidationError(f"{context}{key}: expected {kind.__name__}, "
                                  f"got {type(value).__name__}")
    return value


def _get_float_list(table: dict, key: str, default, context: str):
    if key not in table:
        return default
    value = table[key]
    if not isinstance(value, list):
        raise PlanValidationError(f"{context}{key}: expected an array")
    out = []
    for item in value:
        if isinstance(item, list):
            out.append(tuple(float(x) for x in item))
        else:
            out.append(float(item))
    return tuple(out)


def _parse_scenario(table: dict, index: int) -> ScenarioSpec:
    context = f"scenarios[{index}]."
    if "id" not in table:
        raise PlanValidationError(f"scenarios[{index}].id: required")
    if "effect_on_outcome" not in table or "effect_on_survival_logodds" not in table:
        raise PlanValidationError(
            f"scenarios[{index}]: effect_on_outcome and effect_on_survival_logodds are required")
    sace = table.get("sace_covariates", list(SACE_COVARIATES_DEFAULT))
    mi = table.get("mi_covariates", list(MI_COVARIATES_DEFAULT))
    if not isinstance(sace, list) or not isinstance(mi, list):
        raise PlanValidationError(f"{context}sace_covariates/mi_covariates: expected arrays")
    return ScenarioSpec(
        id=str(table["id"]),
        effect_on_outcome=float(table["effect_on_outcome"]),
        effect_on_survival_logodds=float(table["effect_on_survival_logodds"]),
        sace_covariate_set=tuple(str(c) for c in sace),
        mi_covariate_set=tuple(str(c) for c in mi),
    )


def load_run_plan(path) -> RunPlan:
    """Read and validate a TOML run plan, filling documented defaults."""
    try:
        with open(path, "rb") as handle:
            data = _toml.load(handle)
    except FileNotFoundError:
        raise
    except _toml.TOMLDecodeError as exc:
        raise PlanValidationError(f"{path}: not valid TOML: {exc}") from exc

    if "master_seed" not in data:
        raise PlanValidationError("master_seed: required")

    defaults = default_dgm_params()
    dgm_table = _expect_table(data, "dgm")
    outcome_table = _expect_table(dgm_table, "outcome")
    survival_table = _expect_table(dgm_table, "survival")
    cov_table = _expect_table(dgm_table, "covariates")

    outcome = OutcomeCoefs(
        intercept=_get_scalar(outcome_table, "intercept", float,
                              defaults.outcome.intercept, "dgm.outcome."),
        gestational_age=_get_scalar(outcome_table, "gestational_age", float,
                                    defaults.outcome.gestational_age, "dgm.outcome."),
        head_circumference=_get_scalar(outcome_table, "head_circumference", float,
                                       defaults.outcome.head_circumference, "dgm.outcome."),
        ses=_get_scalar(outcome_table, "ses", float, defaults.outcome.ses, "dgm.outcome."),
        residual_sd=_get_scalar(outcome_table, "residual_sd", float,
                                defaults.outcome.residual_sd, "dgm.outcome."),
    )
    survival = SurvivalCoefs(
        intercept=_get_scalar(survival_table, "intercept", float,
                              defaults.survival.intercept, "dgm.survival."),
        gestational_age=_get_scalar(survival_table, "gestational_age", float,
                                    defaults.survival.gestational_age, "dgm.survival."),
        head_circumference=_get_scalar(survival_table, "head_circumference", float,
                                       defaults.survival.head_circumference, "dgm.survival."),
        apgar=_get_scalar(survival_table, "apgar", float,
                          defaults.survival.apgar, "dgm.survival."),
    )
    covariates = CovariateModel(
        apgar_probs=_get_float_list(cov_table, "apgar_probs",
                                    defaults.covariates.apgar_probs, "dgm.covariates."),
        ga_means=_get_float_list(cov_table, "ga_means",
                                 defaults.covariates.ga_means, "dgm.covariates."),
        hc_means=_get_float_list(cov_table, "hc_means",
                                 defaults.covariates.hc_means, "dgm.covariates."),
        ga_hc_covariance=_get_float_list(cov_table, "ga_hc_covariance",
                                         defaults.covariates.ga_hc_covariance,
                                         "dgm.covariates."),
        ses_probs=_get_float_list(cov_table, "ses_probs",
                                  defaults.covariates.ses_probs, "dgm.covariates."),
    )
    allocation = dgm_table.get("allocation", list(defaults.allocation))
    if not isinstance(allocation, list) or len(allocation) != 2:
        raise PlanValidationError("dgm.allocation: expected an array of two arm counts")
    dgm = DgmParams(
        outcome=outcome,
        survival=survival,
        covariates=covariates,
        n_per_trial=_get_scalar(dgm_table, "n_per_trial", int, defaults.n_per_trial, "dgm."),
        allocation=(int(allocation[0]), int(allocation[1])),
    )

    raw_scenarios = data.get("scenarios", None)
    if raw_scenarios is None:
        scenarios = tuple(scenario_grid())
    else:
        if not isinstance(raw_scenarios, list):
            raise PlanValidationError("scenarios: expected an array of tables")
        scenarios = tuple(_parse_scenario(t, i) for i, t in enumerate(raw_scenarios))

    chiba = data.get("chiba_alpha_range", list(DEFAULT_CHIBA_ALPHA_RANGE))
    if not isinstance(chiba, list) or len(chiba) != 2:
        raise PlanValidationError("chiba_alpha_range: expected [lower, upper]")

    plan = RunPlan(
        master_seed=_get_scalar(data, "master_seed", int, None, ""),
        scenarios=scenarios,
        dgm=dgm,
        n_sim=_get_scalar(data, "n_sim", int, DEFAULT_N_SIM, ""),
        confidence_level=_get_scalar(data, "confidence_level", float,
                                     DEFAULT_CONFIDENCE_LEVEL, ""),
        mi_count=_get_scalar(data, "mi_count", int, DEFAULT_MI_COUNT, ""),
        bootstrap_reps=_get_scalar(data, "bootstrap_reps", int, DEFAULT_BOOTSTRAP_REPS, ""),
        chiba_alpha_range=(float(chiba[0]), float(chiba[1])),
    )
    validate_plan(plan)
    return plan


def restrict_plan(plan: RunPlan, scenario_ids=None, n_sim=None, master_seed=None) -> RunPlan:
    """A copy of the plan limited to some scenarios and/or overridden knobs."""
    changes = {}
    if scenario_ids is not None:
        wanted = list(scenario_ids)
        known = {s.id: s for s in plan.scenarios}
        missing = [sid for sid in wanted if sid not in known]
        if missing:
            raise PlanValidationError(f"scenarios: unknown ids {missing}")
        changes["scenarios"] = tuple(known[sid] for sid in wanted)
    if n_sim is not None:
        changes["n_sim"] = n_sim
    if master_seed is not None:
        changes["master_seed"] = master_seed
    out = replace(plan, **changes)
    validate_plan(out)
    return out
