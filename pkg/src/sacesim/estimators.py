"""The compared analyses, all operating on the observed view of a trial only.

Point-estimate methods: complete case analysis (CCA), the survivor-average
causal effect estimator of Hayden-type cross-arm survival weighting (SACE),
and multiple imputation with Rubin pooling (MI). Interval methods: trimming
bounds under monotone survival (Zhang-style) and a sensitivity-shift bound
(Chiba-style).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dgm import TrialDataset
from .stats import (
    InsufficientDataError,
    RngStream,
    SingularMatrixError,
    _fit_logistic_batch,
    fit_logistic,
    fit_ols,
    inv_logit,
    wald_ci,
)

METHOD_CCA = "CCA"
METHOD_SACE = "SACE"
METHOD_MI = "MI"
METHOD_BOUNDS_ZHANG = "SACE_BOUNDS_ZHANG"
METHOD_BOUNDS_CHIBA = "SACE_BOUNDS_CHIBA"

COVSET_ALL = "ALL"
COVSET_NO_HC = "NO_HC"
COVSET_NO_GA = "NO_GA"
COVSET_LABELS = (COVSET_ALL, COVSET_NO_HC, COVSET_NO_GA)

UNSTABLE_BOOTSTRAP_FRACTION = 0.5


class DegenerateArmError(ValueError):
    """An arm lacks the survivors (or deaths) needed for the analysis."""


class MonotonicityDirectionError(ValueError):
    """Observed survival rates contradict the assumed monotone direction."""


@dataclass(frozen=True)
class EstimateRecord:
    """One method's result on one simulated trial.

    Point-estimate methods carry (estimate, se, ci_*); bounds methods carry
    (bound_lower, bound_upper) and no standard error.
    """

    method: str
    covariate_set: str
    estimate: float | None
    se: float | None
    ci_lower: float | None
    ci_upper: float | None
    n_analyzed: float
    bound_lower: float | None = None
    bound_upper: float | None = None
    unstable: bool = False
    error: str | None = None


def resolve_covariate_set(base: tuple[str, ...], label: str) -> tuple[str, ...]:
    """Apply an omission variant to a scenario's covariate name set."""
    if label == COVSET_ALL:
        return tuple(base)
    if label == COVSET_NO_HC:
        dropped = "head_circumference"
    elif label == COVSET_NO_GA:
        dropped = "gestational_age"
    else:
        raise ValueError(f"unknown covariate-set label {label!r}")
    remaining = tuple(c for c in base if c != dropped)
    if not remaining:
        raise ValueError(f"dropping {dropped} leaves no covariates in {base}")
    return remaining


def _design_matrix(trial: TrialDataset, covariates: tuple[str, ...],
                   with_treatment: bool = False) -> np.ndarray:
    columns = [np.ones(len(trial))]
    if with_treatment:
        columns.append(trial.z.astype(float))
    columns += [trial.covariates.column(name) for name in covariates]
    return np.column_stack(columns)


def estimate_cca(trial: TrialDataset, level: float = 0.95) -> EstimateRecord:
    """Survivors-only linear model of outcome on treatment."""
    survivors = trial.observed_survival == 1
    arm1 = survivors & (trial.z == 1)
    arm0 = survivors & (trial.z == 0)
    if arm1.sum() < 2 or arm0.sum() < 2:
        raise InsufficientDataError(
            f"complete case analysis needs >= 2 survivors per arm, "
            f"got {int(arm1.sum())} and {int(arm0.sum())}")
    design = np.column_stack([np.ones(int(survivors.sum())),
                              trial.z[survivors].astype(float)])
    fit = fit_ols(design, trial.observed_outcome[survivors])
    estimate = float(fit.coefficients[1])
    se = float(fit.standard_errors[1])
    lower, upper = wald_ci(estimate, se, level)
    return EstimateRecord(
        method=METHOD_CCA, covariate_set=COVSET_ALL, estimate=estimate, se=se,
        ci_lower=lower, ci_upper=upper, n_analyzed=float(survivors.sum()))


def _weighted_survivor_contrast(y1, s1, w1, y0, s0, w0):
    """Cross-weighted survivor mean difference plus its effective sample size."""
    den1 = float((s1 * w1).sum())
    den0 = float((s0 * w0).sum())
    if den1 <= 0.0 or den0 <= 0.0:
        raise DegenerateArmError("an arm has no (weighted) survivors")
    num1 = float((y1 * s1 * w1).sum())
    num0 = float((y0 * s0 * w0).sum())
    return num1 / den1 - num0 / den0, den1 + den0


def _cross_arm_probs(X_fit, s_fit, X_pred):
    """Survival probabilities for the other arm's patients, from one arm's fit.

    An arm without deaths skips the logistic fit and contributes certain
    survival, the estimator's limit in that case.
    """
    if s_fit.min() == 1:
        return np.ones(X_pred.shape[0]), None, True
    if s_fit.max() == 0:
        raise DegenerateArmError("an arm has no survivors to model")
    fit = fit_logistic(X_fit, s_fit)
    return inv_logit(X_pred @ fit.coefficients), fit.coefficients, fit.converged


def estimate_sace_hayden(trial: TrialDataset, covariates: tuple[str, ...],
                         bootstrap_reps: int, stream: RngStream | None,
                         level: float = 0.95, covariate_label: str = COVSET_ALL,
                         survival_probs=None) -> EstimateRecord:
    """Cross-arm survival-weighted survivor contrast.

    Per-arm logistic models of survival on the covariate set give each
    patient an estimated survival probability under the opposite arm; each
    arm's survivor outcomes are weighted by those probabilities and the
    weighted means differenced. The effective sample size is the sum of the
    two weight denominators. The standard error comes from a within-arm
    nonparametric bootstrap that refits both survival models per replicate.

    `survival_probs` is a test seam: a length-n array of opposite-arm
    survival probabilities that bypasses the logistic fits entirely.
    """
    arm1 = np.flatnonzero(trial.z == 1)
    arm0 = np.flatnonzero(trial.z == 0)
    s = trial.observed_survival.astype(float)
    y_filled = np.where(trial.observed_survival == 1, trial.observed_outcome, 0.0)

    s1, y1 = s[arm1], y_filled[arm1]
    s0, y0 = s[arm0], y_filled[arm0]
    if len(arm1) == 0 or len(arm0) == 0:
        raise DegenerateArmError("both arms must contain patients")

    injected = survival_probs is not None
    if injected:
        probs = np.asarray(survival_probs, dtype=float)
        w1, w0 = probs[arm1], probs[arm0]
        beta_for_arm1, beta_for_arm0 = None, None
        main_converged = True
    else:
        X1 = _design_matrix(trial, covariates)[arm1]
        X0 = _design_matrix(trial, covariates)[arm0]
        # w1 = p_hat(control) for arm-1 patients; w0 = p_hat(treated) for arm-0.
        w1, beta_for_arm1, conv0 = _cross_arm_probs(X0, s0, X1)
        w0, beta_for_arm0, conv1 = _cross_arm_probs(X1, s1, X0)
        main_converged = conv0 and conv1

    estimate, n_analyzed = _weighted_survivor_contrast(y1, s1, w1, y0, s0, w0)

    se = None
    ci_lower = None
    ci_upper = None
    unstable = not main_converged
    if bootstrap_reps > 0:
        if stream is None:
            raise ValueError("a stream is required when bootstrap_reps > 0")
        boot, bad_fraction = _bootstrap_sace(
            y1, s1, y0, s0,
            X1 if not injected else None, X0 if not injected else None,
            w1, w0, beta_for_arm1, beta_for_arm0,
            bootstrap_reps, stream, injected)
        if boot.size < 2:
            raise DegenerateArmError("bootstrap produced fewer than 2 valid replicates")
        se = float(boot.std(ddof=1))
        ci_lower, ci_upper = wald_ci(estimate, se, level)
        unstable = unstable or bad_fraction > UNSTABLE_BOOTSTRAP_FRACTION

    return EstimateRecord(
        method=METHOD_SACE, covariate_set=covariate_label, estimate=float(estimate),
        se=se, ci_lower=ci_lower, ci_upper=ci_upper, n_analyzed=float(n_analyzed),
        unstable=unstable)


def _batch_cross_probs(X_fit, s_fit, X_pred, warm_beta):
    """Per-replicate cross-arm probabilities; returns (probs, fit_ok, converged)."""
    n_rep = X_fit.shape[0]
    probs = np.ones((n_rep, X_pred.shape[1]))
    ok = np.ones(n_rep, dtype=bool)
    converged = np.ones(n_rep, dtype=bool)
    any_death = s_fit.min(axis=1) == 0
    any_alive = s_fit.max(axis=1) == 1
    ok &= any_alive  # all-deaths replicates cannot be used
    needs_fit = any_death & any_alive
    fit_idx = np.flatnonzero(needs_fit)
    if fit_idx.size:
        warm = None
        if warm_beta is not None:
            warm = np.tile(warm_beta, (fit_idx.size, 1))
        try:
            beta, conv = _fit_logistic_batch(X_fit[fit_idx], s_fit[fit_idx], beta0=warm)
        except SingularMatrixError:
            beta = np.zeros((fit_idx.size, X_fit.shape[2]))
            conv = np.zeros(fit_idx.size, dtype=bool)
            for row, item in enumerate(fit_idx):
                try:
                    b, c = _fit_logistic_batch(X_fit[item:item + 1], s_fit[item:item + 1],
                                               beta0=None if warm_beta is None
                                               else warm_beta[None, :])
                    beta[row], conv[row] = b[0], c[0]
                except SingularMatrixError:
                    ok[item] = False
        eta = np.matmul(X_pred[fit_idx], beta[:, :, None])[:, :, 0]
        probs[fit_idx] = inv_logit(eta)
        converged[fit_idx] = conv
    return probs, ok, converged


def _bootstrap_sace(y1, s1, y0, s0, X1, X0, w1, w0, beta_for_arm1, beta_for_arm0,
                    reps, stream, injected):
    """Within-arm resampling; returns (valid replicate estimates, bad fit fraction)."""
    n1, n0 = len(y1), len(y0)
    gen = stream.generator
    idx1 = gen.integers(0, n1, size=(reps, n1))
    idx0 = gen.integers(0, n0, size=(reps, n0))

    s1b, y1b = s1[idx1], y1[idx1]
    s0b, y0b = s0[idx0], y0[idx0]

    if injected:
        w1b, w0b = w1[idx1], w0[idx0]
        ok = np.ones(reps, dtype=bool)
        nonconverged = np.zeros(reps, dtype=bool)
    else:
        X1b, X0b = X1[idx1], X0[idx0]
        w1b, ok0, conv0 = _batch_cross_probs(X0b, s0b, X1b, beta_for_arm1)
        w0b, ok1, conv1 = _batch_cross_probs(X1b, s1b, X0b, beta_for_arm0)
        ok = ok0 & ok1
        nonconverged = ~(conv0 & conv1)

    den1 = (s1b * w1b).sum(axis=1)
    den0 = (s0b * w0b).sum(axis=1)
    ok &= (den1 > 0) & (den0 > 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        estimates = ((y1b * s1b * w1b).sum(axis=1) / den1
                     - (y0b * s0b * w0b).sum(axis=1) / den0)
    valid = ok & np.isfinite(estimates)
    bad_fraction = float((~valid | nonconverged).mean())
    return estimates[valid], bad_fraction


def impute_outcomes(trial: TrialDataset, covariates: tuple[str, ...], m: int,
                    stream: RngStream) -> list[np.ndarray]:
    """Proper multiple imputation of death-truncated outcomes.

    A normal linear model of outcome on treatment plus the covariate set is
    fit to complete cases; each imputation draws the residual variance and
    coefficients from their posterior and then draws every missing outcome
    from its predictive distribution. Observed values are never altered.
    """
    if m < 2:
        raise ValueError(f"need at least 2 imputations, got m={m}")
    X = _design_matrix(trial, covariates, with_treatment=True)
    observed = trial.observed_survival == 1
    n_complete = int(observed.sum())
    n_params = X.shape[1]
    if n_complete < n_params + 2:
        raise InsufficientDataError(
            f"need at least {n_params + 2} complete cases, got {n_complete}")

    X_complete = X[observed]
    y_complete = trial.observed_outcome[observed]
    coef, _, rank, _ = np.linalg.lstsq(X_complete, y_complete, rcond=None)
    if rank < n_params:
        raise SingularMatrixError("imputation design is rank deficient on complete cases")
    resid = y_complete - X_complete @ coef
    rss = float(resid @ resid)
    dof = n_complete - n_params
    xtx_inv = np.linalg.inv(X_complete.T @ X_complete)
    chol = np.linalg.cholesky(xtx_inv)

    gen = stream.generator
    missing = ~observed
    n_missing = int(missing.sum())
    completed = []
    for _ in range(m):
        sigma2 = rss / gen.chisquare(dof)
        beta_star = coef + np.sqrt(sigma2) * (chol @ gen.standard_normal(n_params))
        filled = trial.observed_outcome.copy()
        if n_missing:
            filled[missing] = (X[missing] @ beta_star
                               + np.sqrt(sigma2) * gen.standard_normal(n_missing))
        completed.append(filled)
    return completed


def pool_rubin(estimates, variances) -> tuple[float, float]:
    """Rubin's rules: pooled mean and sqrt(W + (1 + 1/m) B)."""
    estimates = np.asarray(estimates, dtype=float)
    variances = np.asarray(variances, dtype=float)
    m = estimates.size
    if m < 2:
        raise ValueError(f"Rubin pooling needs at least 2 imputations, got {m}")
    if variances.size != m:
        raise ValueError("estimates and variances must have equal length")
    if (variances < 0).any():
        raise ValueError("within-imputation variances must be nonnegative")
    pooled = float(estimates.mean())
    within = float(variances.mean())
    between = float(estimates.var(ddof=1))
    total = within + (1.0 + 1.0 / m) * between
    return pooled, float(np.sqrt(total))


def estimate_mi(trial: TrialDataset, covariates: tuple[str, ...], m: int,
                stream: RngStream, level: float = 0.95,
                covariate_label: str = COVSET_ALL) -> EstimateRecord:
    """Treatment effect from the survivors' linear model applied to each
    imputed dataset, pooled with Rubin's rules. All randomized patients count."""
    completed = impute_outcomes(trial, covariates, m, stream)
    design = np.column_stack([np.ones(len(trial)), trial.z.astype(float)])
    estimates = np.empty(m)
    variances = np.empty(m)
    for d, filled in enumerate(completed):
        fit = fit_ols(design, filled)
        estimates[d] = fit.coefficients[1]
        variances[d] = fit.standard_errors[1] ** 2
    pooled, se = pool_rubin(estimates, variances)
    lower, upper = wald_ci(pooled, se, level)
    return EstimateRecord(
        method=METHOD_MI, covariate_set=covariate_label, estimate=pooled, se=se,
        ci_lower=lower, ci_upper=upper, n_analyzed=float(len(trial)))


def _ceil_ratio(numerator: int, denominator: int) -> int:
    return -(-numerator // denominator)


def bounds_zhang(trial: TrialDataset, direction: str = "s1_ge_s0") -> tuple[float, float]:
    """Trimming bounds for the always-survivor effect under monotone survival.

    Under `s1_ge_s0` every control survivor is an always survivor, so the
    always-survivor fraction among treated survivors is p0/p1; the treated
    survivor outcomes are trimmed to their lowest/highest ceil(pi * k) values
    to bracket the always-survivor mean. `s0_ge_s1` mirrors the roles.
    The trim count is computed in integer arithmetic, so no floating-point
    wobble can change it.
    """
    if direction not in ("s1_ge_s0", "s0_ge_s1"):
        raise ValueError(f"unknown direction {direction!r}")
    arm1 = trial.z == 1
    arm0 = trial.z == 0
    surv1 = int(trial.observed_survival[arm1].sum())
    surv0 = int(trial.observed_survival[arm0].sum())
    n1 = int(arm1.sum())
    n0 = int(arm0.sum())
    if surv1 == 0 or surv0 == 0:
        raise DegenerateArmError("both arms need at least one survivor for trimming bounds")

    y1 = np.sort(trial.observed_outcome[arm1 & (trial.observed_survival == 1)])
    y0 = np.sort(trial.observed_outcome[arm0 & (trial.observed_survival == 1)])

    if direction == "s1_ge_s0":
        # p1 >= p0 required: surv1/n1 >= surv0/n0  <=>  surv1*n0 >= surv0*n1
        if surv1 * n0 < surv0 * n1:
            raise MonotonicityDirectionError(
                "observed survival is lower in the treated arm; "
                "use direction='s0_ge_s1' for the reversed assumption")
        trim = _ceil_ratio(surv0 * n1, n0)  # ceil(pi * k) with pi = p0/p1, k = surv1
        anchor = float(y0.mean())
        return float(y1[:trim].mean() - anchor), float(y1[-trim:].mean() - anchor)

    if surv0 * n1 < surv1 * n0:
        raise MonotonicityDirectionError(
            "observed survival is lower in the control arm; "
            "use direction='s1_ge_s0' for the standard assumption")
    trim = _ceil_ratio(surv1 * n0, n1)
    anchor = float(y1.mean())
    return float(anchor - y0[-trim:].mean()), float(anchor - y0[:trim].mean())


def bounds_zhang_auto(trial: TrialDataset) -> tuple[float, float]:
    """Trimming bounds with the monotone direction chosen from observed rates."""
    arm1 = trial.z == 1
    p1 = float(trial.observed_survival[arm1].mean())
    p0 = float(trial.observed_survival[~arm1].mean())
    return bounds_zhang(trial, direction="s1_ge_s0" if p1 >= p0 else "s0_ge_s1")


def bounds_chiba(trial: TrialDataset, alpha_range: tuple[float, float]) -> tuple[float, float]:
    """Survivor mean difference shifted by a survivor-selection sensitivity range."""
    alpha_lo, alpha_hi = float(alpha_range[0]), float(alpha_range[1])
    if alpha_lo > alpha_hi:
        raise ValueError(f"alpha range {alpha_range} is inverted")
    survivors = trial.observed_survival == 1
    arm1 = survivors & (trial.z == 1)
    arm0 = survivors & (trial.z == 0)
    if arm1.sum() == 0 or arm0.sum() == 0:
        raise DegenerateArmError("both arms need at least one survivor")
    crude = float(trial.observed_outcome[arm1].mean() - trial.observed_outcome[arm0].mean())
    return crude - alpha_hi, crude - alpha_lo
