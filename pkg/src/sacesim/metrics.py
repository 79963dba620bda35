"""Performance measures over the per-simulation estimates: bias, MSE, coverage,
each with its Monte Carlo standard error, plus the analyzed-n and bounds summaries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .stats import norm_quantile

ESTIMAND_THETA1 = "THETA1"
ESTIMAND_THETA2 = "THETA2"


def _as_estimates(estimates) -> np.ndarray:
    values = np.asarray(estimates, dtype=float)
    if values.size < 2:
        raise ValueError(f"need at least 2 estimates, got {values.size}")
    return values


def compute_bias(estimates, estimand: float) -> tuple[float, float]:
    """Mean estimate minus the estimand, with Monte Carlo SE."""
    values = _as_estimates(estimates)
    n = values.size
    mean = values.mean()
    mc_se = np.sqrt(((values - mean) ** 2).sum() / (n * (n - 1)))
    return float(mean - estimand), float(mc_se)


def compute_mse(estimates, estimand: float) -> tuple[float, float]:
    """Mean squared error about the estimand, with Monte Carlo SE."""
    values = _as_estimates(estimates)
    n = values.size
    squared = (values - estimand) ** 2
    mse = squared.mean()
    mc_se = np.sqrt(((squared - mse) ** 2).sum() / (n * (n - 1)))
    return float(mse), float(mc_se)


def compute_coverage(intervals, estimand: float) -> tuple[float, float]:
    """Fraction of closed intervals containing the estimand, with Monte Carlo SE."""
    arr = np.asarray(intervals, dtype=float)
    if arr.size == 0:
        raise ValueError("need at least one interval")
    arr = arr.reshape(-1, 2)
    n = arr.shape[0]
    hit = ((arr[:, 0] <= estimand) & (estimand <= arr[:, 1])).mean()
    mc_se = np.sqrt(hit * (1.0 - hit) / n)
    return float(hit), float(mc_se)


def coverage_band(level: float, n_sim: int) -> tuple[float, float]:
    """Acceptance band for empirical coverage of a nominal-level interval:
    level +/- z * sqrt(level (1 - level) / n_sim)."""
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must be in (0, 1), got {level}")
    z = norm_quantile(1.0 - (1.0 - level) / 2.0)
    half_width = z * np.sqrt(level * (1.0 - level) / n_sim)
    return float(level - half_width), float(level + half_width)


def mean_estimate(estimates, level: float = 0.95) -> tuple[float, tuple[float, float]]:
    """Average estimate with a Wald CI from its empirical standard error."""
    values = _as_estimates(estimates)
    mean = float(values.mean())
    se = float(values.std(ddof=1) / np.sqrt(values.size))
    z = norm_quantile(1.0 - (1.0 - level) / 2.0)
    return mean, (mean - z * se, mean + z * se)


def bounds_containment(point_estimates, bounds) -> float:
    """Fraction of simulations whose point estimate lies inside its bounds (closed)."""
    points = np.asarray(point_estimates, dtype=float)
    arr = np.asarray(bounds, dtype=float).reshape(-1, 2)
    if points.size != arr.shape[0]:
        raise ValueError(
            f"length mismatch: {points.size} estimates vs {arr.shape[0]} bounds")
    return float(((arr[:, 0] <= points) & (points <= arr[:, 1])).mean())


@dataclass(frozen=True)
class PerformanceSummary:
    scenario_id: str
    method: str
    covariate_set: str
    estimand: str
    estimand_value: float
    n_sim_used: int
    mean_estimate: float
    mean_ci_lower: float
    mean_ci_upper: float
    bias: float
    bias_mc_se: float
    mse: float
    mse_mc_se: float
    coverage: float
    coverage_mc_se: float
    avg_n_analyzed: float


def summarize_method(scenario_id: str, method: str, covariate_set: str,
                     estimates, intervals, n_analyzed,
                     estimand: str, estimand_value: float,
                     level: float = 0.95) -> PerformanceSummary:
    """All performance measures for one (scenario, method, covariate set, estimand)."""
    values = _as_estimates(estimates)
    mean, (ci_lo, ci_hi) = mean_estimate(values, level)
    bias, bias_se = compute_bias(values, estimand_value)
    mse, mse_se = compute_mse(values, estimand_value)
    coverage, coverage_se = compute_coverage(intervals, estimand_value)
    return PerformanceSummary(
        scenario_id=scenario_id,
        method=method,
        covariate_set=covariate_set,
        estimand=estimand,
        estimand_value=float(estimand_value),
        n_sim_used=int(values.size),
        mean_estimate=mean,
        mean_ci_lower=ci_lo,
        mean_ci_upper=ci_hi,
        bias=bias,
        bias_mc_se=bias_se,
        mse=mse,
        mse_mc_se=mse_se,
        coverage=coverage,
        coverage_mc_se=coverage_se,
        avg_n_analyzed=float(np.asarray(n_analyzed, dtype=float).mean()),
    )


def summarize_analyzed(groups: dict[float, dict[str, list[float]]],
                       n_per_trial: int) -> list[dict]:
    """Average patients analyzed per survival-effect level, as percentages of n.

    `groups` maps survival odds ratio -> method key -> per-simulation
    n_analyzed values. Method keys: "MI", "CCA", "SACE_ALL", "SACE_NO_HC",
    "SACE_NO_GA".
    """
    rows = []
    for or_value in sorted(groups, reverse=True):
        per_method = groups[or_value]
        means = {key: float(np.mean(vals)) for key, vals in per_method.items() if vals}
        row = {
            "survival_or": or_value,
            "mi_n": means.get("MI", float("nan")),
            "cca_n": means.get("CCA", float("nan")),
            "sace_n_all": means.get("SACE_ALL", float("nan")),
            "sace_n_no_hc": means.get("SACE_NO_HC", float("nan")),
            "sace_n_no_ga": means.get("SACE_NO_GA", float("nan")),
        }
        row["survivors_pct"] = 100.0 * row["cca_n"] / n_per_trial
        row["as_pct_all"] = 100.0 * row["sace_n_all"] / n_per_trial
        row["as_pct_no_hc"] = 100.0 * row["sace_n_no_hc"] / n_per_trial
        row["as_pct_no_ga"] = 100.0 * row["sace_n_no_ga"] / n_per_trial
        rows.append(row)
    return rows
