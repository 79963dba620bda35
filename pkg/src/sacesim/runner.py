"""Study orchestration: scenario grid x replicates x all analyses, with
deterministic parallelism and CSV persistence.

Every (scenario, sim_index) cell is an independent unit of work whose
randomness comes only from lineage-spawned streams, so results are identical
whether cells run serially or across worker processes. Records are collected
into (scenario, sim_index) order before any reduction; summary reductions
always consume that fixed order, which keeps exported CSVs byte-identical
across reruns and worker counts.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import multiprocessing
import time
from dataclasses import dataclass, fields

import numpy as np

from . import __version__ as artifact_version
from .config import RunPlan, ScenarioSpec, dumps_plan, validate_plan
from .dgm import generate_trial
from .estimators import (
    COVSET_ALL,
    COVSET_LABELS,
    DegenerateArmError,
    EstimateRecord,
    METHOD_BOUNDS_CHIBA,
    METHOD_BOUNDS_ZHANG,
    METHOD_CCA,
    METHOD_MI,
    METHOD_SACE,
    MonotonicityDirectionError,
    bounds_chiba,
    bounds_zhang_auto,
    estimate_cca,
    estimate_mi,
    estimate_sace_hayden,
    resolve_covariate_set,
)
from .metrics import (
    ESTIMAND_THETA1,
    ESTIMAND_THETA2,
    PerformanceSummary,
    bounds_containment,
    coverage_band,
    summarize_analyzed,
    summarize_method,
)
from .oracle import EstimandSet, StratumLabel, sace_reference, strata_census
from .stats import InsufficientDataError, SingularMatrixError, norm_quantile, spawn_stream

logger = logging.getLogger(__name__)

MAX_LOST_FRACTION = 0.10
WARN_LOST_FRACTION = 0.01

POINT_METHOD_KEYS = (
    (METHOD_CCA, COVSET_ALL),
    (METHOD_SACE, "ALL"),
    (METHOD_SACE, "NO_HC"),
    (METHOD_SACE, "NO_GA"),
    (METHOD_MI, "ALL"),
    (METHOD_MI, "NO_HC"),
    (METHOD_MI, "NO_GA"),
)
BOUNDS_METHOD_KEYS = ((METHOD_BOUNDS_ZHANG, COVSET_ALL), (METHOD_BOUNDS_CHIBA, COVSET_ALL))

_ESTIMATOR_ERRORS = (InsufficientDataError, DegenerateArmError,
                     MonotonicityDirectionError, SingularMatrixError)


class ExecutionError(RuntimeError):
    """The study lost too many replicates to report trustworthy summaries."""


@dataclass(frozen=True)
class SimulationRecord:
    """Everything retained from one simulated trial."""

    scenario_id: str
    sim_index: int
    effect_on_outcome: float
    effect_on_survival_logodds: float
    theta2s: float  # NaN if the always-survivor stratum was empty
    n_always_survivor: int
    n_treatment_only_survivor: int
    n_control_only_survivor: int
    n_never_survivor: int
    estimates: tuple[EstimateRecord, ...]

    @property
    def n_per_trial(self) -> int:
        return (self.n_always_survivor + self.n_treatment_only_survivor
                + self.n_control_only_survivor + self.n_never_survivor)

    def find(self, method: str, covariate_set: str) -> EstimateRecord | None:
        for record in self.estimates:
            if record.method == method and record.covariate_set == covariate_set:
                return record
        return None


@dataclass
class StudyResult:
    plan: RunPlan
    records: list[SimulationRecord]
    estimands: dict[str, EstimandSet]
    summaries: list[PerformanceSummary]
    analyzed: list[dict]
    bounds_summary: list[dict]
    provenance: dict


def plan_digest(plan: RunPlan) -> str:
    return hashlib.sha256(dumps_plan(plan).encode("utf-8")).hexdigest()


def _failed_record(method: str, covariate_set: str, exc: Exception) -> EstimateRecord:
    return EstimateRecord(
        method=method, covariate_set=covariate_set, estimate=None, se=None,
        ci_lower=None, ci_upper=None, n_analyzed=0.0,
        error=f"{type(exc).__name__}: {exc}")


def run_simulation_cell(scenario: ScenarioSpec, plan: RunPlan,
                        sim_index: int) -> SimulationRecord:
    """Generate one trial and run every analysis on it."""
    trial = generate_trial(scenario, plan.dgm, plan.master_seed, sim_index)
    level = plan.confidence_level

    try:
        theta2s = sace_reference(trial)
    except ValueError:
        theta2s = float("nan")
    census = strata_census(trial)

    records: list[EstimateRecord] = []
    try:
        records.append(estimate_cca(trial, level=level))
    except _ESTIMATOR_ERRORS as exc:
        records.append(_failed_record(METHOD_CCA, COVSET_ALL, exc))

    for label in COVSET_LABELS:
        covariates = resolve_covariate_set(scenario.sace_covariate_set, label)
        stream = spawn_stream(plan.master_seed, scenario.id, sim_index,
                              f"bootstrap/sace/{label.lower()}")
        try:
            records.append(estimate_sace_hayden(
                trial, covariates, plan.bootstrap_reps, stream,
                level=level, covariate_label=label))
        except _ESTIMATOR_ERRORS as exc:
            records.append(_failed_record(METHOD_SACE, label, exc))

    for label in COVSET_LABELS:
        covariates = resolve_covariate_set(scenario.mi_covariate_set, label)
        stream = spawn_stream(plan.master_seed, scenario.id, sim_index,
                              f"mi/{label.lower()}")
        try:
            records.append(estimate_mi(
                trial, covariates, plan.mi_count, stream,
                level=level, covariate_label=label))
        except _ESTIMATOR_ERRORS as exc:
            records.append(_failed_record(METHOD_MI, label, exc))

    survivor_count = float(trial.observed_survival.sum())
    try:
        zhang_lo, zhang_hi = bounds_zhang_auto(trial)
        records.append(EstimateRecord(
            method=METHOD_BOUNDS_ZHANG, covariate_set=COVSET_ALL, estimate=None,
            se=None, ci_lower=None, ci_upper=None, n_analyzed=survivor_count,
            bound_lower=zhang_lo, bound_upper=zhang_hi))
    except _ESTIMATOR_ERRORS as exc:
        records.append(_failed_record(METHOD_BOUNDS_ZHANG, COVSET_ALL, exc))
    try:
        chiba_lo, chiba_hi = bounds_chiba(trial, plan.chiba_alpha_range)
        records.append(EstimateRecord(
            method=METHOD_BOUNDS_CHIBA, covariate_set=COVSET_ALL, estimate=None,
            se=None, ci_lower=None, ci_upper=None, n_analyzed=survivor_count,
            bound_lower=chiba_lo, bound_upper=chiba_hi))
    except _ESTIMATOR_ERRORS as exc:
        records.append(_failed_record(METHOD_BOUNDS_CHIBA, COVSET_ALL, exc))

    return SimulationRecord(
        scenario_id=scenario.id,
        sim_index=sim_index,
        effect_on_outcome=scenario.effect_on_outcome,
        effect_on_survival_logodds=scenario.effect_on_survival_logodds,
        theta2s=theta2s,
        n_always_survivor=census[StratumLabel.ALWAYS_SURVIVOR],
        n_treatment_only_survivor=census[StratumLabel.TREATMENT_ONLY_SURVIVOR],
        n_control_only_survivor=census[StratumLabel.CONTROL_ONLY_SURVIVOR],
        n_never_survivor=census[StratumLabel.NEVER_SURVIVOR],
        estimates=tuple(records),
    )


_WORKER_PLAN: RunPlan | None = None


def _init_worker(plan: RunPlan) -> None:
    global _WORKER_PLAN
    _WORKER_PLAN = plan


def _run_cell(task: tuple[int, int]) -> SimulationRecord:
    scenario_index, sim_index = task
    scenario = _WORKER_PLAN.scenarios[scenario_index]
    return run_simulation_cell(scenario, _WORKER_PLAN, sim_index)


def _execute_cells(plan: RunPlan, tasks: list[tuple[int, int]], workers: int,
                   on_progress=None) -> list[SimulationRecord]:
    records: list[SimulationRecord] = []
    if workers <= 1:
        _init_worker(plan)
        for done, task in enumerate(tasks, start=1):
            records.append(_run_cell(task))
            if on_progress:
                on_progress(done, len(tasks))
    else:
        chunksize = max(1, len(tasks) // (workers * 8))
        with multiprocessing.get_context("spawn").Pool(
                processes=workers, initializer=_init_worker, initargs=(plan,)) as pool:
            done = 0
            for record in pool.imap_unordered(_run_cell, tasks, chunksize=chunksize):
                records.append(record)
                done += 1
                if on_progress:
                    on_progress(done, len(tasks))
    order = {scenario.id: i for i, scenario in enumerate(plan.scenarios)}
    records.sort(key=lambda r: (order[r.scenario_id], r.sim_index))
    return records


def run_scenario(scenario: ScenarioSpec, plan: RunPlan, workers: int = 1,
                 on_progress=None) -> list[SimulationRecord]:
    """All replicates of one scenario, in sim_index order."""
    validate_plan(plan)
    index = [s.id for s in plan.scenarios].index(scenario.id)
    tasks = [(index, sim_index) for sim_index in range(plan.n_sim)]
    return _execute_cells(plan, tasks, workers, on_progress)


def run_grid(plan: RunPlan, workers: int = 1, on_progress=None) -> StudyResult:
    """The full study: every scenario x n_sim, plus estimands and summaries."""
    validate_plan(plan)
    started = time.time()
    tasks = [(i, k) for i in range(len(plan.scenarios)) for k in range(plan.n_sim)]
    records = _execute_cells(plan, tasks, workers, on_progress)
    _check_losses(records, plan.n_sim)
    estimands, summaries, analyzed, bounds_rows = summarize_records(
        records, level=plan.confidence_level)
    provenance = {
        "artifact_version": artifact_version,
        "master_seed": plan.master_seed,
        "plan_digest": plan_digest(plan),
        "n_scenarios": len(plan.scenarios),
        "n_sim": plan.n_sim,
        "workers": workers,
        "duration_seconds": time.time() - started,
    }
    return StudyResult(plan=plan, records=records, estimands=estimands,
                       summaries=summaries, analyzed=analyzed,
                       bounds_summary=bounds_rows, provenance=provenance)


def _check_losses(records: list[SimulationRecord], n_sim: int) -> None:
    failures: dict[tuple[str, str, str], int] = {}
    for record in records:
        for est in record.estimates:
            if est.error is not None:
                key = (record.scenario_id, est.method, est.covariate_set)
                failures[key] = failures.get(key, 0) + 1
        if not np.isfinite(record.theta2s):
            key = (record.scenario_id, "ORACLE", "-")
            failures[key] = failures.get(key, 0) + 1
    for (scenario_id, method, covset), count in sorted(failures.items()):
        fraction = count / n_sim
        if fraction > MAX_LOST_FRACTION:
            raise ExecutionError(
                f"scenario {scenario_id}: {method}/{covset} failed in "
                f"{count}/{n_sim} replicates ({fraction:.1%} > {MAX_LOST_FRACTION:.0%})")
        if fraction > WARN_LOST_FRACTION:
            logger.warning("scenario %s: %s/%s failed in %d/%d replicates",
                           scenario_id, method, covset, count, n_sim)


def _scenario_order(records: list[SimulationRecord]) -> list[str]:
    seen: list[str] = []
    for record in records:
        if record.scenario_id not in seen:
            seen.append(record.scenario_id)
    return seen


def summarize_records(records: list[SimulationRecord], level: float = 0.95):
    """Estimands, performance summaries, analyzed-n table, and bounds summary,
    all recomputable offline from a records CSV."""
    ids = _scenario_order(records)
    by_scenario = {sid: [r for r in records if r.scenario_id == sid] for sid in ids}

    estimands: dict[str, EstimandSet] = {}
    for sid in ids:
        group = by_scenario[sid]
        theta2s = [r.theta2s for r in group if np.isfinite(r.theta2s)]
        estimands[sid] = EstimandSet.from_sims(group[0].effect_on_outcome, theta2s)

    summaries: list[PerformanceSummary] = []
    for sid in ids:
        group = by_scenario[sid]
        estimand_values = ((ESTIMAND_THETA1, estimands[sid].theta1),
                           (ESTIMAND_THETA2, estimands[sid].theta2))
        for method, covset in POINT_METHOD_KEYS:
            kept = [rec for r in group
                    if (rec := r.find(method, covset)) is not None
                    and rec.error is None and rec.estimate is not None]
            if len(kept) < 2:
                continue
            estimates = [rec.estimate for rec in kept]
            intervals = [(rec.ci_lower, rec.ci_upper) for rec in kept]
            n_analyzed = [rec.n_analyzed for rec in kept]
            for estimand_name, value in estimand_values:
                summaries.append(summarize_method(
                    sid, method, covset, estimates, intervals, n_analyzed,
                    estimand_name, value, level=level))

    analyzed_groups: dict[float, dict[str, list[float]]] = {}
    key_map = {(METHOD_MI, "ALL"): "MI", (METHOD_CCA, COVSET_ALL): "CCA",
               (METHOD_SACE, "ALL"): "SACE_ALL", (METHOD_SACE, "NO_HC"): "SACE_NO_HC",
               (METHOD_SACE, "NO_GA"): "SACE_NO_GA"}
    for record in records:
        or_value = round(float(np.exp(record.effect_on_survival_logodds)), 10)
        bucket = analyzed_groups.setdefault(
            or_value, {name: [] for name in key_map.values()})
        for (method, covset), name in key_map.items():
            est = record.find(method, covset)
            if est is not None and est.error is None:
                bucket[name].append(est.n_analyzed)
    n_per_trial = records[0].n_per_trial if records else 0
    analyzed = summarize_analyzed(analyzed_groups, n_per_trial)

    bounds_rows = []
    for sid in ids:
        group = by_scenario[sid]
        for method, covset in BOUNDS_METHOD_KEYS:
            paired = [(r, rec) for r in group
                      if (rec := r.find(method, covset)) is not None
                      and rec.error is None and rec.bound_lower is not None]
            if not paired:
                continue
            lows = [rec.bound_lower for _, rec in paired]
            highs = [rec.bound_upper for _, rec in paired]
            sace_points = []
            bounds_for_points = []
            theta_refs = []
            bounds_for_theta = []
            for r, rec in paired:
                point = r.find(METHOD_SACE, "ALL")
                if point is not None and point.error is None and point.estimate is not None:
                    sace_points.append(point.estimate)
                    bounds_for_points.append((rec.bound_lower, rec.bound_upper))
                if np.isfinite(r.theta2s):
                    theta_refs.append(r.theta2s)
                    bounds_for_theta.append((rec.bound_lower, rec.bound_upper))
            row = {
                "scenario_id": sid,
                "method": method,
                "n_sim_used": len(paired),
                "mean_lower": float(np.mean(lows)),
                "mean_upper": float(np.mean(highs)),
                "containment_sace_point": (bounds_containment(sace_points, bounds_for_points)
                                           if sace_points else float("nan")),
                "containment_theta2s": (bounds_containment(theta_refs, bounds_for_theta)
                                        if theta_refs else float("nan")),
            }
            bounds_rows.append(row)

    return estimands, summaries, analyzed, bounds_rows


# --- persistence ----------------------------------------------------------

RECORD_COLUMNS = (
    "scenario_id", "sim_index", "effect_on_outcome", "effect_on_survival_logodds",
    "theta2s", "n_always_survivor", "n_treatment_only_survivor",
    "n_control_only_survivor", "n_never_survivor", "method", "covariate_set",
    "estimate", "se", "ci_lower", "ci_upper", "n_analyzed",
    "bound_lower", "bound_upper", "unstable", "error",
)


def _fmt(value) -> str:
    """Missing values become empty fields; floats keep full precision."""
    if value is None:
        return ""
    if isinstance(value, float):
        if not np.isfinite(value):
            return ""
        return repr(value)
    if isinstance(value, bool):
        return "1" if value else "0"
    return str(value)


def write_records_csv(records: list[SimulationRecord], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(RECORD_COLUMNS)
        for record in records:
            base = [record.scenario_id, record.sim_index,
                    _fmt(record.effect_on_outcome),
                    _fmt(record.effect_on_survival_logodds),
                    _fmt(record.theta2s), record.n_always_survivor,
                    record.n_treatment_only_survivor, record.n_control_only_survivor,
                    record.n_never_survivor]
            for est in record.estimates:
                writer.writerow(base + [
                    est.method, est.covariate_set, _fmt(est.estimate), _fmt(est.se),
                    _fmt(est.ci_lower), _fmt(est.ci_upper), _fmt(est.n_analyzed),
                    _fmt(est.bound_lower), _fmt(est.bound_upper),
                    _fmt(est.unstable), est.error or ""])


def _parse_float(text: str) -> float | None:
    return None if text == "" else float(text)


def read_records_csv(path) -> list[SimulationRecord]:
    """Rebuild SimulationRecords from a records CSV (exact float round trip)."""
    grouped: dict[tuple[str, int], dict] = {}
    order: list[tuple[str, int]] = []
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        missing = set(RECORD_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"records CSV is missing columns: {sorted(missing)}")
        for row in reader:
            key = (row["scenario_id"], int(row["sim_index"]))
            if key not in grouped:
                theta2s = _parse_float(row["theta2s"])
                grouped[key] = {
                    "scenario_id": row["scenario_id"],
                    "sim_index": int(row["sim_index"]),
                    "effect_on_outcome": float(row["effect_on_outcome"]),
                    "effect_on_survival_logodds": float(row["effect_on_survival_logodds"]),
                    "theta2s": float("nan") if theta2s is None else theta2s,
                    "n_always_survivor": int(row["n_always_survivor"]),
                    "n_treatment_only_survivor": int(row["n_treatment_only_survivor"]),
                    "n_control_only_survivor": int(row["n_control_only_survivor"]),
                    "n_never_survivor": int(row["n_never_survivor"]),
                    "estimates": [],
                }
                order.append(key)
            grouped[key]["estimates"].append(EstimateRecord(
                method=row["method"],
                covariate_set=row["covariate_set"],
                estimate=_parse_float(row["estimate"]),
                se=_parse_float(row["se"]),
                ci_lower=_parse_float(row["ci_lower"]),
                ci_upper=_parse_float(row["ci_upper"]),
                n_analyzed=_parse_float(row["n_analyzed"]) or 0.0,
                bound_lower=_parse_float(row["bound_lower"]),
                bound_upper=_parse_float(row["bound_upper"]),
                unstable=row["unstable"] == "1",
                error=row["error"] or None,
            ))
    return [SimulationRecord(**{**grouped[key], "estimates": tuple(grouped[key]["estimates"])})
            for key in order]


def write_summary_csv(summaries: list[PerformanceSummary], path) -> None:
    names = [f.name for f in fields(PerformanceSummary)]
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(names)
        for summary in summaries:
            writer.writerow([_fmt(getattr(summary, name)) for name in names])


def write_estimands_csv(estimands: dict[str, EstimandSet], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["scenario_id", "theta1", "theta2", "theta2_mc_se", "n_sims"])
        for sid, est in estimands.items():
            writer.writerow([sid, _fmt(est.theta1), _fmt(est.theta2),
                             _fmt(est.theta2_mc_se), len(est.theta2_per_sim)])


def write_analyzed_csv(rows: list[dict], path) -> None:
    columns = ["survival_or", "mi_n", "cca_n", "sace_n_all", "sace_n_no_hc",
               "sace_n_no_ga", "survivors_pct", "as_pct_all", "as_pct_no_hc",
               "as_pct_no_ga"]
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])


def write_bounds_csv(rows: list[dict], path) -> None:
    columns = ["scenario_id", "method", "n_sim_used", "mean_lower", "mean_upper",
               "containment_sace_point", "containment_theta2s"]
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])


def export_results(result: StudyResult, out_dir) -> dict[str, str]:
    """Write records, summaries, estimands, analyzed-n, bounds, and the manifest."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "records": os.path.join(out_dir, "records.csv"),
        "summary": os.path.join(out_dir, "summary.csv"),
        "estimands": os.path.join(out_dir, "estimands.csv"),
        "analyzed": os.path.join(out_dir, "analyzed.csv"),
        "bounds": os.path.join(out_dir, "bounds_summary.csv"),
        "manifest": os.path.join(out_dir, "manifest.json"),
        "plan": os.path.join(out_dir, "plan.toml"),
    }
    write_records_csv(result.records, paths["records"])
    write_summary_csv(result.summaries, paths["summary"])
    write_estimands_csv(result.estimands, paths["estimands"])
    write_analyzed_csv(result.analyzed, paths["analyzed"])
    write_bounds_csv(result.bounds_summary, paths["bounds"])
    with open(paths["manifest"], "w", encoding="utf-8") as handle:
        json.dump(result.provenance, handle, indent=2, sort_keys=True)
        handle.write("\n")
    with open(paths["plan"], "w", encoding="utf-8") as handle:
        handle.write(dumps_plan(result.plan))
    return paths


def emit_plot_data(result: StudyResult, out_dir) -> dict[str, str]:
    """Long-format CSVs for the estimate/bias/MSE/coverage panels.

    Rows are keyed by scenario (survival effect = panel row, outcome effect =
    panel column), method, covariate set, and, where applicable, estimand.
    """
    import os

    os.makedirs(out_dir, exist_ok=True)
    level = result.plan.confidence_level
    z = norm_quantile(1.0 - (1.0 - level) / 2.0)
    summaries = result.summaries

    paths = {
        "estimates": os.path.join(out_dir, "plot_estimates.csv"),
        "bias": os.path.join(out_dir, "plot_bias.csv"),
        "mse": os.path.join(out_dir, "plot_mse.csv"),
        "coverage": os.path.join(out_dir, "plot_coverage.csv"),
    }

    def scenario_key(sid: str):
        for scenario in result.plan.scenarios:
            if scenario.id == sid:
                return scenario.effect_on_outcome, float(np.exp(scenario.effect_on_survival_logodds))
        return float("nan"), float("nan")

    with open(paths["estimates"], "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["scenario_id", "effect_on_outcome", "survival_or", "method",
                         "covariate_set", "mean_estimate", "ci_lower", "ci_upper",
                         "theta1", "theta2"])
        for s in summaries:
            if s.estimand != ESTIMAND_THETA1:
                continue
            outcome_effect, survival_or = scenario_key(s.scenario_id)
            est = result.estimands[s.scenario_id]
            writer.writerow([s.scenario_id, _fmt(outcome_effect), _fmt(survival_or),
                             s.method, s.covariate_set, _fmt(s.mean_estimate),
                             _fmt(s.mean_ci_lower), _fmt(s.mean_ci_upper),
                             _fmt(est.theta1), _fmt(est.theta2)])

    for measure, path in (("bias", paths["bias"]), ("mse", paths["mse"])):
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(["scenario_id", "effect_on_outcome", "survival_or",
                             "method", "covariate_set", "estimand", measure,
                             "ci_lower", "ci_upper"])
            for s in summaries:
                outcome_effect, survival_or = scenario_key(s.scenario_id)
                value = getattr(s, measure)
                mc_se = getattr(s, f"{measure}_mc_se")
                writer.writerow([s.scenario_id, _fmt(outcome_effect), _fmt(survival_or),
                                 s.method, s.covariate_set, s.estimand, _fmt(value),
                                 _fmt(value - z * mc_se), _fmt(value + z * mc_se)])

    with open(paths["coverage"], "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["scenario_id", "effect_on_outcome", "survival_or", "method",
                         "covariate_set", "estimand", "coverage", "ci_lower",
                         "ci_upper", "band_lower", "band_upper"])
        for s in summaries:
            outcome_effect, survival_or = scenario_key(s.scenario_id)
            band_lo, band_hi = coverage_band(level, s.n_sim_used)
            writer.writerow([s.scenario_id, _fmt(outcome_effect), _fmt(survival_or),
                             s.method, s.covariate_set, s.estimand, _fmt(s.coverage),
                             _fmt(s.coverage - z * s.coverage_mc_se),
                             _fmt(s.coverage + z * s.coverage_mc_se),
                             _fmt(band_lo), _fmt(band_hi)])

    return paths
