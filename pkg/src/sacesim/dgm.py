"""Trial generation: covariates, both potential outcomes and survivals, and the observed view.

Both potential arms are simulated for every patient, so the counterfactual
side (y1, y0, s1, s0) is always available to the oracle while estimators only
ever see the observed columns. An outcome is missing exactly when the patient
died under the assigned arm; missing outcomes are held as NaN in the float
column and surface as None on patient records and as empty CSV fields.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .config import DgmParams
from .stats import RngStream, inv_logit, spawn_stream

PURPOSE_COVARIATES = "dgm/covariates"
PURPOSE_OUTCOMES = "dgm/outcomes"
PURPOSE_SURVIVAL = "dgm/survival"
PURPOSE_ASSIGNMENT = "dgm/assignment"


class CalibrationError(ValueError):
    """The survival intercept search cannot reach the requested target."""


@dataclass(frozen=True)
class CovariateTable:
    gestational_age: np.ndarray  # days
    head_circumference: np.ndarray  # cm
    ses: np.ndarray  # 2..12
    apgar: np.ndarray  # 1..10

    def __len__(self) -> int:
        return self.gestational_age.shape[0]

    def column(self, name: str) -> np.ndarray:
        return getattr(self, name).astype(float)


@dataclass(frozen=True)
class PotentialValues:
    y1: np.ndarray
    y0: np.ndarray
    s1: np.ndarray
    s0: np.ndarray


@dataclass(frozen=True)
class PatientRecord:
    gestational_age: float
    head_circumference: float
    ses: int
    apgar: int
    y1: float
    y0: float
    s1: int
    s0: int
    z: int
    observed_survival: int
    observed_outcome: float | None


@dataclass(frozen=True)
class TrialDataset:
    scenario_id: str
    sim_index: int
    covariates: CovariateTable
    y1: np.ndarray
    y0: np.ndarray
    s1: np.ndarray
    s0: np.ndarray
    z: np.ndarray
    observed_survival: np.ndarray
    observed_outcome: np.ndarray  # NaN where the patient died

    def __len__(self) -> int:
        return len(self.covariates)

    def patient(self, i: int) -> PatientRecord:
        dead = self.observed_survival[i] == 0
        return PatientRecord(
            gestational_age=float(self.covariates.gestational_age[i]),
            head_circumference=float(self.covariates.head_circumference[i]),
            ses=int(self.covariates.ses[i]),
            apgar=int(self.covariates.apgar[i]),
            y1=float(self.y1[i]),
            y0=float(self.y0[i]),
            s1=int(self.s1[i]),
            s0=int(self.s0[i]),
            z=int(self.z[i]),
            observed_survival=int(self.observed_survival[i]),
            observed_outcome=None if dead else float(self.observed_outcome[i]),
        )

    def patients(self) -> Iterator[PatientRecord]:
        return (self.patient(i) for i in range(len(self)))


def _categorical(probs: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """Inverse-CDF lookup; probs (k,) or per-row (n, k), uniforms (n,)."""
    cum = np.cumsum(probs, axis=-1)
    if cum.ndim == 1:
        return (uniforms[:, None] > cum[None, :-1]).sum(axis=1)
    return (uniforms[:, None] > cum[:, :-1]).sum(axis=1)


def simulate_covariates(n: int, params: DgmParams, stream: RngStream) -> CovariateTable:
    """Draw covariates: Apgar category, then (GA, HC) around the category means,
    then SES from the category's distribution.

    Consumes a fixed number of draws: n uniforms, 2n normals, n uniforms.
    """
    model = params.covariates
    gen = stream.generator
    apgar_probs = np.asarray(model.apgar_probs, dtype=float)
    apgar = 1 + _categorical(apgar_probs, gen.random(n))

    chol = np.linalg.cholesky(np.asarray(model.ga_hc_covariance, dtype=float))
    noise = gen.standard_normal((n, 2))
    ga_means = np.asarray(model.ga_means, dtype=float)[apgar - 1]
    hc_means = np.asarray(model.hc_means, dtype=float)[apgar - 1]
    deviates = noise @ chol.T
    gestational_age = ga_means + deviates[:, 0]
    head_circumference = hc_means + deviates[:, 1]

    ses_table = np.asarray(model.ses_probs, dtype=float)[apgar - 1]
    ses = 2 + _categorical(ses_table, gen.random(n))
    return CovariateTable(
        gestational_age=gestational_age,
        head_circumference=head_circumference,
        ses=ses.astype(np.int64),
        apgar=apgar.astype(np.int64),
    )


def outcome_linear_predictor(covariates: CovariateTable, params: DgmParams) -> np.ndarray:
    coefs = params.outcome
    return (coefs.intercept
            + coefs.gestational_age * covariates.gestational_age
            + coefs.head_circumference * covariates.head_circumference
            + coefs.ses * covariates.ses)


def survival_linear_predictor(covariates: CovariateTable, params: DgmParams) -> np.ndarray:
    coefs = params.survival
    return (coefs.intercept
            + coefs.gestational_age * covariates.gestational_age
            + coefs.head_circumference * covariates.head_circumference
            + coefs.apgar * covariates.apgar)


def simulate_potential_outcomes(covariates: CovariateTable, params: DgmParams,
                                effect_on_outcome: float, stream: RngStream):
    """Both potential outcomes, with independent noise per arm."""
    lp = outcome_linear_predictor(covariates, params)
    sd = params.outcome.residual_sd
    gen = stream.generator
    n = len(covariates)
    y1 = lp + effect_on_outcome + sd * gen.standard_normal(n)
    y0 = lp + sd * gen.standard_normal(n)
    return y1, y0


def simulate_potential_survival(covariates: CovariateTable, params: DgmParams,
                                effect_on_survival_logodds: float, stream: RngStream):
    """Both potential survival indicators, independent Bernoulli given covariates."""
    lp = survival_linear_predictor(covariates, params)
    p1 = inv_logit(lp + effect_on_survival_logodds)
    p0 = inv_logit(lp)
    gen = stream.generator
    n = len(covariates)
    s1 = (gen.random(n) < p1).astype(np.int8)
    s0 = (gen.random(n) < p0).astype(np.int8)
    return s1, s0


def randomize_and_observe(covariates: CovariateTable, potentials: PotentialValues,
                          allocation: tuple[int, int], stream: RngStream,
                          scenario_id: str = "", sim_index: int = 0) -> TrialDataset:
    """Permutation-randomize to exact arm counts and derive the observed view."""
    n = len(covariates)
    if sum(allocation) != n:
        raise ValueError(f"allocation {allocation} does not sum to n={n}")
    arm_labels = np.repeat(np.array([0, 1], dtype=np.int8), allocation)
    z = stream.generator.permutation(arm_labels)
    observed_survival = np.where(z == 1, potentials.s1, potentials.s0).astype(np.int8)
    observed_outcome = np.where(z == 1, potentials.y1, potentials.y0)
    observed_outcome = np.where(observed_survival == 1, observed_outcome, np.nan)
    return TrialDataset(
        scenario_id=scenario_id,
        sim_index=sim_index,
        covariates=covariates,
        y1=potentials.y1,
        y0=potentials.y0,
        s1=potentials.s1,
        s0=potentials.s0,
        z=z,
        observed_survival=observed_survival,
        observed_outcome=observed_outcome,
    )


def generate_trial(scenario, params: DgmParams, master_seed: int, sim_index: int) -> TrialDataset:
    """One complete trial for a scenario, from purpose-tagged streams."""
    n = params.n_per_trial
    covariates = simulate_covariates(
        n, params, spawn_stream(master_seed, scenario.id, sim_index, PURPOSE_COVARIATES))
    y1, y0 = simulate_potential_outcomes(
        covariates, params, scenario.effect_on_outcome,
        spawn_stream(master_seed, scenario.id, sim_index, PURPOSE_OUTCOMES))
    s1, s0 = simulate_potential_survival(
        covariates, params, scenario.effect_on_survival_logodds,
        spawn_stream(master_seed, scenario.id, sim_index, PURPOSE_SURVIVAL))
    return randomize_and_observe(
        covariates, PotentialValues(y1=y1, y0=y0, s1=s1, s0=s0), params.allocation,
        spawn_stream(master_seed, scenario.id, sim_index, PURPOSE_ASSIGNMENT),
        scenario_id=scenario.id, sim_index=sim_index)


def calibrate_survival_intercept(params: DgmParams, target_survival: float,
                                 tolerance: float, n_eval: int = 1_000_000,
                                 seed: int = 0) -> float:
    """Bisect the survival intercept until marginal survival under a null
    survival effect hits the target.

    Marginal survival is evaluated as the mean survival probability over one
    fixed covariate sample of size n_eval (common random numbers), so the
    search sees a smooth monotone function.
    """
    if not 0.0 < target_survival < 1.0:
        raise CalibrationError(f"target survival must be in (0, 1), got {target_survival}")
    if tolerance <= 0:
        raise CalibrationError(f"tolerance must be positive, got {tolerance}")

    covariates = simulate_covariates(
        n_eval, params, spawn_stream(seed, "calibration", 0, PURPOSE_COVARIATES))
    coefs = params.survival
    slope_part = (coefs.gestational_age * covariates.gestational_age
                  + coefs.head_circumference * covariates.head_circumference
                  + coefs.apgar * covariates.apgar)

    def marginal_survival(intercept: float) -> float:
        return float(np.mean(inv_logit(intercept + slope_part)))

    lo, hi = -200.0 - float(slope_part.max()), 200.0 - float(slope_part.min())
    if not marginal_survival(lo) < target_survival < marginal_survival(hi):
        raise CalibrationError(
            f"target survival {target_survival} not bracketed by intercepts [{lo}, {hi}]")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        achieved = marginal_survival(mid)
        if abs(achieved - target_survival) <= 0.5 * tolerance:
            return mid
        if achieved < target_survival:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13 * max(1.0, abs(mid)):
            break
    raise CalibrationError(
        f"bisection failed to reach target {target_survival} within tolerance {tolerance}")


TRIAL_DUMP_COLUMNS = ("id", "x1", "x2", "x3", "x4", "z", "s1", "s0",
                      "y1", "y0", "observed_survival", "observed_outcome")


def dump_trial_csv(trial: TrialDataset, path) -> None:
    """Write one trial as CSV; missing outcomes become empty fields."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(TRIAL_DUMP_COLUMNS)
        for i, patient in enumerate(trial.patients()):
            writer.writerow([
                i,
                repr(patient.gestational_age),
                repr(patient.head_circumference),
                patient.ses,
                patient.apgar,
                patient.z,
                patient.s1,
                patient.s0,
                repr(patient.y1),
                repr(patient.y0),
                patient.observed_survival,
                "" if patient.observed_outcome is None else repr(patient.observed_outcome),
            ])
