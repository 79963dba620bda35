"""Ground-truth estimands computed from the counterfactual side of a trial.

Estimators never see these quantities; they exist to score the estimators.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .dgm import TrialDataset


class EmptyStratumError(ValueError):
    """The always-survivor stratum is empty, so its average effect is undefined."""


class StratumLabel(enum.Enum):
    ALWAYS_SURVIVOR = "always_survivor"
    TREATMENT_ONLY_SURVIVOR = "treatment_only_survivor"
    CONTROL_ONLY_SURVIVOR = "control_only_survivor"
    NEVER_SURVIVOR = "never_survivor"


def classify_stratum(s1: int, s0: int) -> StratumLabel:
    """Principal stratum from the pair of potential survival indicators."""
    if s1 and s0:
        return StratumLabel.ALWAYS_SURVIVOR
    if s1:
        return StratumLabel.TREATMENT_ONLY_SURVIVOR
    if s0:
        return StratumLabel.CONTROL_ONLY_SURVIVOR
    return StratumLabel.NEVER_SURVIVOR


def sace_reference(trial: TrialDataset) -> float:
    """True survivor average causal effect of one trial:
    sum{(y1 - y0) * s1 * s0} / sum{s1 * s0} over all patients.
    """
    both = (trial.s1 * trial.s0).astype(float)
    denominator = both.sum()
    if denominator == 0:
        raise EmptyStratumError(
            f"trial {trial.scenario_id}/{trial.sim_index} has no always survivors")
    numerator = ((trial.y1 - trial.y0) * both).sum()
    return float(numerator / denominator)


def average_reference(theta2_per_sim) -> float:
    """Scenario-level target: the mean of per-simulation survivor effects."""
    values = np.asarray(theta2_per_sim, dtype=float)
    if values.size == 0:
        raise ValueError("cannot average an empty sequence of per-simulation effects")
    return float(values.mean())


def strata_census(trial: TrialDataset) -> dict[StratumLabel, int]:
    """Occupancy counts of the four principal strata."""
    s1 = trial.s1.astype(bool)
    s0 = trial.s0.astype(bool)
    return {
        StratumLabel.ALWAYS_SURVIVOR: int((s1 & s0).sum()),
        StratumLabel.TREATMENT_ONLY_SURVIVOR: int((s1 & ~s0).sum()),
        StratumLabel.CONTROL_ONLY_SURVIVOR: int((~s1 & s0).sum()),
        StratumLabel.NEVER_SURVIVOR: int((~s1 & ~s0).sum()),
    }


@dataclass(frozen=True)
class EstimandSet:
    """Both targets for one scenario: the simulated effect and the survivor effect."""

    theta1: float
    theta2_per_sim: tuple[float, ...]
    theta2: float
    theta2_mc_se: float

    @classmethod
    def from_sims(cls, theta1: float, theta2_per_sim) -> "EstimandSet":
        values = np.asarray(theta2_per_sim, dtype=float)
        theta2 = average_reference(values)
        if values.size > 1:
            mc_se = float(values.std(ddof=1) / np.sqrt(values.size))
        else:
            mc_se = 0.0
        return cls(theta1=theta1, theta2_per_sim=tuple(float(v) for v in values),
                   theta2=theta2, theta2_mc_se=mc_se)
