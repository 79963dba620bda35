"""Shared builders for synthetic trials used across test modules."""

import numpy as np

from sacesim.dgm import CovariateTable, TrialDataset


def synthetic_trial(y1, y0, s1, s0, z, covariates=None, scenario_id="T", sim_index=0):
    """Build a TrialDataset directly from potential values and an assignment.

    `covariates` may be a dict with keys gestational_age / head_circumference /
    ses / apgar; missing keys get benign defaults.
    """
    n = len(y1)
    y1 = np.asarray(y1, dtype=float)
    y0 = np.asarray(y0, dtype=float)
    s1 = np.asarray(s1, dtype=np.int8)
    s0 = np.asarray(s0, dtype=np.int8)
    z = np.asarray(z, dtype=np.int8)
    covariates = covariates or {}
    rng = np.random.default_rng(hash((scenario_id, sim_index, n)) % (2**32))
    table = CovariateTable(
        gestational_age=np.asarray(
            covariates.get("gestational_age", 190.0 + rng.normal(0, 10, n)), dtype=float),
        head_circumference=np.asarray(
            covariates.get("head_circumference", 25.0 + rng.normal(0, 1.5, n)), dtype=float),
        ses=np.asarray(covariates.get("ses", rng.integers(2, 13, n)), dtype=np.int64),
        apgar=np.asarray(covariates.get("apgar", rng.integers(1, 11, n)), dtype=np.int64),
    )
    observed_survival = np.where(z == 1, s1, s0).astype(np.int8)
    observed_outcome = np.where(observed_survival == 1,
                                np.where(z == 1, y1, y0), np.nan)
    return TrialDataset(scenario_id=scenario_id, sim_index=sim_index, covariates=table,
                        y1=y1, y0=y0, s1=s1, s0=s0, z=z,
                        observed_survival=observed_survival,
                        observed_outcome=observed_outcome)
