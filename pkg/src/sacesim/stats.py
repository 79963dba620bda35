"""Deterministic random streams and the numerical primitives shared by all modules.

Streams are addressed by lineage (master_seed, scenario_id, sim_index, purpose):
the same lineage always reproduces the same draw sequence, and distinct lineages
map to statistically independent Philox counter streams. This is what makes a
full study rerun bit-identical regardless of how replicates are scheduled
across workers.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

MAX_IRLS_ITERATIONS = 50
IRLS_TOL = 1e-8
SEPARATION_THRESHOLD = 20.0  # on standardized predictors
_MAX_STEP_HALVINGS = 30


class InsufficientDataError(ValueError):
    """Too few observations for the requested fit."""


class SingularMatrixError(ValueError):
    """Design matrix is rank deficient (or a covariance is not positive definite)."""


@dataclass
class RngStream:
    """A deterministic random stream plus the lineage that created it.

    Single-owner: a stream is consumed by exactly one task; reproducibility
    across tasks comes from spawning by lineage, never from sharing.
    """

    lineage: tuple[int, str, int, str]
    generator: np.random.Generator


def spawn_stream(master_seed: int, scenario_id: str, sim_index: int, purpose: str) -> RngStream:
    """Create the stream for (master_seed, scenario_id, sim_index, purpose).

    The lineage is hashed to a 128-bit Philox key, so streams with any
    differing component are independent and the mapping is stable across
    platforms and runs.
    """
    tag = f"{master_seed}|{scenario_id}|{sim_index}|{purpose}".encode()
    key = int.from_bytes(hashlib.sha256(tag).digest()[:16], "little")
    generator = np.random.Generator(np.random.Philox(key=key))
    return RngStream(lineage=(master_seed, scenario_id, sim_index, purpose), generator=generator)


@dataclass(frozen=True)
class FitResult:
    coefficients: np.ndarray
    standard_errors: np.ndarray
    converged: bool
    n_used: int


def inv_logit(x):
    """1 / (1 + exp(-x)), computed as 0.5 * (1 + tanh(x/2)).

    The tanh form saturates to exactly 0 and 1 for large |x| without ever
    overflowing, and is antisymmetric to the last bit. Accepts scalars or
    arrays.
    """
    arr = np.asarray(x, dtype=float)
    out = 0.5 * (1.0 + np.tanh(0.5 * arr))
    if out.ndim == 0:
        return float(out)
    return out


# Acklam's rational approximation for the standard normal quantile
# (relative error < 1.15e-9), polished below with one Halley step via erfc
# to near machine precision.
_ACKLAM_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
             1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_ACKLAM_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
             6.680131188771972e+01, -1.328068155288572e+01)
_ACKLAM_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
             -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_ACKLAM_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
             3.754408661907416e+00)
_ACKLAM_P_LOW = 0.02425


def norm_quantile(p: float) -> float:
    """Quantile of the standard normal distribution, 0 < p < 1."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"norm_quantile requires 0 < p < 1, got {p}")
    a, b, c, d = _ACKLAM_A, _ACKLAM_B, _ACKLAM_C, _ACKLAM_D
    if p < _ACKLAM_P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / \
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    elif p <= 1.0 - _ACKLAM_P_LOW:
        q = p - 0.5
        r = q * q
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q / \
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)
    else:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / \
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    # Halley refinement: e = CDF(x) - p
    e = 0.5 * math.erfc(-x / math.sqrt(2.0)) - p
    u = e * math.sqrt(2.0 * math.pi) * math.exp(x * x / 2.0)
    return x - u / (1.0 + x * u / 2.0)


def wald_ci(estimate: float, se: float, level: float = 0.95) -> tuple[float, float]:
    """estimate +/- z * se at the given two-sided confidence level."""
    if se < 0:
        raise ValueError(f"standard error must be nonnegative, got {se}")
    if not 0.0 < level < 1.0:
        raise ValueError(f"confidence level must be in (0, 1), got {level}")
    z = norm_quantile(1.0 - (1.0 - level) / 2.0)
    return estimate - z * se, estimate + z * se


def sample_mvn(mean, cov, stream: RngStream):
    """One draw from N(mean, cov) via the lower Cholesky factor of cov.

    Consumes exactly len(mean) standard-normal draws from the stream.
    """
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    if not np.allclose(cov, cov.T):
        raise SingularMatrixError("covariance matrix is not symmetric")
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError("covariance matrix is not positive definite") from exc
    z = stream.generator.standard_normal(mean.shape[0])
    return mean + chol @ z


def fit_ols(design, response) -> FitResult:
    """Ordinary least squares with classical standard errors (n - p denominator)."""
    X = np.asarray(design, dtype=float)
    y = np.asarray(response, dtype=float)
    n, p = X.shape
    if n <= p:
        raise InsufficientDataError(f"need n > p for OLS, got n={n}, p={p}")
    coef, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < p:
        raise SingularMatrixError(f"design matrix has rank {rank} < {p} columns")
    resid = y - X @ coef
    sigma2 = float(resid @ resid) / (n - p)
    xtx_inv = np.linalg.inv(X.T @ X)
    se = np.sqrt(np.clip(np.diag(xtx_inv) * sigma2, 0.0, None))
    return FitResult(coefficients=coef, standard_errors=se, converged=True, n_used=n)


def _eta_batch(X, beta):
    """Linear predictors per batch item; X (B,n,p), beta (B,p) -> (B,n)."""
    return np.matmul(X, beta[:, :, None])[:, :, 0]


def _loglik_from_eta(y, eta):
    return (y * eta - np.logaddexp(0.0, eta)).sum(axis=1)


def _fit_logistic_batch(X, y, beta0=None):
    """IRLS over a batch of logistic problems with identical shapes.

    X has shape (B, n, p) and y shape (B, n). Runs the same algorithm as
    `fit_logistic` independently per item: step-halving whenever a step would
    decrease the likelihood, convergence when the max coefficient change drops
    below IRLS_TOL, and a non-converged flag when any coefficient exceeds
    SEPARATION_THRESHOLD on the standardized-predictor scale.

    Returns (beta, converged) with shapes (B, p) and (B,).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n_batch, _, p = X.shape
    beta = np.zeros((n_batch, p)) if beta0 is None else np.array(beta0, dtype=float)
    # Separation is judged on the standardized-predictor scale; constant
    # columns (the intercept) get scale 0 so they never trip the threshold.
    scales = X.std(axis=1)
    converged = np.zeros(n_batch, dtype=bool)
    active = np.ones(n_batch, dtype=bool)
    loglik = _loglik_from_eta(y, _eta_batch(X, beta))

    for _ in range(MAX_IRLS_ITERATIONS):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        Xa, ya, ba = X[idx], y[idx], beta[idx]
        eta = _eta_batch(Xa, ba)
        mu = inv_logit(eta)
        w = np.clip(mu * (1.0 - mu), 1e-10, None)
        grad = np.matmul(Xa.transpose(0, 2, 1), (ya - mu)[:, :, None])[:, :, 0]
        hess = np.matmul(Xa.transpose(0, 2, 1), Xa * w[:, :, None])
        try:
            step = np.linalg.solve(hess, grad[..., None])[..., 0]
        except np.linalg.LinAlgError as exc:
            raise SingularMatrixError("singular information matrix in IRLS") from exc
        cand = ba + step
        ll_new = _loglik_from_eta(ya, _eta_batch(Xa, cand))
        shrinking = ll_new < loglik[idx] - 1e-12
        halvings = 0
        while shrinking.any() and halvings < _MAX_STEP_HALVINGS:
            step[shrinking] *= 0.5
            cand[shrinking] = ba[shrinking] + step[shrinking]
            ll_new[shrinking] = _loglik_from_eta(
                ya[shrinking], _eta_batch(Xa[shrinking], cand[shrinking]))
            shrinking = ll_new < loglik[idx] - 1e-12
            halvings += 1
        delta = np.abs(cand - ba).max(axis=1)
        beta[idx] = cand
        loglik[idx] = ll_new
        separated = np.abs(cand * scales[idx]).max(axis=1) > SEPARATION_THRESHOLD
        done_ok = (delta < IRLS_TOL) & ~separated
        converged[idx[done_ok]] = True
        active[idx[done_ok | separated]] = False

    return beta, converged


def fit_logistic(design, outcome) -> FitResult:
    """Logistic regression by iteratively reweighted least squares.

    Converges when the max absolute coefficient change falls below 1e-8
    (at most 50 iterations). Steps that would decrease the likelihood are
    halved. Complete separation is reported as a non-converged result rather
    than an exception: coefficients stay finite thanks to the safeguards.
    """
    X = np.asarray(design, dtype=float)
    y = np.asarray(outcome, dtype=float)
    n, p = X.shape
    if n <= p:
        raise InsufficientDataError(f"need n > p for logistic fit, got n={n}, p={p}")
    if not ((y == 0) | (y == 1)).all():
        raise ValueError("logistic outcome must be coded 0/1")
    if y.min() == y.max():
        raise ValueError("logistic outcome has a single class")

    beta, conv = _fit_logistic_batch(X[None, :, :], y[None, :])
    coef = beta[0]
    mu = inv_logit(X @ coef)
    w = np.clip(mu * (1.0 - mu), 1e-10, None)
    hess = X.T @ (X * w[:, None])
    try:
        cov = np.linalg.inv(hess)
    except np.linalg.LinAlgError:
        cov = np.linalg.pinv(hess)
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    return FitResult(coefficients=coef, standard_errors=se, converged=bool(conv[0]), n_used=n)
