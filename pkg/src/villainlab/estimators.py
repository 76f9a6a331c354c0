"""Correlation estimates, batch-mean errors, decay-law fits.

Monte Carlo observables are reduced to CorrelationEstimate records
(mean, standard error from non-overlapping batch means, sample and batch
counts).  Decay exponents are extracted by weighted least squares on
log-log data, with confidence intervals from a parametric bootstrap over
the reported standard errors.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "CorrelationEstimate",
    "InsufficientDataError",
    "batch_means",
    "fit_decay",
    "FitResult",
    "dunlop_newman_residual",
    "DunlopNewmanResult",
]


class InsufficientDataError(RuntimeError):
    pass


@dataclass(frozen=True)
class CorrelationEstimate:
    """One measured expectation with its batch-means error."""

    observable: str
    pair: tuple
    mean: float
    std_error: float
    samples: int
    batches: int

    def __post_init__(self):
        if self.std_error < 0:
            raise ValueError("standard error must be >= 0")
        if self.samples < self.batches:
            raise ValueError("samples must be >= batch count")

    @property
    def separation(self) -> float:
        x, y = self.pair
        return float(np.linalg.norm(np.subtract(y, x)))


def batch_means(series, n_batches: int = 32) -> tuple[float, float]:
    """Mean and standard error of a correlated series via non-overlapping
    batch means.  Falls back to fewer batches for short series."""
    series = np.asarray(series, dtype=np.float64)
    n = series.size
    if n < 4:
        raise InsufficientDataError(f"need >= 4 samples, got {n}")
    nb = min(n_batches, n // 2)
    cut = (n // nb) * nb
    blocks = series[:cut].reshape(nb, -1).mean(axis=1)
    mean = float(series.mean())
    se = float(blocks.std(ddof=1) / np.sqrt(nb))
    return mean, se


@dataclass(frozen=True)
class FitResult:
    exponent: float
    exponent_ci: tuple[float, float]
    kappa: float | None
    amplitude: float
    n_points: int


def _wls(X, y, w):
    W = np.diag(w)
    beta, *_ = np.linalg.lstsq(np.sqrt(W) @ X, np.sqrt(w) * y, rcond=None)
    return beta


def fit_decay(estimates, model: str = "power", n_bootstrap: int = 200,
              seed: int = 0) -> FitResult:
    """Fit mean(r) ~ C r^-p (model="power") or C (ln r)^kappa r^-p
    (model="power_log") by weighted least squares on log-log data.

    Nonpositive means are filtered with a warning; fewer than 4 surviving
    points raise InsufficientDataError.  The confidence interval on the
    exponent is the central 95% of a parametric bootstrap that resamples
    each mean from N(mean, std_error).
    """
    if model not in ("power", "power_log"):
        raise ValueError(f"unknown model {model!r}")
    pts = [(e.separation, e.mean, e.std_error) for e in estimates]
    dropped = [p for p in pts if p[1] <= 0]
    if dropped:
        warnings.warn(f"fit_decay: dropping {len(dropped)} nonpositive means")
    pts = [p for p in pts if p[1] > 0]
    if len(pts) < 4:
        raise InsufficientDataError(f"only {len(pts)} positive points, need >= 4")
    r = np.array([p[0] for p in pts])
    m = np.array([p[1] for p in pts])
    se = np.array([p[2] for p in pts])

    def design(rv):
        cols = [np.ones_like(rv), -np.log(rv)]
        if model == "power_log":
            cols.append(np.log(np.log(rv + 1.0)))
        return np.stack(cols, axis=1)

    def fit_once(mv):
        keep = mv > 0
        if keep.sum() < design(r).shape[1] + 1:
            return None
        rv, mm, ss = r[keep], mv[keep], se[keep]
        y = np.log(mm)
        # log-scale errors; floor keeps zero-error synthetic data usable
        sy = np.maximum(ss / mm, 1e-12)
        beta = _wls(design(rv), y, 1.0 / sy ** 2)
        return beta

    beta = fit_once(m)
    rng = np.random.default_rng(seed)
    boots = []
    for _ in range(n_bootstrap):
        b = fit_once(m + se * rng.standard_normal(m.size))
        if b is not None:
            boots.append(b[1])
    if boots:
        lo, hi = np.percentile(boots, [2.5, 97.5])
    else:
        lo = hi = beta[1]
    return FitResult(
        exponent=float(beta[1]),
        exponent_ci=(float(lo), float(hi)),
        kappa=float(beta[2]) if model == "power_log" else None,
        amplitude=float(np.exp(beta[0])),
        n_points=len(pts),
    )


@dataclass(frozen=True)
class DunlopNewmanResult:
    residual: float
    std_error: float
    lhs: float   # <ss>^2
    rhs: float   # (<cc> - <c><c>)(<cc> + <c><c>)


def dunlop_newman_residual(cc: CorrelationEstimate, cx: CorrelationEstimate,
                           cy: CorrelationEstimate,
                           ss: CorrelationEstimate) -> DunlopNewmanResult:
    """rhs - lhs of the correlation inequality ss^2 <= (cc - c c)(cc + c c),
    with the standard error propagated to first order."""
    prod = cx.mean * cy.mean
    rhs = (cc.mean - prod) * (cc.mean + prod)
    lhs = ss.mean ** 2
    residual = rhs - lhs
    var = ((2.0 * cc.mean * cc.std_error) ** 2
           + (2.0 * prod * cy.mean * cx.std_error) ** 2
           + (2.0 * prod * cx.mean * cy.std_error) ** 2
           + (2.0 * ss.mean * ss.std_error) ** 2)
    return DunlopNewmanResult(residual, float(np.sqrt(var)), lhs, rhs)
