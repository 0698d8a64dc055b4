"""Windowed variances, uncertainty products, bound checks and tracking errors.

All sums use :func:`math.fsum`, so results do not depend on summation order.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from .records import Records

__all__ = [
    "BoundClass",
    "RunSummary",
    "TrajectoryError",
    "WindowedVariance",
    "bound_check",
    "chi2_band",
    "kurtosis_check",
    "product_rel_se",
    "sample_variance",
    "summarize",
    "to_db",
    "trajectory_error",
    "uncertainty_product",
    "windowed_variance",
]

SEMICLASSICAL_PRODUCT = 2.0


def _fsum(x) -> float:
    return math.fsum(np.asarray(x, dtype=float).tolist())


def sample_variance(x, mean: float | None = None) -> float:
    """Unbiased variance: divisor ``n - 1`` about the sample mean, ``n`` about a known mean."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if mean is None:
        if n < 2:
            raise ValueError("need at least two samples")
        mu = _fsum(x) / n
        return _fsum((x - mu) ** 2) / (n - 1)
    if n < 1:
        raise ValueError("need at least one sample")
    return _fsum((x - mean) ** 2) / n


def to_db(var: float) -> float:
    return 10.0 * math.log10(var)


def chi2_band(dof: int, n_sigma: float = 3.0) -> tuple[float, float]:
    """Relative band ``(lo, hi)`` containing ``s^2 / sigma^2`` with ``n_sigma`` Gaussian-equivalent confidence."""
    tail = stats.norm.sf(n_sigma)
    return stats.chi2.ppf(tail, dof) / dof, stats.chi2.isf(tail, dof) / dof


def product_rel_se(n: int) -> float:
    """Relative standard error of the product of two independent sample standard deviations."""
    return 1.0 / math.sqrt(n - 1)


@dataclass(frozen=True)
class WindowedVariance:
    per_window: np.ndarray
    pooled: float
    window: int
    dof_per_window: int
    known_mean: bool


def windowed_variance(values, window: int, mean=None) -> WindowedVariance:
    """Variance in consecutive non-overlapping windows plus the pooled value.

    ``mean`` (scalar or per-sample array) switches to the known-mean estimator;
    otherwise each window subtracts its own sample mean. Trailing samples that
    do not fill a window are dropped.
    """
    x = np.asarray(values, dtype=float)
    if window < 2 or x.size < window:
        raise ValueError(f"need at least one full window of {window} samples, got {x.size}")
    n_win = x.size // window
    x = x[:n_win * window]
    if mean is None:
        per = np.array([sample_variance(x[k * window:(k + 1) * window]) for k in range(n_win)])
        dof = window - 1
    else:
        mean = np.asarray(mean, dtype=float)
        if mean.ndim:
            mean = mean[:x.size]
        resid = x - mean
        per = np.array([sample_variance(resid[k * window:(k + 1) * window], 0.0)
                        for k in range(n_win)])
        dof = window
    pooled = _fsum(per * dof) / (dof * n_win)
    return WindowedVariance(per, pooled, window, dof, mean is not None)


def uncertainty_product(var_x_inferred: float, var_y_inferred: float) -> tuple[float, float]:
    """``(product of inferred std devs, 2 / product)``."""
    if var_x_inferred <= 0 or var_y_inferred <= 0:
        raise ValueError("inferred variances must be > 0")
    product = math.sqrt(var_x_inferred) * math.sqrt(var_y_inferred)
    return product, SEMICLASSICAL_PRODUCT / product


@dataclass
class RunSummary:
    var_u: float
    var_v: float
    var_x_inferred: float
    var_y_inferred: float
    product_inferred: float
    violation_factor_eq2: float
    squeezing_db: tuple[float, float]
    window_size: int
    per_window_variances: list
    n_records: int
    estimator: str
    variance_band_3sigma: tuple[float, float]
    product_rel_se: float
    predicted_product: float | None = None
    classification: str | None = None
    trajectory_rms: tuple[float, float] | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _inferred(records: Records, model) -> tuple[np.ndarray, np.ndarray]:
    return model.infer(records.u, records.v)


def summarize(records: Records, model, spec=None, window: int = 2600) -> RunSummary:
    """Reduce a run to its summary statistics.

    With a trajectory ``spec`` variances are taken about the known means
    ``gain @ alpha(t)``; otherwise about the sample mean. Inferred variances use
    ``gain^-1 (u, v)`` over all records.
    """
    from .trajectory import evaluate

    n = len(records)
    if spec is not None:
        tx, ty = evaluate(spec, records.t)
        mean_u = model.gain[0, 0] * tx + model.gain[0, 1] * ty
        mean_v = model.gain[1, 0] * tx + model.gain[1, 1] * ty
        xi, yi = _inferred(records, model)
        var_u = sample_variance(records.u - mean_u, 0.0)
        var_v = sample_variance(records.v - mean_v, 0.0)
        var_x = sample_variance(xi - tx, 0.0)
        var_y = sample_variance(yi - ty, 0.0)
        wu = windowed_variance(records.u, min(window, n), mean_u)
        wv = windowed_variance(records.v, min(window, n), mean_v)
        estimator, dof = "known_mean", n
    else:
        xi, yi = _inferred(records, model)
        var_u, var_v = sample_variance(records.u), sample_variance(records.v)
        var_x, var_y = sample_variance(xi), sample_variance(yi)
        wu = windowed_variance(records.u, min(window, n))
        wv = windowed_variance(records.v, min(window, n))
        estimator, dof = "sample_mean", n - 1
    product, factor = uncertainty_product(var_x, var_y)
    return RunSummary(
        var_u=var_u,
        var_v=var_v,
        var_x_inferred=var_x,
        var_y_inferred=var_y,
        product_inferred=product,
        violation_factor_eq2=factor,
        squeezing_db=(to_db(var_u), to_db(var_v)),
        window_size=wu.window,
        per_window_variances=np.column_stack([wu.per_window, wv.per_window]).tolist(),
        n_records=n,
        estimator=estimator,
        variance_band_3sigma=chi2_band(dof),
        product_rel_se=product_rel_se(n),
    )


@dataclass(frozen=True)
class TrajectoryError:
    rms_x: float
    rms_y: float
    residual_x: np.ndarray
    residual_y: np.ndarray


def trajectory_error(records: Records, spec, model) -> TrajectoryError:
    """Residuals of the inferred displacement against the true trajectory."""
    from .trajectory import evaluate

    if len(records) == 0:
        raise ValueError("no records")
    if records.t[0] < -1e-12 or records.t[-1] > spec.duration + 1e-12:
        raise ValueError("records extend outside the trajectory timeline")
    tx, ty = evaluate(spec, records.t)
    xi, yi = _inferred(records, model)
    rx, ry = xi - tx, yi - ty
    return TrajectoryError(
        rms_x=math.sqrt(sample_variance(rx, 0.0)),
        rms_y=math.sqrt(sample_variance(ry, 0.0)),
        residual_x=rx,
        residual_y=ry,
    )


class BoundClass:
    VIOLATES_EQ2 = "violates_eq2"
    SEMICLASSICAL = "semiclassical"
    UNPHYSICAL = "unphysical_flag"


def bound_check(
    summary: RunSummary,
    predicted_product: float | None = None,
    effective_samples: int | None = None,
) -> str:
    """Classify a measured uncertainty product.

    ``unphysical_flag`` when it sits more than 5 standard errors below the
    model's own prediction; ``violates_eq2`` when more than 3 standard errors
    below 2; ``semiclassical`` otherwise.
    """
    n = effective_samples or summary.n_records
    se = product_rel_se(n)
    p = summary.product_inferred
    if predicted_product is None:
        predicted_product = summary.predicted_product
    if predicted_product is not None and p < predicted_product * (1.0 - 5.0 * se):
        return BoundClass.UNPHYSICAL
    if p < SEMICLASSICAL_PRODUCT * (1.0 - 3.0 * se):
        return BoundClass.VIOLATES_EQ2
    return BoundClass.SEMICLASSICAL


def kurtosis_check(residuals, n_sigma: float = 3.0) -> tuple[float, bool]:
    """Excess kurtosis and whether it sits inside the Gaussian ``n_sigma`` band."""
    r = np.asarray(residuals, dtype=float)
    n = r.size
    k = float(stats.kurtosis(r, fisher=True, bias=False))
    se = math.sqrt(24.0 * n * (n - 1) ** 2 / ((n - 3) * (n - 2) * (n + 3) * (n + 5)))
    return k, abs(k) <= n_sigma * se
