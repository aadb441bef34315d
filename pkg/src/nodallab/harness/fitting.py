"""Log-log exponent fits with bootstrap confidence intervals."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import UsageError

N_BOOT = 2000


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    ci_low: float
    ci_high: float
    slope_se: float
    n_points: int

    @property
    def ci(self) -> tuple[float, float]:
        return (self.ci_low, self.ci_high)


def _wls(lx: np.ndarray, ly: np.ndarray, w: np.ndarray):
    """Weighted least squares along the last axis; works on stacked resamples."""
    sw = w.sum(axis=-1)
    mx = (w * lx).sum(axis=-1) / sw
    my = (w * ly).sum(axis=-1) / sw
    dx = lx - mx[..., None]
    sxx = (w * dx * dx).sum(axis=-1)
    # resamples that hit a single x give nan and are dropped by the callers
    with np.errstate(invalid="ignore", divide="ignore"):
        slope = (w * dx * (ly - my[..., None])).sum(axis=-1) / sxx
    return slope, my - slope * mx


def _check(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise UsageError("x and y must be 1-D arrays of equal length")
    if np.unique(x).size < 3:
        raise UsageError("need at least 3 distinct x values")
    if np.any(x <= 0) or np.any(y <= 0) or not np.all(np.isfinite(y)):
        raise UsageError("x and y must be positive and finite")
    return x, y


def fit_exponent(x, y, se=None, n_boot: int = N_BOOT, seed: int = 0, level: float = 0.95) -> FitResult:
    """Slope of log y against log x by weighted least squares.

    Weights are 1 / (se/y)^2 when standard errors are given. The interval is
    a percentile bootstrap over points, resampled within groups of equal x
    when x values repeat (so every x keeps its sample size) and over all
    points otherwise.
    """
    x, y = _check(x, y)
    lx, ly = np.log(x), np.log(y)
    w = np.ones_like(lx) if se is None else 1.0 / np.maximum((np.asarray(se, float) / y) ** 2, 1e-24)
    slope, icpt = _wls(lx, ly, w)
    if n_boot < 1000:
        raise UsageError("at least 1000 bootstrap resamples are required")
    rng = np.random.default_rng(seed)
    groups = [np.nonzero(x == v)[0] for v in np.unique(x)]
    if all(g.size > 1 for g in groups):
        idx = np.concatenate([g[rng.integers(0, g.size, (n_boot, g.size))] for g in groups], axis=1)
    else:
        idx = rng.integers(0, x.size, (n_boot, x.size))
    bs, _ = _wls(lx[idx], ly[idx], w[idx])
    bs = bs[np.isfinite(bs)]
    a = (1 - level) / 2
    return FitResult(float(slope), float(icpt), float(np.quantile(bs, a)), float(np.quantile(bs, 1 - a)),
                     float(np.std(bs, ddof=1)), int(x.size))


def fit_exponent_replicas(xs, samples, stat=np.mean, n_boot: int = N_BOOT, seed: int = 0,
                          level: float = 0.95, paired: bool = False) -> FitResult:
    """Exponent of ``stat(samples[i])`` against ``xs[i]`` with a replica bootstrap.

    Each resample redraws the replicas behind every x (jointly across x when
    ``paired``, for measurements that share replicas) and refits; weights use
    the standard error of the statistic estimated from the replicas.
    """
    xs = np.asarray(xs, dtype=float)
    samples = [np.asarray(s, dtype=float) for s in samples]
    if len(samples) != xs.size:
        raise UsageError("one sample array per x value is required")
    if any(s.size < 2 for s in samples):
        raise UsageError("each x needs at least two replicas")
    values = np.array([stat(s) for s in samples])
    _check(xs, values)
    rng = np.random.default_rng(seed)
    if paired:
        n = samples[0].size
        if any(s.size != n for s in samples):
            raise UsageError("paired samples must share the replica count")
        draws = rng.integers(0, n, (n_boot, n))
        boot = np.stack([stat(s[draws], axis=1) for s in samples], axis=1)
    else:
        boot = np.stack([stat(s[rng.integers(0, s.size, (n_boot, s.size))], axis=1) for s in samples], axis=1)
    se = boot.std(axis=0, ddof=1)
    w = 1.0 / np.maximum((se / values) ** 2, 1e-24)
    lx = np.log(xs)
    slope, icpt = _wls(lx, np.log(values), w)
    ok = np.all(boot > 0, axis=1)
    bs, _ = _wls(np.broadcast_to(lx, boot[ok].shape), np.log(boot[ok]), np.broadcast_to(w, boot[ok].shape))
    a = (1 - level) / 2
    return FitResult(float(slope), float(icpt), float(np.quantile(bs, a)), float(np.quantile(bs, 1 - a)),
                     float(np.std(bs, ddof=1)), int(xs.size))
