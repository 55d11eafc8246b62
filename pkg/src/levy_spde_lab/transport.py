"""Empirical Wasserstein distances, path metrics, Lipschitz observables and
tail statistics for H-valued samples."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.stats import beta

from .spectral import SpectralField, _coeffs, hnorm

__all__ = [
    "MAX_ASSIGNMENT_SIZE",
    "EmpiricalMeasure",
    "LipschitzObservable",
    "w_p_empirical",
    "path_distance_L1",
    "make_lipschitz_observable",
    "clopper_pearson_upper",
    "bootstrap_mean_upper",
    "tail_and_moment_stats",
]

MAX_ASSIGNMENT_SIZE = 2048


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Uniform empirical measure on m points of H_n, stored as an (m, n) array."""

    points: np.ndarray

    def __post_init__(self):
        pts = self.points
        if isinstance(pts, (list, tuple)) and pts and isinstance(pts[0], SpectralField):
            pts = np.stack([p.coeffs for p in pts])
        pts = np.array(pts, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise ValueError("empirical measure needs an (m, n) array with m >= 1")
        object.__setattr__(self, "points", pts)

    @property
    def m(self):
        return self.points.shape[0]


def _as_measure(a) -> EmpiricalMeasure:
    return a if isinstance(a, EmpiricalMeasure) else EmpiricalMeasure(a)


def w_p_empirical(a, b, p: int = 1) -> float:
    """W_p between two equal-size uniform empirical measures under the H norm.

    Solved exactly as an m x m assignment problem with costs ||a_i - b_j||^p.
    """
    a, b = _as_measure(a), _as_measure(b)
    if p not in (1, 2):
        raise ValueError("p must be 1 or 2")
    if a.m != b.m:
        raise ValueError(f"equal-size measures required, got {a.m} and {b.m}")
    if a.points.shape[1] != b.points.shape[1]:
        raise ValueError("measures live in different dimensions")
    if a.m > MAX_ASSIGNMENT_SIZE:
        raise ValueError(
            f"{a.m} points exceeds the exact-assignment cap of {MAX_ASSIGNMENT_SIZE}; subsample first"
        )
    diff = a.points[:, None, :] - b.points[None, :, :]
    cost = np.sqrt(np.sum(diff * diff, axis=-1))
    if p == 2:
        cost = cost * cost
    rows, cols = linear_sum_assignment(cost)
    return float(np.mean(cost[rows, cols]) ** (1.0 / p))


def path_distance_L1(path1, path2, times=None) -> float:
    """Trapezoidal int_0^T ||gamma_1(t) - gamma_2(t)||_H dt on the stored grid.

    Accepts :class:`~levy_spde_lab.integrator.Path` objects (grids must match)
    or coefficient arrays together with ``times``.
    """
    if times is None:
        t1, t2 = np.asarray(path1.times), np.asarray(path2.times)
        if t1.shape != t2.shape or not np.array_equal(t1, t2):
            raise ValueError("paths live on different time grids")
        times, c1, c2 = t1, path1.coeffs, path2.coeffs
    else:
        c1, c2 = np.asarray(path1, dtype=float), np.asarray(path2, dtype=float)
        if c1.shape != c2.shape or c1.shape[0] != len(times):
            raise ValueError("paths and time grid disagree in length")
    gap = hnorm(np.asarray(c1) - np.asarray(c2))
    return float(np.trapezoid(gap, np.asarray(times, dtype=float)))


@dataclass(frozen=True)
class LipschitzObservable:
    """A 1-Lipschitz functional on H: ``<x, direction>`` or ``||x - anchor||``."""

    variant: str
    vector: np.ndarray

    @property
    def lipschitz(self) -> float:
        return 1.0

    def __call__(self, x):
        c = _coeffs(x)
        v = self.vector
        n = c.shape[-1]
        if v.size < n:
            v = np.concatenate([v, np.zeros(n - v.size)])
        elif v.size > n:
            # components beyond n are orthogonal to H_n
            if self.variant == "distance":
                tail = float(np.sum(v[n:] ** 2))
                return np.sqrt(np.sum((c - v[:n]) ** 2, axis=-1) + tail)
            v = v[:n]
        if self.variant == "linear":
            return c @ v
        return hnorm(c - v)

    def time_average(self, coeffs, times):
        """(1/T) int_0^T f(X_t) dt by the trapezoid rule on stored snapshots.

        ``coeffs`` has shape ``(..., len(times), n)``.
        """
        times = np.asarray(times, dtype=float)
        vals = self(coeffs)
        return np.trapezoid(vals, times, axis=-1) / (times[-1] - times[0])

    def describe(self):
        key = "direction" if self.variant == "linear" else "anchor"
        return {"type": self.variant, key: self.vector.tolist()}


def make_lipschitz_observable(variant: str, params) -> LipschitzObservable:
    """Build a certified 1-Lipschitz observable.

    ``linear``: params is a direction, normalised to unit H norm.
    ``distance``: params is the anchor point.
    """
    vec = np.array(_coeffs(params), dtype=float).reshape(-1)
    if variant == "linear":
        norm = float(np.sqrt(np.sum(vec * vec)))
        if norm == 0:
            raise ValueError("linear observable needs a nonzero direction")
        vec = vec / norm
    elif variant != "distance":
        raise ValueError(f"unknown observable variant {variant!r}")
    return LipschitzObservable(variant, vec)


def clopper_pearson_upper(k: int, m: int, level: float = 0.95) -> float:
    """One-sided Clopper-Pearson upper confidence bound for k successes in m."""
    if k >= m:
        return 1.0
    return float(beta.ppf(level, k + 1, m - k))


def bootstrap_mean_upper(values, rng: np.random.Generator, n_boot: int = 1000, level: float = 0.95) -> float:
    """Percentile-bootstrap upper bound for the mean of ``values``."""
    values = np.asarray(values, dtype=float)
    m = values.size
    means = np.empty(n_boot)
    batch = max(1, min(n_boot, 2_000_000 // max(m, 1)))
    for start in range(0, n_boot, batch):
        stop = min(n_boot, start + batch)
        idx = rng.integers(0, m, size=(stop - start, m))
        means[start:stop] = values[idx].mean(axis=1)
    return float(np.quantile(means, level))


def tail_and_moment_stats(samples, r_grid, lam_grid, rng=None, n_boot: int = 1000, level: float = 0.95) -> dict:
    """Empirical exceedance frequencies and centred exponential moments.

    For each r: frequency of ``sample - mean > r`` with its one-sided
    Clopper-Pearson upper bound. For each lam: mean of ``exp(lam (sample -
    mean))`` with a percentile-bootstrap upper bound.
    """
    x = np.asarray(samples, dtype=float).reshape(-1)
    if x.size == 0:
        raise ValueError("need at least one sample")
    if rng is None:
        rng = np.random.default_rng(0)
    m = x.size
    centred = x - x.mean()
    tails = []
    for r in r_grid:
        k = int(np.count_nonzero(centred > r))
        tails.append({"r": float(r), "count": k, "frequency": k / m, "upper": clopper_pearson_upper(k, m, level)})
    moments = []
    for lam in lam_grid:
        vals = np.exp(lam * centred)
        moments.append(
            {
                "lambda": float(lam),
                "mean": float(vals.mean()),
                "upper": bootstrap_mean_upper(vals, rng, n_boot, level),
            }
        )
    return {"m": m, "mean": float(x.mean()), "tails": tails, "moments": moments}
