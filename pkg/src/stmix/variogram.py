"""Empirical variograms of mean-trend residuals, optionally stratified.

The estimate in a distance bin centered at h with half-width eps is the
mean squared difference over all same-day site pairs whose separation lies
in (h - eps, h + eps]; an i.i.d. residual field with variance v therefore
plateaus at 2v.  Stratified variants classify each pair by comparing both
members' covariate values to the pooled sample median (low_low, low_high,
high_high), and the standardized variant divides each day's residuals by
that day's cross-site sample standard deviation before differencing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .data import Dataset
from .exceptions import NumericalError

RAW = "raw"
STANDARDIZED = "standardized"
STRATA = ("all", "low_low", "low_high", "high_high")


def default_bins():
    """25 bins of 25 km spanning (0, 625] km."""
    centers = 12.5 + 25.0 * np.arange(25)
    return centers, 12.5


@dataclass(eq=False)
class VariogramResult:
    """Binned semivariance estimates for one stratum and residual kind.

    Empty bins keep count 0 and a NaN value; nothing is interpolated.
    """

    centers: np.ndarray
    half_width: float
    values: np.ndarray
    counts: np.ndarray
    stratum: str
    kind: str

    def rows(self):
        for h, v, c in zip(self.centers, self.values, self.counts):
            yield self.kind, self.stratum, float(h), float(self.half_width), (
                float(v) if np.isfinite(v) else ""
            ), int(c)


def ols_residuals(data: Dataset, design_columns=None) -> np.ndarray:
    """Pooled ordinary-least-squares residuals of the mean trend.

    ``design_columns`` selects covariate names (default: all, including the
    intercept).  Returns an (N, T) field with NaN at unobserved cells.
    """
    names = design_columns or list(data.covariate_names)
    idx = [data.covariate_names.index(n) for n in names]
    Xo = data.X[data.mask][:, idx]
    yo = data.y[data.mask]
    s = np.linalg.svd(Xo, compute_uv=False)
    if s[-1] <= s[0] * max(Xo.shape) * np.finfo(float).eps:
        raise NumericalError("variogram design matrix is rank deficient")
    beta, *_ = np.linalg.lstsq(Xo, yo, rcond=None)
    resid = np.full(data.y.shape, np.nan)
    resid[data.mask] = yo - Xo @ beta
    return resid


def _standardize_by_day(residuals):
    """Divide each day by its cross-site sample SD; days with < 2 observed
    residuals are dropped entirely."""
    out = np.full_like(residuals, np.nan)
    for t in range(residuals.shape[1]):
        col = residuals[:, t]
        obs = np.isfinite(col)
        if obs.sum() < 2:
            continue
        s_t = float(np.std(col[obs], ddof=1))
        if s_t == 0.0:
            continue
        out[obs, t] = col[obs] / s_t
    return out


def empirical_variogram(
    residuals,
    coords,
    bins=None,
    stratify_by=None,
    residual_kind: str = RAW,
):
    """Binned mean squared differences of same-day residual pairs.

    Parameters
    ----------
    residuals : (N, T) array with NaN at missing cells
    coords : (N, 2) projected site coordinates, km
    bins : (centers, half_width); defaults to :func:`default_bins`.  Bins
        must not overlap.
    stratify_by : optional (N, T) covariate array; adds low_low / low_high /
        high_high strata split at the pooled median over observed cells
    residual_kind : "raw" or "standardized"

    Returns a list of :class:`VariogramResult`, the unstratified "all"
    result first.  The "all" accumulation is independent of the strata, so
    the partition identity (stratified counts summing to the total) is a
    checkable property rather than a bookkeeping artifact.
    """
    residuals = np.asarray(residuals, dtype=float)
    coords = np.asarray(coords, dtype=float)
    if bins is None:
        bins = default_bins()
    centers, eps = np.asarray(bins[0], dtype=float), float(bins[1])
    if np.any(np.diff(centers) <= 0):
        raise ValueError("bin centers must be strictly increasing")
    if np.any(np.diff(centers) < 2 * eps - 1e-12):
        raise ValueError("bins overlap")
    if residual_kind not in (RAW, STANDARDIZED):
        raise ValueError(f"unknown residual kind {residual_kind!r}")

    work = residuals if residual_kind == RAW else _standardize_by_day(residuals)

    strata = ["all"]
    if stratify_by is not None:
        stratify_by = np.asarray(stratify_by, dtype=float)
        median = float(np.median(stratify_by[np.isfinite(residuals)]))
        low = stratify_by < median
        strata = list(STRATA)

    D = cdist(coords, coords)
    iu, ik = np.triu_indices(coords.shape[0], k=1)
    pair_d = D[iu, ik]
    lower = centers - eps
    bin_of = np.searchsorted(lower, pair_d, side="left") - 1
    valid = (bin_of >= 0) & (pair_d <= centers[np.clip(bin_of, 0, None)] + eps)
    bin_of = np.where(valid, bin_of, -1)

    B = centers.size
    sums = {s: np.zeros(B) for s in strata}
    counts = {s: np.zeros(B, dtype=int) for s in strata}

    T = work.shape[1]
    for t in range(T):
        col = work[:, t]
        both = np.isfinite(col[iu]) & np.isfinite(col[ik]) & (bin_of >= 0)
        if not both.any():
            continue
        b = bin_of[both]
        d2 = (col[iu[both]] - col[ik[both]]) ** 2
        np.add.at(sums["all"], b, d2)
        np.add.at(counts["all"], b, 1)
        if stratify_by is not None:
            li, lk = low[iu[both], t], low[ik[both], t]
            for name, sel in (
                ("low_low", li & lk),
                ("high_high", ~li & ~lk),
                ("low_high", li ^ lk),
            ):
                np.add.at(sums[name], b[sel], d2[sel])
                np.add.at(counts[name], b[sel], 1)

    results = []
    for s in strata:
        with np.errstate(invalid="ignore"):
            values = np.where(counts[s] > 0, sums[s] / np.maximum(counts[s], 1), np.nan)
        results.append(
            VariogramResult(
                centers=centers.copy(),
                half_width=eps,
                values=values,
                counts=counts[s].copy(),
                stratum=s,
                kind=residual_kind,
            )
        )
    return results
