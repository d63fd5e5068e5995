"""Posterior-predictive simulation at arbitrary space-time targets.

Prediction conditions on each retained draw's latent fields (composition
sampling): component fields at new sites are reconstructed innovation by
innovation through the spatial conditional of each day's innovation field,
targets beyond the last training day propagate the AR(1) recursion forward
with fresh innovations, and the spatial trend at new sites is drawn from
its Gaussian conditional given the trend at the training sites.  Observed
sites and times use the draw's fields directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve
from scipy.spatial.distance import cdist

from .covariance import chol_psd
from .data import Dataset
from .draws import PosteriorDraws
from .exceptions import DataValidationError
from .weights import sqrt_softmax

SITE_MATCH_TOL_KM = 1e-6


@dataclass(eq=False)
class PredictionResult:
    """Per-target posterior predictive summaries over retained draws."""

    mean: np.ndarray
    median: np.ndarray
    variance: np.ndarray
    sd: np.ndarray
    lower: np.ndarray        # 2.5% quantile
    upper: np.ndarray        # 97.5% quantile
    n_draws: int
    samples: np.ndarray | None = None   # (n_draws, n_targets) when retained

    def __len__(self):
        return self.mean.size


@dataclass(frozen=True)
class MetricReport:
    """Validation metrics over a target set.

    mse: mean squared error about posterior means.
    mad: mean absolute deviation about posterior medians.
    ave_var: mean posterior predictive variance.
    med_sd: median posterior predictive standard deviation.
    coverage: fraction of truths inside the central 95% intervals.
    """

    mse: float
    mad: float
    ave_var: float
    med_sd: float
    coverage: float
    n: int


def cv_split(data: Dataset, holdout_fraction: float, seed: int = 0):
    """Uniform random holdout over observed cells; returns (train, test) masks.

    Masks are disjoint and partition the observed cells exactly;
    deterministic given the seed.
    """
    if not 0.0 < holdout_fraction < 1.0:
        raise ValueError("holdout_fraction must lie strictly between 0 and 1")
    rng = np.random.default_rng(seed)
    obs_flat = np.flatnonzero(data.mask.ravel())
    n_test = int(round(holdout_fraction * obs_flat.size))
    n_test = max(n_test, 1)
    if n_test >= obs_flat.size:
        raise ValueError("holdout fraction leaves an empty training set")
    chosen = rng.choice(obs_flat, size=n_test, replace=False)
    test = np.zeros(data.mask.size, dtype=bool)
    test[chosen] = True
    test = test.reshape(data.mask.shape)
    train = data.mask & ~test
    return train, test


def holdout_targets(data: Dataset, test_mask):
    """Space-time points (and truths) for held-out cells of a dataset."""
    from .covariance import SpaceTimePoint

    sites, times = np.nonzero(test_mask)
    points = [
        SpaceTimePoint(s=data.coords[i], t=int(t), x=data.X[i, t, :])
        for i, t in zip(sites, times)
    ]
    return points, data.y[test_mask]


def _match_sites(data: Dataset, targets):
    """Map targets to training site indices or deduplicated new sites."""
    site_idx = np.empty(len(targets), dtype=int)
    new_coords = []
    new_index = {}
    for n, pt in enumerate(targets):
        d = np.linalg.norm(data.coords - pt.s[None, :], axis=1)
        i = int(np.argmin(d))
        if d[i] < SITE_MATCH_TOL_KM:
            site_idx[n] = i
        else:
            key = (round(float(pt.s[0]), 6), round(float(pt.s[1]), 6))
            if key not in new_index:
                new_index[key] = len(new_coords)
                new_coords.append(pt.s)
            site_idx[n] = data.n_sites + new_index[key]
    new_coords = np.array(new_coords) if new_coords else np.zeros((0, 2))
    return site_idx, new_coords


def predict_points(
    draws: PosteriorDraws,
    data: Dataset,
    targets,
    seed: int = 0,
    max_draws: int | None = None,
    return_samples: bool = False,
) -> PredictionResult:
    """Posterior predictive distribution at each target point.

    Targets carry projected coordinates, a time index (at or beyond the
    training range), and standardized covariates matching the training
    schema.  Deterministic given ``seed``.  ``max_draws`` subsamples the
    retained draws at a fixed stride to bound cost.
    """
    if not targets:
        raise ValueError("no targets supplied")
    p = data.n_covariates
    for pt in targets:
        if pt.x.size != p:
            raise DataValidationError(
                f"target covariate vector has length {pt.x.size}, expected {p}"
            )
        if pt.t < 0:
            raise DataValidationError("target time index before the data range")

    rng = np.random.default_rng(seed)
    R_all = draws.n_draws
    use = np.arange(R_all)
    if max_draws is not None and max_draws < R_all:
        use = np.unique(np.linspace(0, R_all - 1, max_draws).astype(int))

    site_idx, new_coords = _match_sites(data, targets)
    n_new = new_coords.shape[0]
    N, T = data.n_sites, data.n_times
    kappa = float(draws.meta.get("kappa", 1.0))
    t_targets = np.array([pt.t for pt in targets])
    t_max = int(t_targets.max())
    n_future = max(0, t_max - (T - 1))

    all_coords = np.vstack([data.coords, new_coords])
    D_full = cdist(all_coords, all_coords)
    D_train = D_full[:N, :N]
    X_targets = np.array([pt.x for pt in targets])

    starts = np.zeros(T, dtype=bool)
    starts[0] = True
    tb = np.asarray(data.time_blocks)
    starts[1:] = tb[1:] != tb[:-1]

    a = draws.arrays
    samples = np.empty((use.size, len(targets)))
    for row, r in enumerate(use):
        beta = a["beta"][r]
        sigma2 = float(a["sigma2"][r])
        alpha = a["alpha"][r]
        rho = a["rho"][r]
        tau2 = a["tau2"][r]
        gamma = a["gamma"][r]
        M = rho.size

        # component fields on train + new sites over training times
        theta_full = np.empty((M, N + n_new, T + n_future))
        for j in range(M):
            th = a["theta"][r][j]
            theta_full[j, :N, :T] = th
            if n_new:
                C = np.exp(-((D_full / rho[j]) ** kappa))
                L11 = chol_psd(C[:N, :N])
                A = cho_solve((L11, True), C[:N, N:]).T        # (n_new, N)
                S = C[N:, N:] - A @ C[:N, N:]
                Ls = chol_psd((S + S.T) / 2.0)
                E = th.copy()
                E[:, ~starts] -= gamma[j] * th[:, np.flatnonzero(~starts) - 1]
                E_new = A @ E + np.sqrt(tau2[j]) * (
                    Ls @ rng.standard_normal((n_new, T))
                )
                for t in range(T):
                    if starts[t]:
                        theta_full[j, N:, t] = E_new[:, t]
                    else:
                        theta_full[j, N:, t] = (
                            gamma[j] * theta_full[j, N:, t - 1] + E_new[:, t]
                        )
            if n_future:
                C_all = np.exp(-((D_full / rho[j]) ** kappa))
                L_all = chol_psd(C_all)
                for t in range(T, T + n_future):
                    e = np.sqrt(tau2[j]) * (
                        L_all @ rng.standard_normal(N + n_new)
                    )
                    theta_full[j, :, t] = gamma[j] * theta_full[j, :, t - 1] + e

        delta_full = np.empty(N + n_new)
        delta_full[:N] = a["delta"][r]
        if n_new:
            rho0, tau02 = float(a["rho0"][r]), float(a["tau02"][r])
            C0 = np.exp(-((D_full / rho0) ** kappa))
            L011 = chol_psd(C0[:N, :N])
            A0 = cho_solve((L011, True), C0[:N, N:]).T
            S0 = C0[N:, N:] - A0 @ C0[:N, N:]
            L0s = chol_psd((S0 + S0.T) / 2.0)
            delta_full[N:] = A0 @ a["delta"][r] + np.sqrt(tau02) * (
                L0s @ rng.standard_normal(n_new)
            )

        W = sqrt_softmax(X_targets @ alpha.T)                  # (n_targets, M)
        mean_part = X_targets @ beta + delta_full[site_idx]
        for j in range(M):
            mean_part = mean_part + W[:, j] * theta_full[j, site_idx, t_targets]
        samples[row] = mean_part + np.sqrt(sigma2) * rng.standard_normal(
            len(targets)
        )

    return summarize_samples(samples, return_samples=return_samples)


def summarize_samples(samples, return_samples: bool = False) -> PredictionResult:
    """Fold an (n_draws, n_targets) sample matrix into a PredictionResult."""
    samples = np.asarray(samples, dtype=float)
    lower, med, upper = np.percentile(samples, [2.5, 50.0, 97.5], axis=0)
    return PredictionResult(
        mean=samples.mean(axis=0),
        median=med,
        variance=samples.var(axis=0, ddof=1),
        sd=samples.std(axis=0, ddof=1),
        lower=lower,
        upper=upper,
        n_draws=samples.shape[0],
        samples=samples if return_samples else None,
    )


def validation_metrics(truth, result: PredictionResult) -> MetricReport:
    """Score predictions against held-out truths (see MetricReport fields)."""
    truth = np.asarray(truth, dtype=float)
    if truth.size != len(result):
        raise ValueError(
            f"{truth.size} truths for {len(result)} predictions"
        )
    inside = (truth >= result.lower) & (truth <= result.upper)
    return MetricReport(
        mse=float(np.mean((truth - result.mean) ** 2)),
        mad=float(np.mean(np.abs(truth - result.median))),
        ave_var=float(np.mean(result.variance)),
        med_sd=float(np.median(result.sd)),
        coverage=float(np.mean(inside)),
        n=truth.size,
    )
