"""Synthetic data generation from the full model, plus 1-D demo curves.

Simulation is the ground-truth oracle for every recovery test: it draws the
latent component fields from their stationary AR(1) distribution (marginal
variance equal to each kernel's ``tau2``), the spatial trend from its
kernel, assembles responses with nugget noise, and returns both the dataset
and the true parameter state in sampler conventions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .covariance import CovModel, chol_psd
from .data import Dataset, inverse_mercator, standardize_columns
from .kernels import SpaceTimeKernel, SpatialKernel, eval_spatial
from .sampler import ParamState
from .weights import MultinomialLogisticWeights, SimpleLogitWeights, sqrt_softmax

DEFAULT_REF_LAT = 34.0


def gp_covariate_fields(coords, n_times, n_fields, space_range, time_range, rng):
    """Smooth space-time Gaussian fields, one (N, T) slab per field.

    Separable exponential covariance with the given spatial range (km) and
    temporal range (days); used to generate covariates that vary coherently
    enough for the weights to act on.
    """
    N = coords.shape[0]
    Ls = chol_psd(np.exp(-cdist(coords, coords) / space_range))
    tt = np.arange(n_times, dtype=float)
    Lt = chol_psd(np.exp(-np.abs(tt[:, None] - tt[None, :]) / time_range))
    out = np.empty((N, n_times, n_fields))
    for k in range(n_fields):
        out[:, :, k] = Ls @ rng.standard_normal((N, n_times)) @ Lt.T
    return out


def _block_starts(time_blocks):
    starts = np.zeros(len(time_blocks), dtype=bool)
    starts[0] = True
    starts[1:] = np.asarray(time_blocks)[1:] != np.asarray(time_blocks)[:-1]
    return starts


def simulate_dataset(
    model: CovModel,
    beta,
    coords,
    covariates,
    *,
    missing_rate: float = 0.0,
    seed: int = 0,
    time_blocks=None,
    ref_lat: float = DEFAULT_REF_LAT,
    site_ids=None,
):
    """Draw a dataset from the generative model; returns (Dataset, truth).

    ``covariates`` is an (N, T, k) array of raw covariate fields; they are
    standardized over the observed cells (after drawing the missingness
    mask, so the stored dataset satisfies its standardization invariant) and
    an intercept column is prepended.  The same standardized covariates
    drive both the mean and the mixture weights.  Component fields start
    from the AR(1) stationary distribution, whose marginal variance is the
    kernel ``tau2``; the truth state therefore records innovation variances
    ``(1 - gamma^2) * tau2``.  Requires multinomial-logistic weights (the
    scheme the sampler fits).
    """
    if not isinstance(model.weights, MultinomialLogisticWeights):
        raise ValueError("simulate_dataset requires multinomial-logistic weights")
    if not 0.0 <= missing_rate < 1.0:
        raise ValueError("missing_rate must lie in [0, 1)")
    for kern in model.kernels:
        if not kern.gamma < 1.0:
            raise ValueError("temporal decay must be < 1 for a stationary start")

    rng = np.random.default_rng(seed)
    coords = np.asarray(coords, dtype=float)
    covariates = np.asarray(covariates, dtype=float)
    N = coords.shape[0]
    T = covariates.shape[1]
    M = model.n_components
    beta = np.asarray(beta, dtype=float)
    if time_blocks is None:
        time_blocks = np.zeros(T, dtype=int)
    starts = _block_starts(time_blocks)

    mask = rng.uniform(size=(N, T)) >= missing_rate
    names = [f"x{k + 1}" for k in range(covariates.shape[2])]
    std_X, record = standardize_columns(covariates, mask, names)
    X = np.concatenate([np.ones((N, T, 1)), std_X], axis=2)
    if beta.size != X.shape[2]:
        raise ValueError(f"beta has {beta.size} entries for {X.shape[2]} covariates")

    W = np.moveaxis(sqrt_softmax(np.einsum("ntp,mp->ntm", X, model.weights.alpha)), 2, 0)

    D = cdist(coords, coords)
    theta = np.empty((M, N, T))
    gammas = np.array([k.gamma for k in model.kernels])
    marg = np.array([k.tau2 for k in model.kernels])
    innov = (1.0 - gammas**2) * marg
    for j, kern in enumerate(model.kernels):
        L = chol_psd(np.exp(-((D / kern.spatial.rho) ** kern.spatial.kappa)))
        s_marg = np.sqrt(marg[j])
        s_inn = np.sqrt(innov[j])
        for t in range(T):
            z = L @ rng.standard_normal(N)
            if starts[t]:
                theta[j, :, t] = s_marg * z
            else:
                theta[j, :, t] = gammas[j] * theta[j, :, t - 1] + s_inn * z

    if model.trend_kernel is not None and model.trend_kernel.tau2 > 0:
        L0 = chol_psd(
            np.exp(-((D / model.trend_kernel.rho) ** model.trend_kernel.kappa))
        )
        delta = np.sqrt(model.trend_kernel.tau2) * (L0 @ rng.standard_normal(N))
        rho0, tau02 = model.trend_kernel.rho, model.trend_kernel.tau2
    else:
        delta = np.zeros(N)
        rho0, tau02 = 500.0, 1e-12

    mu = np.einsum("mnt,mnt->nt", W, theta)
    eps = np.sqrt(model.sigma2) * rng.standard_normal((N, T))
    y_full = X @ beta + delta[:, None] + mu + eps
    y = np.where(mask, y_full, np.nan)

    lon, lat = inverse_mercator(
        coords[:, 0] - coords[:, 0].mean(),
        coords[:, 1] - coords[:, 1].mean(),
        ref_lat,
    )
    lat = lat + (ref_lat - lat.mean())  # keep the centroid at the reference
    if site_ids is None:
        site_ids = [f"s{i:03d}" for i in range(N)]

    data = Dataset(
        site_ids=list(site_ids),
        lon=np.asarray(lon),
        lat=np.asarray(lat),
        coords=coords.copy(),
        ref_lat=ref_lat,
        time_labels=list(range(T)),
        time_blocks=np.asarray(time_blocks, dtype=int),
        y=y,
        mask=mask,
        X=X,
        covariate_names=["intercept"] + names,
        standardization=record,
    )
    truth = ParamState(
        beta=beta.copy(),
        sigma2=float(model.sigma2),
        alpha=model.weights.alpha.copy(),
        rho=np.array([k.spatial.rho for k in model.kernels]),
        tau2=innov,
        gamma=gammas,
        rho0=float(rho0),
        tau02=float(tau02),
        delta=delta,
        theta=theta,
    )
    return data, truth


@dataclass(frozen=True)
class BenchmarkSpec:
    """Default two-component synthetic benchmark (desk-scale, strongly
    identified nonstationarity).  All values are test-fixture choices."""

    n_sites: int = 20
    n_times: int = 50
    extent_km: float = 500.0
    cov_space_range: float = 200.0
    cov_time_range: float = 5.0
    beta: tuple = (2.0, 0.7, -0.4)
    alpha2: tuple = (0.0, 1.5, 0.0)
    rho: tuple = (50.0, 300.0)
    gamma: tuple = (0.3, 0.8)
    tau2: tuple = (1.0, 1.0)          # marginal field variances
    sigma2: float = 0.25
    rho0: float = 150.0
    tau02: float = 0.5
    missing_rate: float = 0.0


def benchmark_model(spec: BenchmarkSpec | None = None) -> CovModel:
    spec = spec or BenchmarkSpec()
    kernels = tuple(
        SpaceTimeKernel(SpatialKernel(rho=r, tau2=v), gamma=g)
        for r, v, g in zip(spec.rho, spec.tau2, spec.gamma)
    )
    # component 2 carries the covariate effect; any further components idle
    alpha = np.zeros((len(kernels), len(spec.beta)))
    if len(kernels) > 1:
        alpha[1] = np.asarray(spec.alpha2)
    return CovModel(
        kernels=kernels,
        weights=MultinomialLogisticWeights(alpha),
        trend_kernel=SpatialKernel(rho=spec.rho0, tau2=spec.tau02),
        sigma2=spec.sigma2,
    )


def two_component_benchmark(seed: int = 0, spec: BenchmarkSpec | None = None):
    """Simulate the default benchmark; returns (Dataset, truth, CovModel)."""
    spec = spec or BenchmarkSpec()
    rng = np.random.default_rng(seed)
    coords = rng.uniform(0.0, spec.extent_km, size=(spec.n_sites, 2))
    coords -= coords.mean(axis=0)
    covs = gp_covariate_fields(
        coords,
        spec.n_times,
        len(spec.beta) - 1,
        spec.cov_space_range,
        spec.cov_time_range,
        rng,
    )
    model = benchmark_model(spec)
    data, truth = simulate_dataset(
        model,
        spec.beta,
        coords,
        covs,
        missing_rate=spec.missing_rate,
        seed=int(rng.integers(2**31)),
    )
    return data, truth, model


@dataclass(eq=False)
class DemoCurves:
    """Deterministic 1-D covariance surface for a chosen covariate shape."""

    variant: str
    s: np.ndarray          # (n,) grid on [-1, 1]
    x: np.ndarray          # covariate values on the grid
    w2: np.ndarray         # weight on the long-range component
    cov: np.ndarray        # (n, n) covariance surface

    def rows(self):
        for i, si in enumerate(self.s):
            for k, sk in enumerate(self.s):
                yield si, sk, self.cov[i, k]


DEMO_VARIANTS = ("quadratic", "periodic")


def demo_curves(variant: str, n_grid: int = 101) -> DemoCurves:
    """Covariance of a 1-D two-component mixture with logit weights.

    The short-range component has range 0.02, the long-range component 0.50
    (both unit variance).  The weight on the long-range component is
    logistic(x(s)) with x(s) = s^2 ("quadratic") or sin(4 pi s)
    ("periodic"), and the first weight is its complement, so the weights sum
    to one.  The quadratic variant concentrates long-range correlation near
    s = +-1; the periodic variant makes covariance non-monotone in distance.
    """
    if variant not in DEMO_VARIANTS:
        raise ValueError(f"variant must be one of {DEMO_VARIANTS}")
    s = np.linspace(-1.0, 1.0, n_grid)
    x = s**2 if variant == "quadratic" else np.sin(4.0 * np.pi * s)
    scheme = SimpleLogitWeights(np.array([1.0]))
    W = scheme.weights(x[:, None])  # (n, 2)
    k1 = SpatialKernel(rho=0.02, tau2=1.0)
    k2 = SpatialKernel(rho=0.50, tau2=1.0)
    H = np.abs(s[:, None] - s[None, :])
    cov = np.outer(W[:, 0], W[:, 0]) * eval_spatial(k1, H) + np.outer(
        W[:, 1], W[:, 1]
    ) * eval_spatial(k2, H)
    return DemoCurves(variant=variant, s=s, x=x, w2=W[:, 1], cov=cov)
