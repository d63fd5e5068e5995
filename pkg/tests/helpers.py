"""Shared fixtures and oracles for the test suite."""

from __future__ import annotations

import numpy as np

from stmix.data import Dataset
from stmix.sampler import GibbsSampler, Hyperpriors, SamplerConfig


def toy_dataset(seed=7, n_sites=5, n_times=4, missing_cells=((1, 2),)):
    """Small fully-specified dataset for conditional and Geweke tests."""
    rng = np.random.default_rng(seed)
    N, T = n_sites, n_times
    coords = rng.uniform(0, 300, (N, 2))
    X = np.ones((N, T, 2))
    X[:, :, 1] = rng.standard_normal((N, T))
    mask = np.ones((N, T), bool)
    for i, t in missing_cells:
        mask[i, t] = False
    y = np.where(mask, rng.standard_normal((N, T)), np.nan)
    return Dataset(
        site_ids=[f"s{i}" for i in range(N)],
        lon=np.zeros(N),
        lat=np.zeros(N),
        coords=coords,
        ref_lat=34.0,
        time_labels=list(range(T)),
        time_blocks=np.zeros(T, int),
        y=y,
        mask=mask,
        X=X,
        covariate_names=["intercept", "x1"],
        standardization={"x1": (0.0, 1.0)},
    )


# tame hyperprior constants for joint-distribution testing: every statistic
# has finite variance and the toy chain mixes quickly; the update code paths
# are identical to the defaults.
GEWEKE_HYPER = Hyperpriors(
    beta_sd=1.5,
    alpha_sd=1.5,
    precision_shape=3.0,
    precision_rate=3.0,
    rho_min=20.0,
    rho_max=600.0,
)

GEWEKE_CONFIG_KW = dict(
    n_iter=10, burn_in=5, adapt=False, step_rho=150.0, step_alpha=1.0
)


def geweke_stats(sampler: GibbsSampler) -> np.ndarray:
    """Twenty probe statistics of the joint (parameters, latents, data)."""
    st = sampler.state
    yobs = sampler.y[sampler.mask]
    return np.array(
        [
            st.beta[0],
            st.beta[1],
            float(st.beta @ st.beta),
            1.0 / st.sigma2,
            st.alpha[1, 0],
            st.alpha[1, 1],
            float((st.alpha[1] ** 2).sum()),
            float(st.gamma.sum()),
            float((st.gamma**2).sum()),
            float(st.gamma[0] * st.gamma[1]),
            float(st.rho.sum()) / 1000.0,
            float(st.rho[0] * st.rho[1]) / 1e6,
            float((1.0 / st.tau2).sum()),
            float(np.log(st.tau2).sum()),
            1.0 / st.tau02,
            float(st.delta[0]),
            float((st.delta**2).mean()),
            float(st.theta[:, 0, 0].sum()),
            float((st.theta**2).mean()),
            float((yobs**2).mean()),
        ]
    )


def run_geweke(n_draws=20000, seed_mc=3, seed_sc=4, n_batches=80):
    """Marginal-conditional vs successive-conditional comparison.

    Returns the vector of standardized mean discrepancies (one per probe
    statistic).  The successive-conditional chain starts from a prior draw,
    so it is stationary from the first step; its standard errors come from
    batch means.
    """
    data = toy_dataset()
    n_stats = geweke_stats(GibbsSampler(data, 2, GEWEKE_HYPER,
                                        SamplerConfig(seed=0, **GEWEKE_CONFIG_KW))).size

    mc = GibbsSampler(data, 2, GEWEKE_HYPER,
                      SamplerConfig(seed=seed_mc, **GEWEKE_CONFIG_KW))
    mc._adapting = False
    G1 = np.empty((n_draws, n_stats))
    for r in range(n_draws):
        mc.draw_state_from_prior()
        mc.regenerate_data()
        G1[r] = geweke_stats(mc)

    sc = GibbsSampler(data, 2, GEWEKE_HYPER,
                      SamplerConfig(seed=seed_sc, **GEWEKE_CONFIG_KW))
    sc._adapting = False
    sc.draw_state_from_prior()
    sc.regenerate_data()
    G2 = np.empty((n_draws, n_stats))
    for r in range(n_draws):
        sc.sweep()
        sc.regenerate_data()
        G2[r] = geweke_stats(sc)

    m1 = G1.mean(axis=0)
    se1 = G1.std(axis=0, ddof=1) / np.sqrt(n_draws)
    batch = G2[: (n_draws // n_batches) * n_batches].reshape(
        n_batches, -1, n_stats
    ).mean(axis=1)
    m2 = G2.mean(axis=0)
    se2 = batch.std(axis=0, ddof=1) / np.sqrt(n_batches)
    return (m1 - m2) / np.sqrt(se1**2 + se2**2)
