import numpy as np
import pytest

from helpers import toy_dataset
from stmix.covariance import SpaceTimePoint
from stmix.data import Dataset
from stmix.draws import PosteriorDraws
from stmix.predict import (
    cv_split,
    holdout_targets,
    predict_points,
    summarize_samples,
    validation_metrics,
)
from stmix.sampler import SamplerConfig, run_chain
from stmix.simulate import gp_covariate_fields, simulate_dataset
from stmix.weights import sqrt_softmax


def fixed_param_draws(R, N, T, M=2, p=2, gamma=(0.4, 0.7), tau2_marg=(1.0, 0.5),
                      rho=(80.0, 200.0), sigma2=0.3, tau02=0.4, rho0=120.0,
                      alpha2=(0.0, 1.0), theta=None, delta=None, beta=(1.0, 0.5)):
    """Draws whose parameters repeat across records (fields may vary)."""
    gamma = np.asarray(gamma)
    tau2 = (1.0 - gamma**2) * np.asarray(tau2_marg)
    alpha = np.vstack([np.zeros(p), np.asarray(alpha2)])
    arrays = {
        "beta": np.tile(np.asarray(beta), (R, 1)),
        "sigma2": np.full(R, sigma2),
        "alpha": np.tile(alpha, (R, 1, 1)),
        "rho": np.tile(np.asarray(rho), (R, 1)),
        "tau2": np.tile(tau2, (R, 1)),
        "gamma": np.tile(gamma, (R, 1)),
        "rho0": np.full(R, rho0),
        "tau02": np.full(R, tau02),
        "delta": np.zeros((R, N)) if delta is None else np.tile(delta, (R, 1)),
        "theta": np.zeros((R, M, N, T)) if theta is None else np.tile(theta, (R, 1, 1, 1)),
    }
    return PosteriorDraws(arrays=arrays, meta={"kappa": 1.0, "seed": 0})


class TestCvSplit:
    def test_masks_partition_observed_cells(self):
        data = toy_dataset(n_sites=8, n_times=10, missing_cells=((0, 0), (3, 4)))
        train, test = cv_split(data, 0.2, seed=0)
        assert not np.any(train & test)
        np.testing.assert_array_equal(train | test, data.mask)

    def test_deterministic_given_seed(self):
        data = toy_dataset(n_sites=8, n_times=10)
        t1 = cv_split(data, 0.1, seed=5)
        t2 = cv_split(data, 0.1, seed=5)
        np.testing.assert_array_equal(t1[1], t2[1])
        t3 = cv_split(data, 0.1, seed=6)
        assert not np.array_equal(t1[1], t3[1])

    def test_holdout_size_at_application_scale(self):
        # 89 x 828 grid with 8.7% missing, 5% holdout of observed cells
        rng = np.random.default_rng(1)
        N, T = 89, 828
        mask = rng.uniform(size=(N, T)) >= 0.087
        data = Dataset(
            site_ids=[f"s{i}" for i in range(N)], lon=np.zeros(N), lat=np.zeros(N),
            coords=rng.uniform(0, 600, (N, 2)), ref_lat=34.0,
            time_labels=list(range(T)), time_blocks=np.zeros(T, int),
            y=np.where(mask, rng.standard_normal((N, T)), np.nan), mask=mask,
            X=np.ones((N, T, 1)), covariate_names=["intercept"],
            standardization={},
        )
        _, test = cv_split(data, 0.05, seed=2)
        n_test = int(test.sum())
        assert n_test == int(round(0.05 * mask.sum()))
        assert 3200 <= n_test <= 3700

    def test_bad_fraction_rejected(self):
        data = toy_dataset()
        for frac in (0.0, 1.0, -0.2, 1.3):
            with pytest.raises(ValueError):
                cv_split(data, frac)


class TestPredictPoints:
    def test_far_target_reaches_prior_variance(self):
        # far in space and ahead in time: conditioning washes out and the
        # predictive variance approaches sum_j w_j^2 tau2_marg + tau02 + sigma2
        N, T, R = 6, 20, 4000
        data = toy_dataset(seed=30, n_sites=N, n_times=T, missing_cells=())
        tau2_marg = (1.0, 0.5)
        draws = fixed_param_draws(R, N, T, tau2_marg=tau2_marg)
        x_star = np.array([1.0, 0.7])
        target = SpaceTimePoint(s=(50_000.0, 0.0), t=T - 1, x=x_star)
        result = predict_points(draws, data, [target], seed=0)
        w = sqrt_softmax(x_star @ draws.arrays["alpha"][0].T)
        expect = float((w**2) @ np.array(tau2_marg)) + 0.4 + 0.3
        assert result.variance[0] == pytest.approx(expect, rel=0.1)
        assert result.mean[0] == pytest.approx(x_star @ [1.0, 0.5], abs=0.15)

    def test_interpolation_limit_at_observed_cell(self):
        # a draw that reproduces the data exactly with a vanishing nugget
        rng = np.random.default_rng(31)
        N, T = 6, 8
        coords = rng.uniform(0, 200, (N, 2))
        coords -= coords.mean(axis=0)
        covs = gp_covariate_fields(coords, T, 1, 100.0, 3.0, rng)
        from stmix.covariance import CovModel
        from stmix.kernels import SpaceTimeKernel, SpatialKernel
        from stmix.weights import MultinomialLogisticWeights

        model = CovModel(
            kernels=(
                SpaceTimeKernel(SpatialKernel(rho=80.0, tau2=1.0), gamma=0.4),
                SpaceTimeKernel(SpatialKernel(rho=250.0, tau2=0.8), gamma=0.7),
            ),
            weights=MultinomialLogisticWeights(np.array([[0.0, 0.0], [0.0, 1.0]])),
            trend_kernel=SpatialKernel(rho=100.0, tau2=0.3),
            sigma2=1e-12,
        )
        data, truth = simulate_dataset(model, [1.0, 0.5], coords, covs, seed=32)
        draws = fixed_param_draws(
            R=40, N=N, T=T, gamma=truth.gamma, tau2_marg=(1.0, 0.8),
            rho=truth.rho, sigma2=1e-12, tau02=truth.tau02, rho0=truth.rho0,
            alpha2=truth.alpha[1], theta=truth.theta, delta=truth.delta,
            beta=truth.beta,
        )
        cells = [(0, 0), (3, 5), (5, 7)]
        targets = [
            SpaceTimePoint(s=coords[i], t=t, x=data.X[i, t]) for i, t in cells
        ]
        result = predict_points(draws, data, targets, seed=1)
        observed = np.array([data.y[i, t] for i, t in cells])
        np.testing.assert_allclose(result.mean, observed, atol=1e-5)

    def test_nugget_floor_and_new_site_path(self):
        data = toy_dataset(seed=33, n_sites=8, n_times=10, missing_cells=((2, 3),))
        cfg = SamplerConfig(n_iter=300, burn_in=100, seed=34)
        draws, _ = run_chain(data, 2, config=cfg)
        targets = [
            SpaceTimePoint(s=(40.0, 260.0), t=4, x=(1.0, 0.2)),   # new site
            SpaceTimePoint(s=data.coords[2], t=3, x=(1.0, -0.5)),  # missing cell
            SpaceTimePoint(s=data.coords[0], t=14, x=(1.0, 1.0)),  # future time
        ]
        result = predict_points(draws, data, targets, seed=2)
        sigma2_mean = float(draws.arrays["sigma2"].mean())
        assert np.all(result.variance >= sigma2_mean * 0.9)
        assert np.all(result.lower <= result.median)
        assert np.all(result.median <= result.upper)
        assert np.all(result.variance >= 0)

    def test_subsampling_draws(self):
        N, T = 4, 5
        data = toy_dataset(seed=35, n_sites=N, n_times=T, missing_cells=())
        draws = fixed_param_draws(200, N, T)
        target = [SpaceTimePoint(s=data.coords[0], t=1, x=(1.0, 0.0))]
        result = predict_points(draws, data, target, seed=3, max_draws=50)
        assert result.n_draws <= 50

    def test_covariate_dimension_checked(self):
        data = toy_dataset()
        draws = fixed_param_draws(10, data.n_sites, data.n_times)
        from stmix.exceptions import DataValidationError

        with pytest.raises(DataValidationError):
            predict_points(draws, data, [SpaceTimePoint(s=(0, 0), t=0, x=(1.0,))])


class TestValidationMetrics:
    def test_perfect_predictions(self):
        truth = np.array([1.0, -2.0, 0.5])
        samples = np.tile(truth, (100, 1))
        result = summarize_samples(samples)
        m = validation_metrics(truth, result)
        assert m.mse == 0.0 and m.mad == 0.0
        assert m.coverage == 1.0

    def test_unit_noise_calibration(self):
        rng = np.random.default_rng(36)
        n, R = 10_000, 500
        mu = rng.normal(0, 2, n)
        truth = mu + rng.standard_normal(n)
        samples = mu[None, :] + rng.standard_normal((R, n))
        m = validation_metrics(truth, summarize_samples(samples))
        assert m.mse == pytest.approx(1.0, rel=0.03)
        assert m.coverage == pytest.approx(0.95, abs=0.01)
        assert m.ave_var == pytest.approx(1.0, rel=0.03)
        assert m.med_sd == pytest.approx(1.0, rel=0.03)

    def test_wide_intervals_cover_everything(self):
        truth = np.zeros(5)
        rng = np.random.default_rng(37)
        samples = rng.uniform(-100, 100, (400, 5))
        m = validation_metrics(truth, summarize_samples(samples))
        assert m.coverage == 1.0

    def test_mad_ordering_sanity(self):
        rng = np.random.default_rng(38)
        for _ in range(20):
            n, R = 50, 200
            truth = rng.normal(0, 2, n)
            samples = rng.normal(0, 1, (R, n)) + rng.normal(0, 1, n)
            result = summarize_samples(samples)
            mae_mean = float(np.mean(np.abs(truth - result.mean)))
            width = float(np.mean(result.upper - result.lower))
            m = validation_metrics(truth, result)
            assert m.mad <= mae_mean + width

    def test_length_mismatch(self):
        result = summarize_samples(np.zeros((10, 3)))
        with pytest.raises(ValueError):
            validation_metrics(np.zeros(4), result)


class TestHoldoutTargets:
    def test_targets_align_with_mask(self):
        data = toy_dataset(n_sites=6, n_times=8)
        _, test = cv_split(data, 0.25, seed=7)
        points, truth = holdout_targets(data, test)
        assert len(points) == int(test.sum()) == truth.size
        sites, times = np.nonzero(test)
        for n, (pt, i, t) in enumerate(zip(points, sites, times)):
            np.testing.assert_array_equal(pt.s, data.coords[i])
            assert pt.t == t
            assert truth[n] == data.y[i, t]
