import numpy as np
import pytest

from stmix.covariance import (
    CovModel,
    SpaceTimePoint,
    chol_psd,
    cov_matrix,
    mixture_cov,
    monte_carlo_cov,
)
from stmix.exceptions import NumericalError
from stmix.kernels import SpaceTimeKernel, SpatialKernel
from stmix.weights import MultinomialLogisticWeights, SimpleLogitWeights


def _model(M=2, p=3, seed=0, sigma2=0.3, trend=True):
    rng = np.random.default_rng(seed)
    alpha = np.zeros((M, p))
    alpha[1:] = rng.normal(0, 1.0, (M - 1, p))
    kernels = tuple(
        SpaceTimeKernel(
            SpatialKernel(rho=float(rng.uniform(30, 300)),
                          tau2=float(rng.uniform(0.5, 2.0))),
            gamma=float(rng.uniform(0.2, 0.9)),
        )
        for _ in range(M)
    )
    return CovModel(
        kernels=kernels,
        weights=MultinomialLogisticWeights(alpha),
        trend_kernel=SpatialKernel(rho=150.0, tau2=0.5) if trend else None,
        sigma2=sigma2,
    )


def _points(n, seed=0, p=3):
    rng = np.random.default_rng(seed)
    return [
        SpaceTimePoint(
            s=rng.uniform(0, 400, 2),
            t=int(rng.integers(0, 8)),
            x=np.r_[1.0, rng.normal(0, 1, p - 1)],
        )
        for _ in range(n)
    ]


class TestMixtureCov:
    def test_single_component_reduces_to_kernel(self):
        kern = SpaceTimeKernel(SpatialKernel(rho=120.0, tau2=1.4), gamma=0.6)
        model = CovModel(
            kernels=(kern,), weights=MultinomialLogisticWeights(np.zeros((1, 2)))
        )
        p = SpaceTimePoint(s=(0.0, 0.0), t=0, x=(1.0, 0.3))
        q = SpaceTimePoint(s=(60.0, 80.0), t=3, x=(1.0, -1.1))
        expect = 1.4 * np.exp(-100.0 / 120.0) * 0.6**3
        assert mixture_cov(model, p, q) == pytest.approx(expect, rel=1e-14)

    def test_symmetry_in_arguments(self):
        model = _model(M=3, seed=5)
        pts = _points(6, seed=6)
        for a in pts:
            for b in pts:
                assert mixture_cov(model, a, b) == pytest.approx(
                    mixture_cov(model, b, a), rel=1e-14
                )

    def test_zero_lag_is_weighted_variance(self):
        model = _model(M=3, seed=7)
        for pt in _points(5, seed=8):
            w = model.weights.weights(pt.x)
            expect = sum(
                w[j] ** 2 * model.kernels[j].tau2 for j in range(3)
            )
            assert mixture_cov(model, pt, pt) == pytest.approx(expect, rel=1e-13)

    def test_uniform_weights_give_plain_average(self):
        # all-zero coefficients: squared weights are 1/M each
        M, p = 4, 2
        kernels = tuple(
            SpaceTimeKernel(SpatialKernel(rho=r, tau2=v), gamma=g)
            for r, v, g in [(50, 1, 0.3), (150, 2, 0.5), (250, 0.7, 0.7), (90, 1.2, 0.4)]
        )
        model = CovModel(
            kernels=kernels, weights=MultinomialLogisticWeights(np.zeros((M, p)))
        )
        a = SpaceTimePoint(s=(0, 0), t=0, x=(1.0, 0.5))
        b = SpaceTimePoint(s=(100, 0), t=2, x=(1.0, -0.5))
        mean_k = np.mean(
            [k.tau2 * np.exp(-100 / k.spatial.rho) * k.gamma**2 for k in kernels]
        )
        assert mixture_cov(model, a, b) == pytest.approx(mean_k, rel=1e-13)


class TestCovMatrix:
    def test_single_point(self):
        model = _model(seed=1)
        pt = _points(1, seed=2)[0]
        full = cov_matrix(model, [pt], include_trend=True, include_nugget=True)
        expect = mixture_cov(model, pt, pt) + 0.5 + model.sigma2
        assert full.shape == (1, 1)
        assert full[0, 0] == pytest.approx(expect, rel=1e-13)

    def test_bitwise_symmetry(self):
        model = _model(M=3, seed=3)
        mat = cov_matrix(model, _points(15, seed=4), include_trend=True)
        assert np.array_equal(mat, mat.T)

    def test_duplicated_point_exactly_singular(self):
        model = _model(seed=9)
        pt = _points(1, seed=10)[0]
        dup = SpaceTimePoint(s=pt.s.copy(), t=pt.t, x=pt.x.copy())
        mat = cov_matrix(model, [pt, dup])
        assert mat[0, 0] == mat[0, 1] == mat[1, 0] == mat[1, 1]
        assert np.linalg.matrix_rank(mat) == 1

    def test_matches_monte_carlo_oracle(self):
        model = _model(M=2, seed=11, trend=False)
        pts = _points(12, seed=12)
        exact = cov_matrix(model, pts)
        est, se = monte_carlo_cov(model, pts, n_draws=80000, seed=13)
        z = np.abs(est - exact) / se
        assert np.mean(z < 3.0) >= 0.99

    def test_empty_points_rejected(self):
        with pytest.raises(ValueError):
            cov_matrix(_model(), [])


class TestCholPsd:
    def test_jitter_recovers_singular_psd(self):
        model = _model(seed=14)
        pt = _points(1, seed=15)[0]
        dup = SpaceTimePoint(s=pt.s.copy(), t=pt.t, x=pt.x.copy())
        mat = cov_matrix(model, [pt, dup])  # rank 1, PSD
        L = chol_psd(mat)
        np.testing.assert_allclose(L @ L.T, mat, atol=1e-5 * mat[0, 0])

    def test_indefinite_matrix_raises_with_diagnostics(self):
        bad = np.array([[1.0, 2.0], [2.0, 1.0]])  # eigenvalues 3, -1
        with pytest.raises(NumericalError) as err:
            chol_psd(bad)
        assert "min_eig" in err.value.info

    def test_zero_matrix_factors_to_zero(self):
        np.testing.assert_array_equal(chol_psd(np.zeros((3, 3))), np.zeros((3, 3)))


class TestMonteCarloOracle:
    def test_zero_variance_model_gives_zero_matrix(self):
        kernels = tuple(
            SpaceTimeKernel(SpatialKernel(rho=100.0, tau2=0.0), gamma=0.5)
            for _ in range(2)
        )
        model = CovModel(
            kernels=kernels, weights=MultinomialLogisticWeights(np.zeros((2, 2)))
        )
        pts = _points(5, seed=16, p=2)
        est, se = monte_carlo_cov(model, pts, n_draws=2000, seed=17)
        np.testing.assert_array_equal(est, 0.0)
        np.testing.assert_array_equal(se, 0.0)

    def test_single_component_converges_to_kernel(self):
        kern = SpaceTimeKernel(SpatialKernel(rho=120.0, tau2=1.0), gamma=0.5)
        model = CovModel(
            kernels=(kern,), weights=MultinomialLogisticWeights(np.zeros((1, 2)))
        )
        pts = _points(8, seed=18, p=2)
        exact = cov_matrix(model, pts)
        est, se = monte_carlo_cov(model, pts, n_draws=60000, seed=19)
        assert np.all(np.abs(est - exact) < 4.0 * se + 1e-12)

    def test_minimum_draws_enforced(self):
        with pytest.raises(ValueError):
            monte_carlo_cov(_model(), _points(3), n_draws=10)


class TestNonmonotoneRealization:
    def test_periodic_covariate_creates_local_increase(self):
        # 1-D grid embedded on the x-axis; sinusoidal covariate in the
        # weights makes covariance rise again with distance somewhere
        s = np.linspace(-1, 1, 101)
        x = np.sin(4 * np.pi * s)
        kernels = (
            SpaceTimeKernel(SpatialKernel(rho=0.02, tau2=1.0), gamma=0.5),
            SpaceTimeKernel(SpatialKernel(rho=0.50, tau2=1.0), gamma=0.5),
        )
        scheme = SimpleLogitWeights(np.array([1.0]))
        model = CovModel(kernels=kernels, weights=scheme)
        pts = [
            SpaceTimePoint(s=(si, 0.0), t=0, x=(xi,)) for si, xi in zip(s, x)
        ]
        mat = cov_matrix(model, pts)
        found = False
        for i in range(len(s)):
            right = mat[i, i:]
            if np.any(np.diff(right) > 1e-9):
                found = True
                break
        assert found
