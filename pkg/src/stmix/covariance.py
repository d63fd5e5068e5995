"""Dense covariance assembly for the covariate-weighted process mixture.

The latent spatiotemporal effect is a sum over M components of
``w_j[x(s,t)] * theta_j(s,t)`` with independent zero-mean fields theta_j.
Integrating the fields out, the covariance between two points is

    sum_j w_j(x_p) * w_j(x_q) * K_j(||s_p - s_q||, t_p - t_q),

which depends on the local covariates at both points, not just their
separation.  This module assembles that covariance (optionally adding a
purely spatial trend kernel and a nugget) into dense matrices and provides
the brute-force Monte Carlo estimator used to validate the closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .exceptions import NumericalError
from .kernels import SpaceTimeKernel, SpatialKernel, eval_spatial

JITTER_START = 1e-10
JITTER_MAX = 1e-6


@dataclass(frozen=True, eq=False)
class SpaceTimePoint:
    """A location in projected km, an integer time index, and covariates."""

    s: np.ndarray
    t: int
    x: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float).reshape(2)
        x = np.asarray(self.x, dtype=float).ravel()
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "x", x)


@dataclass(frozen=True, eq=False)
class CovModel:
    """Full covariance specification: mixture kernels, weights, trend, nugget.

    ``kernels`` holds one separable space-time kernel per component with
    ``tau2`` equal to the component's marginal variance.  ``trend_kernel``
    is the purely spatial covariance of the site-level trend field and
    ``sigma2`` the observation-noise variance.
    """

    kernels: tuple
    weights: object
    trend_kernel: SpatialKernel | None = None
    sigma2: float = 0.0

    def __post_init__(self):
        kernels = tuple(self.kernels)
        if not kernels:
            raise ValueError("need at least one component kernel")
        for k in kernels:
            if not isinstance(k, SpaceTimeKernel):
                raise ValueError("kernels must be SpaceTimeKernel instances")
        if self.weights.n_components != len(kernels):
            raise ValueError(
                f"{self.weights.n_components} weight components for "
                f"{len(kernels)} kernels"
            )
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be nonnegative")
        object.__setattr__(self, "kernels", kernels)

    @property
    def n_components(self) -> int:
        return len(self.kernels)


def _point_arrays(points):
    coords = np.array([p.s for p in points], dtype=float)
    times = np.array([p.t for p in points], dtype=float)
    X = np.array([p.x for p in points], dtype=float)
    return coords, times, X


def _weights_batch(scheme, X):
    try:
        return np.atleast_2d(scheme.weights(X))
    except (ValueError, NotImplementedError):
        return np.array([scheme.weights(x) for x in X])


def mixture_cov(model: CovModel, p: SpaceTimePoint, q: SpaceTimePoint) -> float:
    """Covariance of the latent mixture between two space-time points.

    Symmetric in (p, q); excludes trend and nugget.
    """
    h_s = float(np.linalg.norm(p.s - q.s))
    h_t = p.t - q.t
    wp = model.weights.weights(p.x)
    wq = model.weights.weights(q.x)
    total = 0.0
    for j, kern in enumerate(model.kernels):
        total += (
            wp[j]
            * wq[j]
            * eval_spatial(kern.spatial, h_s)
            * kern.gamma ** abs(h_t)
        )
    return float(total)


def cov_matrix(
    model: CovModel,
    points,
    include_trend: bool = False,
    include_nugget: bool = False,
) -> np.ndarray:
    """Assemble the dense covariance matrix over ``points``.

    Entry (i, k) is the mixture covariance plus, when requested, the spatial
    trend kernel at the site separation (times are irrelevant to the trend)
    and a nugget ``sigma2`` on the diagonal.  The matrix is exact; it is not
    jittered here, so degenerate configurations (duplicated points without a
    nugget) yield exactly singular output.  Use :func:`chol_psd` to factor.
    """
    if len(points) == 0:
        raise ValueError("points must be nonempty")
    coords, times, X = _point_arrays(points)
    D = cdist(coords, coords)
    L = np.abs(times[:, None] - times[None, :])
    W = _weights_batch(model.weights, X)

    out = np.zeros_like(D)
    for j, kern in enumerate(model.kernels):
        out += np.outer(W[:, j], W[:, j]) * eval_spatial(kern.spatial, D) * (
            kern.gamma**L
        )
    if include_trend:
        if model.trend_kernel is None:
            raise ValueError("model has no trend kernel")
        out += eval_spatial(model.trend_kernel, D)
    if include_nugget:
        out[np.diag_indices_from(out)] += model.sigma2
    # exact symmetry regardless of accumulation order
    return (out + out.T) / 2.0


def chol_psd(mat: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor with an escalating diagonal jitter policy.

    On factorization failure adds ``1e-10 * mean(diag)`` to the diagonal and
    escalates tenfold up to ``1e-6 * mean(diag)`` before raising
    ``NumericalError`` with condition diagnostics.  A zero matrix factors to
    zero.
    """
    mat = np.asarray(mat, dtype=float)
    if not np.any(mat):
        return np.zeros_like(mat)
    scale = float(np.mean(np.diag(mat)))
    jitter = 0.0
    while True:
        try:
            return np.linalg.cholesky(
                mat if jitter == 0.0 else mat + jitter * np.eye(mat.shape[0])
            )
        except np.linalg.LinAlgError:
            jitter = JITTER_START * scale if jitter == 0.0 else jitter * 10.0
            if jitter > JITTER_MAX * scale or not np.isfinite(jitter) or jitter <= 0:
                eigs = np.linalg.eigvalsh(mat)
                raise NumericalError(
                    "covariance factorization failed after maximum jitter",
                    info={
                        "min_eig": float(eigs[0]),
                        "max_eig": float(eigs[-1]),
                        "mean_diag": scale,
                        "max_jitter": JITTER_MAX * scale,
                    },
                ) from None


def monte_carlo_cov(model: CovModel, points, n_draws: int, seed: int = 0):
    """Brute-force covariance estimate from simulated latent fields.

    Draws each component field from its space-time kernel over ``points``,
    combines with the covariate weights, and averages outer products (the
    fields have known zero mean, so no centering).  Returns
    ``(estimate, standard_errors)`` with per-entry Monte Carlo standard
    errors ``sqrt((V_ii V_kk + V_ik^2) / n_draws)``.

    This is the independent oracle for :func:`cov_matrix`; it shares no code
    path with the closed-form assembly beyond kernel evaluation.
    """
    if n_draws < 1000:
        raise ValueError("n_draws must be at least 1000 for a usable estimate")
    rng = np.random.default_rng(seed)
    coords, times, X = _point_arrays(points)
    D = cdist(coords, coords)
    Lag = np.abs(times[:, None] - times[None, :])
    W = _weights_batch(model.weights, X)
    n = len(points)

    mu = np.zeros((n, n_draws))
    for j, kern in enumerate(model.kernels):
        Kj = eval_spatial(kern.spatial, D) * kern.gamma**Lag
        Lj = chol_psd(Kj)
        mu += W[:, j : j + 1] * (Lj @ rng.standard_normal((n, n_draws)))
    est = (mu @ mu.T) / n_draws
    var_entry = np.outer(np.diag(est), np.diag(est)) + est**2
    se = np.sqrt(var_entry / n_draws)
    return est, se
