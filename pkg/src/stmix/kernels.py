"""Stationary covariance primitives for the space-time mixture model.

Spatial kernels use the range form ``tau2 * exp(-(h / rho) ** kappa)``:
``rho`` is the range in coordinate units (km), ``tau2`` the variance at lag
zero, ``kappa`` the shape exponent in (0, 2] (the exponential family pins
``kappa = 1``).  Space-time kernels are separable, a spatial kernel times a
geometric decay ``gamma ** |h_t|`` in integer time lags.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EXPONENTIAL = "exponential"
POWERED_EXPONENTIAL = "powered_exponential"

_FAMILIES = (EXPONENTIAL, POWERED_EXPONENTIAL)


@dataclass(frozen=True)
class SpatialKernel:
    """Isotropic spatial covariance ``tau2 * exp(-(h / rho) ** kappa)``.

    Immutable after construction; evaluation is pure and thread-safe.
    ``tau2 = 0`` is allowed as a degenerate zero-variance kernel.
    """

    rho: float
    tau2: float = 1.0
    kappa: float = 1.0
    family: str = EXPONENTIAL

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if not self.rho > 0:
            raise ValueError(f"range rho must be positive, got {self.rho}")
        if self.tau2 < 0:
            raise ValueError(f"scale tau2 must be nonnegative, got {self.tau2}")
        if not 0 < self.kappa <= 2:
            raise ValueError(f"kappa must lie in (0, 2], got {self.kappa}")
        if self.family == EXPONENTIAL and self.kappa != 1.0:
            raise ValueError("exponential family requires kappa = 1")

    @property
    def rate(self) -> float:
        """Decay rate in the rate form ``tau2 * exp(-rate * h**kappa)``."""
        return self.rho ** (-self.kappa)


@dataclass(frozen=True)
class SpaceTimeKernel:
    """Separable kernel: ``spatial(h_s) * gamma ** |h_t|``.

    ``gamma`` in (0, 1) is the per-step temporal correlation.  The value at
    (0, 0) equals the spatial kernel's ``tau2``, the marginal variance of the
    latent field the kernel describes.
    """

    spatial: SpatialKernel
    gamma: float

    def __post_init__(self):
        if not 0 < self.gamma < 1:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")

    @property
    def tau2(self) -> float:
        return self.spatial.tau2


def eval_spatial(kernel: SpatialKernel, h):
    """Evaluate a spatial kernel at nonnegative distance(s) ``h``.

    Accepts scalars or arrays; raises ``ValueError`` on any negative lag.
    """
    h = np.asarray(h, dtype=float)
    if np.any(h < 0):
        raise ValueError("spatial lag must be nonnegative")
    out = kernel.tau2 * np.exp(-((h / kernel.rho) ** kernel.kappa))
    return out if out.ndim else float(out)


def eval_spacetime(kernel: SpaceTimeKernel, h_s, h_t):
    """Evaluate a separable space-time kernel at lags ``(h_s, h_t)``.

    ``h_t`` may be any integer lag (sign is ignored); reduces to the spatial
    value at ``h_t = 0``.
    """
    h_t = np.asarray(h_t)
    out = eval_spatial(kernel.spatial, h_s) * kernel.gamma ** np.abs(h_t)
    return out if np.ndim(out) else float(out)


def default_h_grid(kernels, n=200):
    """Log-spaced distance grid spanning [1e-3 * min(rho), 5 * max(rho)].

    Dense near zero where monotonicity violations concentrate for kappa < 1.
    """
    rhos = [k.rho for k in kernels]
    return np.geomspace(1e-3 * min(rhos), 5.0 * max(rhos), n)


def check_monotone_sufficient(kernels, alphas, gradient_bound, h_grid=None):
    """Check a sufficient condition for the mixture covariance to decrease in h.

    Assumes exponential weights ``w_j = exp(x' alpha_j)`` and covariates whose
    spatial gradients are bounded componentwise by ``gradient_bound``.  The
    mixture covariance is decreasing in distance whenever, for every component
    j and every distance h,

        gradient_bound' |alpha_j|  <  kappa_j * rate_j * h ** (kappa_j - 1),

    with ``rate_j = rho_j ** (-kappa_j)``.  Sufficient but not necessary:
    failure here does not prove non-monotonicity.

    Parameters
    ----------
    kernels : sequence of SpatialKernel
    alphas : sequence of 1-D coefficient arrays, one per kernel
    gradient_bound : 1-D array of per-covariate bounds on ``|dx/ds|``
    h_grid : distances to test; defaults to :func:`default_h_grid`

    Returns
    -------
    (ok, violation) : ``(True, None)`` if the condition holds everywhere,
        else ``(False, (j, h))`` with the first violating component index and
        distance (components scanned in order, distances ascending).
    """
    if len(kernels) != len(alphas):
        raise ValueError("need one coefficient vector per kernel")
    if h_grid is None:
        h_grid = default_h_grid(kernels)
    h_grid = np.asarray(h_grid, dtype=float)
    if h_grid.size == 0:
        raise ValueError("h_grid must be nonempty")
    if np.any(h_grid <= 0):
        raise ValueError("h_grid must be strictly positive")
    g = np.asarray(gradient_bound, dtype=float)

    for j, (kern, alpha) in enumerate(zip(kernels, alphas)):
        lhs = float(g @ np.abs(np.asarray(alpha, dtype=float)))
        rhs = kern.kappa * kern.rate * h_grid ** (kern.kappa - 1.0)
        bad = np.nonzero(lhs >= rhs)[0]
        if bad.size:
            return False, (j, float(h_grid[bad[0]]))
    return True, None
