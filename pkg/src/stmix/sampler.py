"""Block Gibbs / Metropolis-Hastings sampler for the hierarchical model.

Model (all covariances in projected km and integer daily lags):

    y(s,t)   = x(s,t)' beta + delta(s) + mu(s,t) + eps(s,t),
    mu(s,t)  = sum_j w_j[x(s,t)] theta_j(s,t),
    w_j^2    = softmax_j(x' alpha_j)  with alpha_1 = 0,
    theta_jt = gamma_j * theta_j,t-1 + e_jt,    e_jt ~ N(0, tau2_j * C_j),
    delta    ~ N(0, tau02 * C_0),               eps ~ N(0, sigma2),

with C_j = exp(-D / rho_j) the site correlation matrix.  The first time
point of each block takes the innovation distribution N(0, tau2_j * C_j),
which keeps every full conditional exactly conjugate: gamma_j (truncated
Gaussian), tau2_j and sigma2 (gamma precisions), beta, delta, theta blocks
(Gaussian).  rho_j, rho0 and the alpha coefficients use Gaussian random-walk
Metropolis steps with Robbins-Monro step adaptation during burn-in only,
targeting 0.4 acceptance.

theta time-blocks are updated one time point at a time from the exact
conditional given the temporal neighbors, so only N x N factorizations are
ever needed.  Component labels can switch during sampling; convergence is
therefore monitored through label-symmetric functionals (covariance probes
at fixed lags and the latent effect at fixed cells) rather than individual
component parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.special import ndtr, ndtri
from scipy.spatial.distance import cdist
from scipy.stats import truncnorm

from .covariance import CovModel, chol_psd
from .data import Dataset
from .draws import PosteriorDraws
from .exceptions import NumericalError
from .kernels import EXPONENTIAL, SpaceTimeKernel, SpatialKernel
from .weights import MultinomialLogisticWeights, sqrt_softmax


@dataclass(frozen=True)
class Hyperpriors:
    """Prior constants.  Defaults: N(0, 10^2) coefficients, Gamma(0.1, 0.1)
    precisions, Uniform(0, 1) temporal decay, Uniform(0, 2000) km ranges."""

    beta_sd: float = 10.0
    alpha_sd: float = 10.0
    precision_shape: float = 0.1
    precision_rate: float = 0.1
    rho_min: float = 0.0
    rho_max: float = 2000.0

    def __post_init__(self):
        for name in ("beta_sd", "alpha_sd", "precision_shape", "precision_rate"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not self.rho_max > self.rho_min >= 0:
            raise ValueError("need rho_max > rho_min >= 0")


@dataclass(frozen=True)
class SamplerConfig:
    """Chain length, step sizes, adaptation and monitoring settings."""

    n_iter: int = 20000
    burn_in: int = 10000
    thin: int = 1
    seed: int = 0
    step_rho: float = 100.0
    step_alpha: float = 0.5
    adapt: bool = True
    adapt_target: float = 0.4
    kappa: float = 1.0
    kernel_family: str = EXPONENTIAL
    monitor_lags: tuple = ((0.0, 0), (50.0, 0), (100.0, 0), (0.0, 1), (0.0, 2), (100.0, 2))
    n_monitor_cells: int = 5

    def __post_init__(self):
        if not 0 <= self.burn_in < self.n_iter:
            raise ValueError("need 0 <= burn_in < n_iter")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if self.step_rho <= 0 or self.step_alpha <= 0:
            raise ValueError("step sizes must be positive")


@dataclass(eq=False)
class ParamState:
    """One full draw of every model parameter and latent field."""

    beta: np.ndarray        # (p,)
    sigma2: float
    alpha: np.ndarray       # (M, p); row 0 fixed at zero in identified states
    rho: np.ndarray         # (M,) spatial ranges, km
    tau2: np.ndarray        # (M,) innovation variances
    gamma: np.ndarray       # (M,) temporal decay in (0, 1)
    rho0: float             # trend range
    tau02: float            # trend variance
    delta: np.ndarray       # (N,)
    theta: np.ndarray       # (M, N, T)

    def copy(self) -> "ParamState":
        return ParamState(
            beta=self.beta.copy(),
            sigma2=float(self.sigma2),
            alpha=self.alpha.copy(),
            rho=self.rho.copy(),
            tau2=self.tau2.copy(),
            gamma=self.gamma.copy(),
            rho0=float(self.rho0),
            tau02=float(self.tau02),
            delta=self.delta.copy(),
            theta=self.theta.copy(),
        )

    @property
    def n_components(self) -> int:
        return self.alpha.shape[0]

    def marginal_tau2(self) -> np.ndarray:
        """Stationary field variances tau2 / (1 - gamma^2) per component."""
        return self.tau2 / (1.0 - self.gamma**2)


def permute_state(state: ParamState, perm, reidentify: bool = False) -> ParamState:
    """Relabel mixture components by ``perm``.

    With ``reidentify`` the alpha rows are shifted so row 0 is zero again
    (softmax weights are unchanged by the shift); otherwise rows are permuted
    as-is.
    """
    perm = list(perm)
    alpha = state.alpha[perm].copy()
    if reidentify:
        alpha = alpha - alpha[0:1]
    return replace(
        state,
        alpha=alpha,
        rho=state.rho[perm].copy(),
        tau2=state.tau2[perm].copy(),
        gamma=state.gamma[perm].copy(),
        theta=state.theta[perm].copy(),
        beta=state.beta.copy(),
        delta=state.delta.copy(),
    )


def state_to_model(
    state: ParamState, kappa: float = 1.0, family: str = EXPONENTIAL
) -> CovModel:
    """Covariance model implied by a draw (kernels carry marginal variances)."""
    marg = state.marginal_tau2()
    kernels = tuple(
        SpaceTimeKernel(
            SpatialKernel(rho=float(state.rho[j]), tau2=float(marg[j]),
                          kappa=kappa, family=family),
            gamma=float(state.gamma[j]),
        )
        for j in range(state.n_components)
    )
    trend = SpatialKernel(rho=float(state.rho0), tau2=float(state.tau02),
                          kappa=kappa, family=family)
    return CovModel(
        kernels=kernels,
        weights=MultinomialLogisticWeights(state.alpha),
        trend_kernel=trend,
        sigma2=float(state.sigma2),
    )


@dataclass(eq=False)
class MonitorTrace:
    """Label-symmetric convergence probes recorded every iteration."""

    lags: tuple                      # ((h_s, h_t), ...)
    cells: np.ndarray                # (n_cells, 2) of (site, time) indices
    cov_trace: np.ndarray            # (n_iter, n_lags)
    mu_trace: np.ndarray             # (n_iter, n_cells)


class _AdaptiveStep:
    """Robbins-Monro adaptation of a random-walk step on the log scale."""

    def __init__(self, step, target):
        self.log_step = float(np.log(step))
        self.target = target
        self.count = 0
        self.trials = 0
        self.accepts = 0
        self.post_trials = 0
        self.post_accepts = 0

    @property
    def step(self):
        return float(np.exp(self.log_step))

    def record(self, p_accept, accepted, adapting):
        if adapting:
            self.count += 1
            self.log_step += (p_accept - self.target) / self.count**0.6
            self.trials += 1
            self.accepts += int(accepted)
        else:
            self.post_trials += 1
            self.post_accepts += int(accepted)

    def post_rate(self):
        if self.post_trials == 0:
            return float("nan")
        return self.post_accepts / self.post_trials


def _gamma_logpdf(x, shape, rate):
    from scipy.special import gammaln

    return shape * np.log(rate) - gammaln(shape) + (shape - 1) * np.log(x) - rate * x


class GibbsSampler:
    """Systematic-scan sampler bound to one dataset.

    Scan order per sweep: theta blocks by time within component, delta and
    its kernel parameters, beta, sigma2, then per component tau2, gamma,
    rho, and the alpha coefficients (components 2..M).  A chain is strictly
    sequential; run several instances with different seeds for multiple
    chains.
    """

    def __init__(
        self,
        data: Dataset,
        n_components: int,
        hyper: Hyperpriors | None = None,
        config: SamplerConfig | None = None,
    ):
        self.data = data
        self.M = int(n_components)
        if self.M < 1:
            raise ValueError("need at least one mixture component")
        self.hyper = hyper or Hyperpriors()
        self.config = config or SamplerConfig()
        self.rng = np.random.default_rng(self.config.seed)

        self.N = data.n_sites
        self.T = data.n_times
        self.p = data.n_covariates
        self.D = cdist(data.coords, data.coords)
        self.mask = data.mask.copy()
        self.y = np.where(self.mask, np.nan_to_num(data.y), 0.0)
        self.X = data.X

        # temporal adjacency: has_pred[t] marks a transition from t-1 to t
        starts = np.zeros(self.T, dtype=bool)
        starts[0] = True
        starts[1:] = data.time_blocks[1:] != data.time_blocks[:-1]
        self.has_pred = ~starts
        self.succ_exists = np.zeros(self.T, dtype=bool)
        self.succ_exists[:-1] = self.has_pred[1:]

        self.n_obs = int(self.mask.sum())
        self.obs_sites, self.obs_times = np.nonzero(self.mask)
        self.Xo = self.X[self.obs_sites, self.obs_times, :]
        self.XtX = self.Xo.T @ self.Xo
        self.n_obs_per_site = self.mask.sum(axis=1).astype(float)
        if self.n_obs:
            self._check_design_rank()

        self._monitor_setup()
        self.state = self.initial_state()
        self._refresh_all_caches()

        self.steps = {}
        for j in range(self.M):
            self.steps[("rho", j)] = _AdaptiveStep(
                self.config.step_rho, self.config.adapt_target
            )
        self.steps[("rho0",)] = _AdaptiveStep(
            self.config.step_rho, self.config.adapt_target
        )
        for j in range(1, self.M):
            for k in range(self.p):
                self.steps[("alpha", j, k)] = _AdaptiveStep(
                    self.config.step_alpha, self.config.adapt_target
                )
        self._adapting = self.config.adapt

    # ------------------------------------------------------------------
    # setup helpers

    def _check_design_rank(self):
        s = np.linalg.svd(self.Xo, compute_uv=False)
        tol = s[0] * max(self.Xo.shape) * np.finfo(float).eps
        rank = int((s > tol).sum())
        if rank < self.p:
            # identify dependent columns through pivoted QR
            from scipy.linalg import qr

            _, _, piv = qr(self.Xo, pivoting=True, mode="economic")
            bad = sorted(piv[rank:])
            names = [self.data.covariate_names[i] for i in bad]
            raise NumericalError(
                f"design matrix is rank deficient over observed cells; "
                f"collinear columns: {names}",
                info={"rank": rank, "columns": names},
            )

    def _monitor_setup(self):
        flat = np.flatnonzero(self.mask.ravel())
        if flat.size == 0:
            flat = np.arange(self.N * self.T)
        take = np.unique(
            flat[np.linspace(0, flat.size - 1, self.config.n_monitor_cells).astype(int)]
        )
        self.monitor_cells = np.column_stack(np.unravel_index(take, (self.N, self.T)))
        self.monitor_lags = tuple(self.config.monitor_lags)

    def initial_state(self) -> ParamState:
        """Deterministic starting point: OLS trend, zeroed fields, mid-range
        covariance parameters, residual-variance splits for the scales."""
        if self.n_obs:
            beta, *_ = np.linalg.lstsq(self.Xo, self.y[self.mask], rcond=None)
            resid = self.y[self.mask] - self.Xo @ beta
            v = float(np.var(resid)) if resid.size > 1 else 1.0
        else:
            beta = np.zeros(self.p)
            v = 1.0
        v = max(v, 1e-6)
        lo, hi = self.hyper.rho_min, self.hyper.rho_max
        rho_init = min(max(500.0, lo + 0.05 * (hi - lo)), lo + 0.5 * (hi - lo))
        gamma0 = 0.5
        return ParamState(
            beta=beta,
            sigma2=v / 2.0,
            alpha=np.zeros((self.M, self.p)),
            rho=np.full(self.M, rho_init),
            tau2=np.full(self.M, (1.0 - gamma0**2) * (v / 4.0) / self.M),
            gamma=np.full(self.M, gamma0),
            rho0=rho_init,
            tau02=v / 4.0,
            delta=np.zeros(self.N),
            theta=np.zeros((self.M, self.N, self.T)),
        )

    # ------------------------------------------------------------------
    # cached quantities

    def _corr_chol(self, rho):
        return chol_psd(np.exp(-self.D / rho))

    def _refresh_component_chol(self, j):
        L = self._corr_chol(self.state.rho[j])
        self._L[j] = L
        self._Cinv[j] = cho_solve((L, True), np.eye(self.N))

    def _refresh_trend_chol(self):
        self._L0 = self._corr_chol(self.state.rho0)
        self._C0inv = cho_solve((self._L0, True), np.eye(self.N))

    def _refresh_weights(self):
        self._logits = np.einsum("ntp,mp->ntm", self.X, self.state.alpha)
        self._W = np.moveaxis(sqrt_softmax(self._logits), 2, 0)  # (M, N, T)

    def _refresh_mu(self):
        self._mu = np.einsum("mnt,mnt->nt", self._W, self.state.theta)

    def _refresh_all_caches(self):
        self._L = [None] * self.M
        self._Cinv = [None] * self.M
        for j in range(self.M):
            self._refresh_component_chol(j)
        self._refresh_trend_chol()
        self._refresh_weights()
        self._refresh_mu()

    def _xbeta(self):
        return self.X @ self.state.beta

    # ------------------------------------------------------------------
    # conditional updates

    def theta_conditional(self, j, t):
        """Precision matrix and linear term of theta_j(., t) | everything."""
        st = self.state
        gam, tau2 = st.gamma[j], st.tau2[j]
        a = 1.0 + (gam**2 if self.succ_exists[t] else 0.0)
        Q = (a / tau2) * self._Cinv[j]
        neighbor = np.zeros(self.N)
        if self.has_pred[t]:
            neighbor += st.theta[j, :, t - 1]
        if self.succ_exists[t]:
            neighbor += st.theta[j, :, t + 1]
        b = (gam / tau2) * (self._Cinv[j] @ neighbor)

        obs_t = self.mask[:, t]
        if obs_t.any():
            w = self._W[j, :, t]
            partial = self._mu[:, t] - w * st.theta[j, :, t]
            r = self.y[:, t] - self.X[:, t, :] @ st.beta - st.delta - partial
            d = np.where(obs_t, w**2, 0.0) / st.sigma2
            Q = Q + np.diag(d)
            b = b + np.where(obs_t, w * r, 0.0) / st.sigma2
        return Q, b

    def update_theta_block(self, j, t):
        Q, b = self.theta_conditional(j, t)
        try:
            L = np.linalg.cholesky(Q)
        except np.linalg.LinAlgError:
            raise NumericalError(
                f"theta conditional precision not PD (component {j}, time {t})"
            ) from None
        mean = cho_solve((L, True), b)
        draw = mean + solve_triangular(
            L.T, self.rng.standard_normal(self.N), lower=False
        )
        old = self.state.theta[j, :, t]
        self._mu[:, t] += self._W[j, :, t] * (draw - old)
        self.state.theta[j, :, t] = draw

    def delta_conditional(self):
        st = self.state
        Q = self._C0inv / st.tau02 + np.diag(self.n_obs_per_site / st.sigma2)
        r = np.where(self.mask, self.y - self._xbeta() - self._mu, 0.0)
        b = r.sum(axis=1) / st.sigma2
        return Q, b

    def update_delta(self):
        Q, b = self.delta_conditional()
        L = np.linalg.cholesky(Q)
        mean = cho_solve((L, True), b)
        self.state.delta = mean + solve_triangular(
            L.T, self.rng.standard_normal(self.N), lower=False
        )

    def update_tau02(self):
        st = self.state
        q = float(st.delta @ self._C0inv @ st.delta)
        shape = self.hyper.precision_shape + 0.5 * self.N
        rate = self.hyper.precision_rate + 0.5 * q
        self.state.tau02 = 1.0 / self.rng.gamma(shape, 1.0 / rate)

    def update_rho0(self):
        st = self.state
        block = self.steps[("rho0",)]
        prop = st.rho0 + block.step * self.rng.standard_normal()
        if not (self.hyper.rho_min < prop < self.hyper.rho_max):
            block.record(0.0, False, self._adapting)
            return False

        def term(L0):
            v = solve_triangular(L0, st.delta, lower=True)
            return -np.log(np.diag(L0)).sum() - 0.5 * (v @ v) / st.tau02

        L_prop = self._corr_chol(prop)
        log_ratio = term(L_prop) - term(self._L0)
        p_acc = min(1.0, float(np.exp(min(log_ratio, 0.0))))
        accepted = np.log(self.rng.uniform()) < log_ratio
        if accepted:
            self.state.rho0 = float(prop)
            self._L0 = L_prop
            self._C0inv = cho_solve((L_prop, True), np.eye(self.N))
        block.record(p_acc, accepted, self._adapting)
        return bool(accepted)

    def update_beta(self):
        st = self.state
        v = self.hyper.beta_sd**2
        Q = self.XtX / st.sigma2 + np.eye(self.p) / v
        if self.n_obs:
            r = (self.y - st.delta[:, None] - self._mu)[self.mask]
            b = self.Xo.T @ r / st.sigma2
        else:
            b = np.zeros(self.p)
        L = np.linalg.cholesky(Q)
        mean = cho_solve((L, True), b)
        self.state.beta = mean + solve_triangular(
            L.T, self.rng.standard_normal(self.p), lower=False
        )

    def update_sigma2(self):
        st = self.state
        if self.n_obs:
            r = (self.y - self._xbeta() - st.delta[:, None] - self._mu)[self.mask]
            ss = float(r @ r)
        else:
            ss = 0.0
        shape = self.hyper.precision_shape + 0.5 * self.n_obs
        rate = self.hyper.precision_rate + 0.5 * ss
        self.state.sigma2 = 1.0 / self.rng.gamma(shape, 1.0 / rate)

    def _innovations(self, j):
        """(N, T) matrix whose columns are the AR(1) innovations."""
        th = self.state.theta[j]
        E = th.copy()
        E[:, self.has_pred] -= self.state.gamma[j] * th[:, np.flatnonzero(self.has_pred) - 1]
        return E

    def update_tau2(self, j):
        E = self._innovations(j)
        V = solve_triangular(self._L[j], E, lower=True)
        ss = float((V * V).sum())
        shape = self.hyper.precision_shape + 0.5 * self.N * self.T
        rate = self.hyper.precision_rate + 0.5 * ss
        self.state.tau2[j] = 1.0 / self.rng.gamma(shape, 1.0 / rate)

    def update_gamma(self, j):
        st = self.state
        trans = np.flatnonzero(self.has_pred)
        if trans.size == 0:
            st.gamma[j] = self.rng.uniform()
            return
        prev = st.theta[j][:, trans - 1]
        cur = st.theta[j][:, trans]
        Vp = solve_triangular(self._L[j], prev, lower=True)
        Vc = solve_triangular(self._L[j], cur, lower=True)
        A = float((Vp * Vp).sum()) / st.tau2[j]
        B = float((Vp * Vc).sum()) / st.tau2[j]
        if A <= 0.0:
            st.gamma[j] = self.rng.uniform()
            return
        mean, sd = B / A, 1.0 / np.sqrt(A)
        st.gamma[j] = self._truncated_01(mean, sd)

    def _truncated_01(self, mean, sd):
        a, b = (0.0 - mean) / sd, (1.0 - mean) / sd
        pa, pb = ndtr(a), ndtr(b)
        if pb - pa > 1e-13:
            u = self.rng.uniform(pa, pb)
            z = ndtri(u)
        else:
            z = truncnorm.rvs(a, b, random_state=self.rng)
        return float(np.clip(mean + sd * z, 1e-12, 1.0 - 1e-12))

    def _theta_loglik(self, j, L):
        """Log density of component j's field given a correlation factor."""
        E = self._innovations(j)
        V = solve_triangular(L, E, lower=True)
        ss = float((V * V).sum())
        logdet = float(np.log(np.diag(L)).sum())
        return -self.T * logdet - 0.5 * ss / self.state.tau2[j]

    def update_rho(self, j):
        st = self.state
        block = self.steps[("rho", j)]
        prop = st.rho[j] + block.step * self.rng.standard_normal()
        if not (self.hyper.rho_min < prop < self.hyper.rho_max):
            block.record(0.0, False, self._adapting)
            return False
        L_prop = self._corr_chol(prop)
        log_ratio = self._theta_loglik(j, L_prop) - self._theta_loglik(j, self._L[j])
        p_acc = min(1.0, float(np.exp(min(log_ratio, 0.0))))
        accepted = np.log(self.rng.uniform()) < log_ratio
        if accepted:
            st.rho[j] = float(prop)
            self._L[j] = L_prop
            self._Cinv[j] = cho_solve((L_prop, True), np.eye(self.N))
        block.record(p_acc, accepted, self._adapting)
        return bool(accepted)

    def _obs_loglik(self, mu):
        r = (self.y - self._xbeta() - self.state.delta[:, None] - mu)[self.mask]
        return -0.5 * float(r @ r) / self.state.sigma2

    def update_alpha(self, j, k):
        st = self.state
        block = self.steps[("alpha", j, k)]
        cur = st.alpha[j, k]
        prop = cur + block.step * self.rng.standard_normal()

        logits_prop = self._logits.copy()
        logits_prop[:, :, j] += (prop - cur) * self.X[:, :, k]
        W_prop = np.moveaxis(sqrt_softmax(logits_prop), 2, 0)
        mu_prop = np.einsum("mnt,mnt->nt", W_prop, st.theta)

        v = self.hyper.alpha_sd**2
        log_ratio = (
            self._obs_loglik(mu_prop)
            - self._obs_loglik(self._mu)
            - 0.5 * (prop**2 - cur**2) / v
        )
        if not np.isfinite(log_ratio):
            raise NumericalError(
                f"non-finite acceptance ratio in alpha update ({j}, {k})"
            )
        p_acc = min(1.0, float(np.exp(min(log_ratio, 0.0))))
        accepted = np.log(self.rng.uniform()) < log_ratio
        if accepted:
            st.alpha[j, k] = float(prop)
            self._logits = logits_prop
            self._W = W_prop
            self._mu = mu_prop
        block.record(p_acc, accepted, self._adapting)
        return bool(accepted)

    # ------------------------------------------------------------------
    # scan, monitoring, and the public entry point

    def sweep(self):
        """One full systematic scan over every parameter block."""
        for j in range(self.M):
            for t in range(self.T):
                self.update_theta_block(j, t)
        self.update_delta()
        self.update_tau02()
        self.update_rho0()
        self.update_beta()
        self.update_sigma2()
        for j in range(self.M):
            self.update_tau2(j)
        for j in range(self.M):
            self.update_gamma(j)
        for j in range(self.M):
            self.update_rho(j)
        for j in range(1, self.M):
            for k in range(self.p):
                self.update_alpha(j, k)

    def monitor_values(self):
        """Covariance probes at fixed lags (baseline covariates) and the
        latent effect at fixed cells.  Both are label-symmetric."""
        st = self.state
        w2 = sqrt_softmax(st.alpha[:, 0]) ** 2
        marg = st.marginal_tau2()
        cov_vals = []
        for h_s, h_t in self.monitor_lags:
            k_j = marg * np.exp(-((h_s / st.rho) ** self.config.kappa))
            cov_vals.append(float(np.sum(w2 * k_j * st.gamma ** abs(h_t))))
        mu_vals = [self._mu[i, t] for i, t in self.monitor_cells]
        return np.array(cov_vals), np.array(mu_vals)

    def regenerate_data(self):
        """Redraw observed responses given the current state (used by
        joint-distribution correctness tests)."""
        st = self.state
        mean = self._xbeta() + st.delta[:, None] + self._mu
        noise = np.sqrt(st.sigma2) * self.rng.standard_normal(mean.shape)
        self.y = np.where(self.mask, mean + noise, 0.0)

    def draw_state_from_prior(self):
        """Independent draw of every parameter and latent field from the
        prior, matching the model the conditionals target exactly."""
        h = self.hyper
        st = self.state
        st.beta = h.beta_sd * self.rng.standard_normal(self.p)
        st.sigma2 = 1.0 / self.rng.gamma(h.precision_shape, 1.0 / h.precision_rate)
        st.alpha = np.zeros((self.M, self.p))
        for j in range(1, self.M):
            st.alpha[j] = h.alpha_sd * self.rng.standard_normal(self.p)
        st.rho = self.rng.uniform(h.rho_min, h.rho_max, self.M)
        st.rho = np.maximum(st.rho, 1e-6)
        st.tau2 = 1.0 / self.rng.gamma(
            h.precision_shape, 1.0 / h.precision_rate, self.M
        )
        st.gamma = self.rng.uniform(0.0, 1.0, self.M)
        st.rho0 = float(max(self.rng.uniform(h.rho_min, h.rho_max), 1e-6))
        st.tau02 = 1.0 / self.rng.gamma(h.precision_shape, 1.0 / h.precision_rate)
        self._refresh_trend_chol()
        for j in range(self.M):
            self._refresh_component_chol(j)
        st.delta = np.sqrt(st.tau02) * (
            self._L0 @ self.rng.standard_normal(self.N)
        )
        for j in range(self.M):
            s = np.sqrt(st.tau2[j])
            for t in range(self.T):
                e = s * (self._L[j] @ self.rng.standard_normal(self.N))
                if self.has_pred[t]:
                    st.theta[j, :, t] = st.gamma[j] * st.theta[j, :, t - 1] + e
                else:
                    st.theta[j, :, t] = e
        self._refresh_weights()
        self._refresh_mu()

    def log_joint(self, state: ParamState | None = None) -> float:
        """Log of the full joint density at ``state`` (default: current).

        Precisions enter through their gamma densities; the alpha prior sums
        over all M rows (the identified zero row contributes a constant),
        which makes the value exactly invariant under component relabeling.
        """
        st = state or self.state
        h = self.hyper
        M, N, T = st.n_components, self.N, self.T
        lp = 0.0
        # coefficient priors
        lp += float(
            -0.5 * np.sum(st.beta**2) / h.beta_sd**2
            - st.beta.size * np.log(h.beta_sd)
        )
        lp += float(
            -0.5 * np.sum(st.alpha**2) / h.alpha_sd**2
            - st.alpha.size * np.log(h.alpha_sd)
        )
        # precision priors
        for prec in [1.0 / st.sigma2, 1.0 / st.tau02, *(1.0 / st.tau2)]:
            lp += float(_gamma_logpdf(prec, h.precision_shape, h.precision_rate))
        # uniform supports
        if np.any(st.gamma <= 0) or np.any(st.gamma >= 1):
            return -np.inf
        for r in [*st.rho, st.rho0]:
            if not (h.rho_min < r < h.rho_max):
                return -np.inf
        lp += -(M + 1) * np.log(h.rho_max - h.rho_min)
        # latent fields
        L0 = self._corr_chol(st.rho0)
        v0 = solve_triangular(L0, st.delta, lower=True)
        lp += float(
            -np.log(np.diag(L0)).sum()
            - 0.5 * N * np.log(st.tau02)
            - 0.5 * (v0 @ v0) / st.tau02
        )
        for j in range(M):
            Lj = self._corr_chol(st.rho[j])
            E = st.theta[j].copy()
            E[:, self.has_pred] -= (
                st.gamma[j] * st.theta[j][:, np.flatnonzero(self.has_pred) - 1]
            )
            V = solve_triangular(Lj, E, lower=True)
            lp += float(
                -T * np.log(np.diag(Lj)).sum()
                - 0.5 * N * T * np.log(st.tau2[j])
                - 0.5 * (V * V).sum() / st.tau2[j]
            )
        # observations
        W = np.moveaxis(
            sqrt_softmax(np.einsum("ntp,mp->ntm", self.X, st.alpha)), 2, 0
        )
        mu = np.einsum("mnt,mnt->nt", W, st.theta)
        r = (self.y - self.X @ st.beta - st.delta[:, None] - mu)[self.mask]
        lp += float(
            -0.5 * self.n_obs * np.log(st.sigma2) - 0.5 * (r @ r) / st.sigma2
        )
        return lp

    def acceptance_rates(self):
        """Post-burn-in acceptance rate per Metropolis block."""
        return {
            "/".join(str(part) for part in key): blk.post_rate()
            for key, blk in self.steps.items()
        }

    def run(self):
        """Execute the configured chain; returns (PosteriorDraws, MonitorTrace)."""
        cfg = self.config
        retained = list(range(cfg.burn_in, cfg.n_iter, cfg.thin))
        R = len(retained)
        retain_at = {it: r for r, it in enumerate(retained)}

        out = {
            "beta": np.empty((R, self.p)),
            "sigma2": np.empty(R),
            "alpha": np.empty((R, self.M, self.p)),
            "rho": np.empty((R, self.M)),
            "tau2": np.empty((R, self.M)),
            "gamma": np.empty((R, self.M)),
            "rho0": np.empty(R),
            "tau02": np.empty(R),
            "delta": np.empty((R, self.N)),
            "theta": np.empty((R, self.M, self.N, self.T)),
        }
        cov_trace = np.empty((cfg.n_iter, len(self.monitor_lags)))
        mu_trace = np.empty((cfg.n_iter, len(self.monitor_cells)))

        for it in range(cfg.n_iter):
            self._adapting = cfg.adapt and it < cfg.burn_in
            try:
                self.sweep()
            except NumericalError as err:
                raise NumericalError(
                    f"iteration {it}: {err}", info=getattr(err, "info", None)
                ) from err
            cov_trace[it], mu_trace[it] = self.monitor_values()
            r = retain_at.get(it)
            if r is not None:
                st = self.state
                out["beta"][r] = st.beta
                out["sigma2"][r] = st.sigma2
                out["alpha"][r] = st.alpha
                out["rho"][r] = st.rho
                out["tau2"][r] = st.tau2
                out["gamma"][r] = st.gamma
                out["rho0"][r] = st.rho0
                out["tau02"][r] = st.tau02
                out["delta"][r] = st.delta
                out["theta"][r] = st.theta

        trace = MonitorTrace(
            lags=self.monitor_lags,
            cells=self.monitor_cells,
            cov_trace=cov_trace,
            mu_trace=mu_trace,
        )
        meta = {
            "n_iter": cfg.n_iter,
            "burn_in": cfg.burn_in,
            "thin": cfg.thin,
            "seed": cfg.seed,
            "n_components": self.M,
            "n_sites": self.N,
            "n_times": self.T,
            "n_covariates": self.p,
            "kappa": cfg.kappa,
            "kernel_family": cfg.kernel_family,
            "time_blocks": [int(b) for b in self.data.time_blocks],
            "acceptance": self.acceptance_rates(),
            "hyperpriors": {
                "beta_sd": self.hyper.beta_sd,
                "alpha_sd": self.hyper.alpha_sd,
                "precision_shape": self.hyper.precision_shape,
                "precision_rate": self.hyper.precision_rate,
                "rho_min": self.hyper.rho_min,
                "rho_max": self.hyper.rho_max,
            },
        }
        return PosteriorDraws(arrays=out, meta=meta), trace


def run_chain(
    data: Dataset,
    n_components: int,
    hyper: Hyperpriors | None = None,
    config: SamplerConfig | None = None,
):
    """Run one MCMC chain on ``data`` with ``n_components`` mixture terms.

    Deterministic given the config seed.  Returns (draws, monitor trace).
    """
    sampler = GibbsSampler(data, n_components, hyper, config)
    return sampler.run()
