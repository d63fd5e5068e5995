"""Flat key-value configuration files (``section.key = value``).

Lines are ``section.key = value`` with ``#`` comments and blank lines
ignored.  Unknown keys are errors.  Known sections and keys, with defaults:

model
    M = 2                     number of mixture components
    kernel_family = exponential   (or powered_exponential)
    kappa = 1.0               shape exponent, fixed during sampling

prior
    beta_sd = 10.0            SD of the mean-coefficient normals
    alpha_sd = 10.0           SD of the weight-coefficient normals
    precision_shape = 0.1     gamma prior shape for all precisions
    precision_rate = 0.1      gamma prior rate for all precisions
    rho_min = 0.0             lower bound of the uniform range prior (km)
    rho_max = 2000.0          upper bound (km)

sampler
    n_iter = 20000            total iterations
    burn_in = 10000           discarded iterations
    thin = 1                  retain every thin-th draw after burn-in
    seed = 0
    step_rho = 100.0          initial random-walk step for ranges
    step_alpha = 0.5          initial random-walk step for weight coefficients
    adapt = true              Robbins-Monro step adaptation during burn-in

simulate
    kind = benchmark          benchmark | demo
    variant = quadratic       demo covariate shape: quadratic | periodic
    n_sites = 20
    n_times = 50
    missing_rate = 0.0
    beta = 2.0,0.7,-0.4
    alpha2 = 0.0,1.5,0.0      weight coefficients of component 2
    rho = 50,300              component ranges (km)
    gamma = 0.3,0.8           temporal decay per component
    tau2 = 1,1                marginal field variances
    sigma2 = 0.25
    rho0 = 150.0              trend range (km)
    tau0_sq = 0.5             trend variance
    cov_space_range = 200.0   covariate-field spatial range (km)
    cov_time_range = 5.0      covariate-field temporal range (days)
"""

from __future__ import annotations

from .exceptions import ConfigError
from .kernels import EXPONENTIAL, POWERED_EXPONENTIAL
from .sampler import Hyperpriors, SamplerConfig
from .simulate import BenchmarkSpec

_KNOWN = {
    "model.M": int,
    "model.kernel_family": str,
    "model.kappa": float,
    "prior.beta_sd": float,
    "prior.alpha_sd": float,
    "prior.precision_shape": float,
    "prior.precision_rate": float,
    "prior.rho_min": float,
    "prior.rho_max": float,
    "sampler.n_iter": int,
    "sampler.burn_in": int,
    "sampler.thin": int,
    "sampler.seed": int,
    "sampler.step_rho": float,
    "sampler.step_alpha": float,
    "sampler.adapt": bool,
    "simulate.kind": str,
    "simulate.variant": str,
    "simulate.n_sites": int,
    "simulate.n_times": int,
    "simulate.missing_rate": float,
    "simulate.beta": "floats",
    "simulate.alpha2": "floats",
    "simulate.rho": "floats",
    "simulate.gamma": "floats",
    "simulate.tau2": "floats",
    "simulate.sigma2": float,
    "simulate.rho0": float,
    "simulate.tau0_sq": float,
    "simulate.cov_space_range": float,
    "simulate.cov_time_range": float,
}


def _convert(key, text):
    kind = _KNOWN[key]
    try:
        if kind is bool:
            low = text.lower()
            if low in ("true", "1", "yes"):
                return True
            if low in ("false", "0", "no"):
                return False
            raise ValueError(text)
        if kind == "floats":
            return tuple(float(v) for v in text.split(","))
        return kind(text)
    except ValueError:
        raise ConfigError(f"config key {key!r}: cannot parse value {text!r}") from None


def parse_config(path) -> dict:
    """Parse a config file into a flat {section.key: typed value} dict."""
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'section.key = value'")
            key, _, text = line.partition("=")
            key, text = key.strip(), text.strip()
            if key not in _KNOWN:
                raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
            if key in values:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            values[key] = _convert(key, text)
    return values


def hyperpriors_from(values: dict) -> Hyperpriors:
    return Hyperpriors(
        beta_sd=values.get("prior.beta_sd", 10.0),
        alpha_sd=values.get("prior.alpha_sd", 10.0),
        precision_shape=values.get("prior.precision_shape", 0.1),
        precision_rate=values.get("prior.precision_rate", 0.1),
        rho_min=values.get("prior.rho_min", 0.0),
        rho_max=values.get("prior.rho_max", 2000.0),
    )


def sampler_config_from(values: dict, **overrides) -> SamplerConfig:
    family = values.get("model.kernel_family", EXPONENTIAL)
    if family not in (EXPONENTIAL, POWERED_EXPONENTIAL):
        raise ConfigError(f"unknown kernel family {family!r}")
    merged = dict(
        n_iter=values.get("sampler.n_iter", 20000),
        burn_in=values.get("sampler.burn_in", 10000),
        thin=values.get("sampler.thin", 1),
        seed=values.get("sampler.seed", 0),
        step_rho=values.get("sampler.step_rho", 100.0),
        step_alpha=values.get("sampler.step_alpha", 0.5),
        adapt=values.get("sampler.adapt", True),
        kappa=values.get("model.kappa", 1.0),
        kernel_family=family,
    )
    merged.update({k: v for k, v in overrides.items() if v is not None})
    return SamplerConfig(**merged)


def n_components_from(values: dict) -> int:
    return values.get("model.M", 2)


def benchmark_spec_from(values: dict) -> BenchmarkSpec:
    def get(key, default):
        return values.get(f"simulate.{key}", default)

    d = BenchmarkSpec()
    rho = get("rho", d.rho)
    gamma = get("gamma", d.gamma)
    tau2 = get("tau2", d.tau2)
    if not len(rho) == len(gamma) == len(tau2):
        raise ConfigError("simulate.rho, simulate.gamma, simulate.tau2 lengths differ")
    beta = get("beta", d.beta)
    alpha2 = get("alpha2", d.alpha2)
    if len(alpha2) != len(beta):
        raise ConfigError("simulate.alpha2 must have one entry per beta entry")
    return BenchmarkSpec(
        n_sites=get("n_sites", d.n_sites),
        n_times=get("n_times", d.n_times),
        beta=tuple(beta),
        alpha2=tuple(alpha2),
        rho=tuple(rho),
        gamma=tuple(gamma),
        tau2=tuple(tau2),
        sigma2=get("sigma2", d.sigma2),
        rho0=get("rho0", d.rho0),
        tau02=get("tau0_sq", d.tau02),
        missing_rate=get("missing_rate", d.missing_rate),
        cov_space_range=get("cov_space_range", d.cov_space_range),
        cov_time_range=get("cov_time_range", d.cov_time_range),
    )
