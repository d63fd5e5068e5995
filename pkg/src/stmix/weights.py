"""Covariate-to-weight maps for the process mixture.

Three schemes:

* ``MultinomialLogisticWeights`` -- the identified scheme used by the sampler:
  squared weights are a softmax of linear scores, so sum(w_j^2) = 1 and every
  weight is strictly positive.
* ``SimpleLogitWeights`` -- two components with w_2 = logistic(x'a) and
  w_1 = 1 - w_2 (weights sum to one, not sum-of-squares).  Used for the 1-D
  demonstration curves only; not supported by the sampler.
* ``PartitionWeights`` -- piecewise-constant weights on axis-aligned cells of
  covariate space; entries may be negative.

All schemes are immutable and safe for concurrent evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit


def _freeze(arr):
    out = np.array(arr, dtype=float)
    out.flags.writeable = False
    return out


def sqrt_softmax(scores):
    """Square roots of a numerically safe softmax along the last axis."""
    scores = np.asarray(scores, dtype=float)
    shifted = scores - scores.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return np.sqrt(e / e.sum(axis=-1, keepdims=True))


@dataclass(frozen=True, eq=False)
class MultinomialLogisticWeights:
    """Weights with w_j(x)^2 = softmax_j(x' alpha_j).

    ``alpha`` has shape (M, p).  In the identified model the first row is
    fixed at zero; construction does not enforce this (softmax shift
    invariance makes unidentified parametrizations evaluate identically),
    the sampler does.
    """

    alpha: np.ndarray

    def __post_init__(self):
        a = _freeze(np.atleast_2d(self.alpha))
        if a.ndim != 2:
            raise ValueError("alpha must be an (M, p) matrix")
        object.__setattr__(self, "alpha", a)

    @property
    def n_components(self) -> int:
        return self.alpha.shape[0]

    @property
    def n_covariates(self) -> int:
        return self.alpha.shape[1]

    @property
    def is_identified(self) -> bool:
        return bool(np.all(self.alpha[0] == 0.0))

    def weights(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n_covariates:
            raise ValueError(
                f"covariate vector has length {x.shape[-1]}, "
                f"expected {self.n_covariates}"
            )
        return sqrt_softmax(x @ self.alpha.T)

    def weight_gradient(self, x):
        """Gradient matrix d w_j / d x_k, shape (M, p).

        With p_j = softmax_j and w_j = sqrt(p_j):
        d w_j / d x_k = (w_j / 2) * (alpha_jk - sum_l p_l alpha_lk).
        """
        x = np.asarray(x, dtype=float)
        w = self.weights(x)
        p = w**2
        abar = p @ self.alpha  # (p,)
        return 0.5 * w[:, None] * (self.alpha - abar[None, :])


@dataclass(frozen=True, eq=False)
class SimpleLogitWeights:
    """Two-component weights (1 - s, s) with s = logistic(x' alpha)."""

    alpha: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "alpha", _freeze(np.atleast_1d(self.alpha)))

    @property
    def n_components(self) -> int:
        return 2

    @property
    def n_covariates(self) -> int:
        return self.alpha.shape[0]

    def weights(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n_covariates:
            raise ValueError("covariate dimension mismatch")
        s = expit(x @ self.alpha)
        return np.stack([1.0 - s, s], axis=-1)

    def weight_gradient(self, x):
        x = np.asarray(x, dtype=float)
        s = float(expit(x @ self.alpha))
        g2 = s * (1.0 - s) * self.alpha
        return np.stack([-g2, g2])


@dataclass(frozen=True, eq=False)
class PartitionWeights:
    """Piecewise-constant weights over axis-aligned covariate cells.

    ``edges`` is one strictly increasing breakpoint array per covariate; cell
    i along a covariate is the half-open interval (edges[i], edges[i+1]].
    ``a`` has shape (M, n_cells) with cells enumerated in C order over the
    per-covariate cell indices; entries may be negative.
    """

    edges: tuple
    a: np.ndarray

    def __post_init__(self):
        edges = tuple(_freeze(e) for e in self.edges)
        for e in edges:
            if e.ndim != 1 or e.size < 2 or np.any(np.diff(e) <= 0):
                raise ValueError("each edge array must be increasing, length >= 2")
        a = _freeze(np.atleast_2d(self.a))
        n_cells = int(np.prod([e.size - 1 for e in edges]))
        if a.shape[1] != n_cells:
            raise ValueError(f"a has {a.shape[1]} columns, expected {n_cells} cells")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "a", a)

    @property
    def n_components(self) -> int:
        return self.a.shape[0]

    @property
    def n_covariates(self) -> int:
        return len(self.edges)

    def cell_index(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_covariates,):
            raise ValueError("covariate dimension mismatch")
        idx = 0
        for xi, e in zip(x, self.edges):
            if not (e[0] < xi <= e[-1]):
                raise ValueError(f"covariate value {xi} outside all partition cells")
            k = int(np.searchsorted(e, xi, side="left")) - 1
            idx = idx * (e.size - 1) + k
        return idx

    def weights(self, x):
        return self.a[:, self.cell_index(x)].copy()

    def weight_gradient(self, x):
        raise NotImplementedError(
            "partition weights are piecewise constant; no smooth gradient"
        )


WeightScheme = (MultinomialLogisticWeights, SimpleLogitWeights, PartitionWeights)


def eval_weights(scheme, x):
    """Weight vector of length M for covariate vector ``x``."""
    return scheme.weights(x)


def weight_gradient(scheme, x):
    """(M, p) matrix of weight partial derivatives at ``x``.

    Smooth schemes only; partition weights raise ``NotImplementedError``.
    """
    return scheme.weight_gradient(x)
