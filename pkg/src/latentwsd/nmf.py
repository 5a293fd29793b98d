"""Single-matrix NMF, X ~= WH, by multiplicative updates.

Two objectives are supported: generalized Kullback-Leibler divergence (the
default) and squared Frobenius distance. Both use the Lee & Seung rules with
an epsilon floor on every denominator:

KL::

    W <- W * ((X / WH) H^T) / (1 H^T)
    H <- H * (W^T (X / WH)) / (W^T 1)

Frobenius::

    W <- W * (X H^T) / (W H H^T)
    H <- H * (W^T X) / (W^T W H)

H is always updated with the already-updated W. X stays sparse throughout;
``X / WH`` is only evaluated on the nonzeros of X.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, ShapeError
from .matrix import (
    EPSILON,
    SparseMatrix,
    check_dense,
    frobenius_objective,
    kl_objective,
    product_at,
)
from .seeding import make_rng


class Objective(str, enum.Enum):
    KL = "kl"
    FROBENIUS = "frobenius"


@dataclass(frozen=True)
class NmfConfig:
    k: int
    max_iters: int = 200
    tol: float = 1e-6
    seed: int = 0
    objective: Objective = Objective.KL
    epsilon: float = EPSILON

    def __post_init__(self):
        object.__setattr__(self, "objective", Objective(self.objective))
        if int(self.k) < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if int(self.max_iters) < 1:
            raise ConfigError(f"max_iters must be >= 1, got {self.max_iters}")
        if not self.tol >= 0:
            raise ConfigError(f"tol must be >= 0, got {self.tol}")
        if not self.epsilon > 0:
            raise ConfigError(f"epsilon must be > 0, got {self.epsilon}")

    def with_(self, **changes) -> "NmfConfig":
        return replace(self, **changes)


@dataclass
class Factorization:
    W: np.ndarray
    H: np.ndarray
    objective_history: list[float] = field(default_factory=list)
    iterations_run: int = 0
    converged: bool = False

    @property
    def objective(self) -> float:
        return self.objective_history[-1]


def init_factors(m: int, n: int, k: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Draw W (m x k) then H (k x n) i.i.d. uniform on (0, 1]."""
    if m < 1 or n < 1 or k < 1:
        raise ShapeError(f"dimensions must be >= 1, got m={m}, n={n}, k={k}")
    rng = make_rng(seed)
    # random() is on [0, 1); reflect to (0, 1]
    W = 1.0 - rng.random((m, k))
    H = 1.0 - rng.random((k, n))
    return W, H


class _Prepared:
    """Coordinate and CSR views of X reused across update steps."""

    def __init__(self, X: SparseMatrix):
        self.X = X
        self.rows, self.cols, self.vals = X.coordinates()
        self.csr = X.csr
        self._csr_t = None

    @property
    def csr_t(self):
        if self._csr_t is None:
            self._csr_t = self.csr.T.tocsr()
        return self._csr_t

    def ratio(self, W, H, epsilon):
        """Sparse X / max(WH, eps) with the sparsity pattern of X."""
        y = np.maximum(product_at(W, H, self.rows, self.cols), epsilon)
        X = self.csr
        return sp.csr_matrix((self.vals / y, X.indices, X.indptr), shape=X.shape)


def _objective(prep: _Prepared, W, H, objective: Objective, epsilon: float) -> float:
    if objective is Objective.KL:
        return kl_objective(prep.X, W, H, epsilon)
    return frobenius_objective(prep.X, W, H)


def _update_W(prep, W, H, objective, epsilon):
    if objective is Objective.KL:
        R = prep.ratio(W, H, epsilon)
        num = np.asarray(R @ H.T)
        den = H.sum(axis=1)[None, :]
    else:
        num = np.asarray(prep.csr @ H.T)
        den = W @ (H @ H.T)
    return W * num / np.maximum(den, epsilon)


def _update_H(prep, W, H, objective, epsilon):
    if objective is Objective.KL:
        R = prep.ratio(W, H, epsilon)
        num = np.asarray(R.T @ W).T
        den = W.sum(axis=0)[:, None]
    else:
        num = np.asarray(prep.csr_t @ W).T
        den = (W.T @ W) @ H
    return H * num / np.maximum(den, epsilon)


def _check_conformable(X: SparseMatrix, W: np.ndarray, H: np.ndarray):
    if W.shape[0] != X.rows or H.shape[1] != X.cols or W.shape[1] != H.shape[0]:
        raise ShapeError(f"factors {W.shape} x {H.shape} do not match X {X.shape}")


def update_step(
    X: SparseMatrix,
    W,
    H,
    objective: Objective | str = Objective.KL,
    epsilon: float = EPSILON,
    *,
    update_W: bool = True,
    update_H: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """Apply one multiplicative update to W, then to H (using the new W)."""
    W = check_dense(W, "W")
    H = check_dense(H, "H")
    _check_conformable(X, W, H)
    return _step(_Prepared(X), W, H, Objective(objective), epsilon, update_W, update_H)


def _step(prep, W, H, objective, epsilon, update_W=True, update_H=True):
    if update_W:
        W = _update_W(prep, W, H, objective, epsilon)
    if update_H:
        H = _update_H(prep, W, H, objective, epsilon)
    return W, H


def relative_improvement(prev: float, cur: float) -> float:
    return (prev - cur) / (1.0 + prev)


def _run(prep, W, H, config: NmfConfig, update_W=True, update_H=True) -> Factorization:
    obj, eps = config.objective, config.epsilon
    history = [_objective(prep, W, H, obj, eps)]
    converged = False
    iters = 0
    if update_W or update_H:
        for _ in range(config.max_iters):
            W, H = _step(prep, W, H, obj, eps, update_W, update_H)
            iters += 1
            history.append(_objective(prep, W, H, obj, eps))
            if relative_improvement(history[-2], history[-1]) < config.tol:
                converged = True
                break
    return Factorization(W=W, H=H, objective_history=history, iterations_run=iters, converged=converged)


def _check_rank(X: SparseMatrix, k: int):
    if k > min(X.rows, X.cols):
        raise ConfigError(f"k={k} exceeds min dimension of {X.rows}x{X.cols} matrix")


def factorize(X: SparseMatrix, config: NmfConfig) -> Factorization:
    """Factorize X from a seeded random start.

    Runs until ``config.max_iters`` steps or until the relative improvement
    ``(f_prev - f_cur) / (1 + f_prev)`` drops below ``config.tol``.
    ``objective_history[0]`` is the objective of the initial factors.
    """
    _check_rank(X, config.k)
    W, H = init_factors(X.rows, X.cols, config.k, config.seed)
    return _run(_Prepared(X), W, H, config)


def factorize_warm(
    X: SparseMatrix,
    W0,
    H0,
    config: NmfConfig,
    update_W: bool = True,
    update_H: bool = True,
) -> Factorization:
    """Like :func:`factorize` but starting from ``(W0, H0)``.

    A factor whose flag is false is returned unchanged. ``config.k`` must agree
    with the inner dimension of the given factors.
    """
    W = check_dense(W0, "W0").copy()
    H = check_dense(H0, "H0").copy()
    _check_conformable(X, W, H)
    if W.shape[1] != config.k:
        raise ShapeError(f"factors have inner dimension {W.shape[1]}, config.k={config.k}")
    return _run(_Prepared(X), W, H, config, update_W, update_H)


def factorize_best_of(X: SparseMatrix, config: NmfConfig, seeds) -> Factorization:
    """Run :func:`factorize` once per seed and keep the lowest final objective.

    Ties go to the earliest seed.
    """
    best = None
    for seed in seeds:
        result = factorize(X, config.with_(seed=seed))
        if best is None or result.objective < best.objective:
            best = result
    if best is None:
        raise ConfigError("no seeds given")
    return best
