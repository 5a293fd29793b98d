"""Interleaved NMF over three coupled matrices.

Shapes::

    A (m x n) ~= W H      W: m x k, H: k x n
    B (m x p) ~= V G      V <- W before the block, W <- V after
    C (p x n) ~= U F      U <- G^T before the block, G <- U^T after

and at the end of every cycle H <- F. Each block is a short warm-started
multiplicative-update run that updates both of its factors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, ShapeError
from .matrix import SparseMatrix
from .nmf import NmfConfig, factorize_warm, init_factors, relative_improvement
from .seeding import derive_seed


@dataclass(frozen=True)
class InterleavedConfig:
    k: int
    outer_iters: int = 50
    inner: NmfConfig = None

    def __post_init__(self):
        if int(self.k) < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if int(self.outer_iters) < 1:
            raise ConfigError(f"outer_iters must be >= 1, got {self.outer_iters}")
        inner = self.inner if self.inner is not None else NmfConfig(k=self.k, max_iters=10)
        if inner.k != self.k:
            inner = inner.with_(k=self.k)
        object.__setattr__(self, "inner", inner)


@dataclass
class CoupledFactorization:
    W: np.ndarray
    H: np.ndarray
    G: np.ndarray
    F: np.ndarray
    # block objectives at the end of each block's run, one entry per cycle
    history_A: list[float] = field(default_factory=list)
    history_B: list[float] = field(default_factory=list)
    history_C: list[float] = field(default_factory=list)
    cycles_run: int = 0
    converged: bool = False

    @property
    def history_total(self) -> list[float]:
        return [a + b + c for a, b, c in zip(self.history_A, self.history_B, self.history_C)]


@dataclass(frozen=True)
class CouplingAudit:
    max_abs_h_minus_f: float
    inner_dims_match: bool
    H_F_same_shape: bool
    G_rank_matches: bool
    nonnegative: bool

    @property
    def ok(self) -> bool:
        return (
            self.max_abs_h_minus_f == 0.0
            and self.inner_dims_match
            and self.H_F_same_shape
            and self.G_rank_matches
            and self.nonnegative
        )


def check_coupling(A: SparseMatrix, B: SparseMatrix, C: SparseMatrix, k: int) -> None:
    if A.rows != B.rows:
        raise ShapeError(f"rows(A)={A.rows} != rows(B)={B.rows}")
    if B.cols != C.rows:
        raise ShapeError(f"cols(B)={B.cols} != rows(C)={C.rows}")
    if C.cols != A.cols:
        raise ShapeError(f"cols(C)={C.cols} != cols(A)={A.cols}")
    smallest = min(A.rows, A.cols, B.cols)
    if k > smallest:
        raise ConfigError(f"k={k} exceeds smallest block dimension {smallest}")


def interleaved_factorize(
    A: SparseMatrix,
    B: SparseMatrix,
    C: SparseMatrix,
    config: InterleavedConfig,
    callback: Optional[Callable[[int, CoupledFactorization], None]] = None,
) -> CoupledFactorization:
    """Run the interleaved A/B/C factorization.

    W and H are initialized exactly as :func:`latentwsd.nmf.factorize` would
    for A with ``config.inner.seed``; G and F come from a seed derived from it.
    Iteration stops after ``config.outer_iters`` cycles or once the summed
    block objective improves by less than ``config.inner.tol`` (relative).

    ``callback(cycle, snapshot)`` is invoked after every cycle with copies of
    the current factors.
    """
    k = config.k
    check_coupling(A, B, C, k)
    inner = config.inner
    m, n = A.shape
    p = B.cols

    W, H = init_factors(m, n, k, inner.seed)
    U, F = init_factors(p, n, k, derive_seed(inner.seed, "interleaved", "U,F"))
    G = U.T.copy()

    cf = CoupledFactorization(W=W, H=H, G=G, F=F)
    for cycle in range(config.outer_iters):
        # (1) A ~= W H
        res = factorize_warm(A, W, H, inner)
        W, H = res.W, res.H
        cf.history_A.append(res.objective)
        # (2) V <- W; B ~= V G; W <- V
        res = factorize_warm(B, W, G, inner)
        W, G = res.W, res.H
        cf.history_B.append(res.objective)
        # (3) U <- G^T; C ~= U F; G <- U^T
        res = factorize_warm(C, G.T, F, inner)
        G, F = res.W.T.copy(), res.H
        cf.history_C.append(res.objective)
        # (4) H <- F
        H = F.copy()

        cf.W, cf.H, cf.G, cf.F = W, H, G, F
        cf.cycles_run = cycle + 1
        if callback is not None:
            callback(cycle, _snapshot(cf))
        totals = cf.history_total
        if len(totals) >= 2 and relative_improvement(totals[-2], totals[-1]) < inner.tol:
            cf.converged = True
            break
    return cf


def _snapshot(cf: CoupledFactorization) -> CoupledFactorization:
    return CoupledFactorization(
        W=cf.W.copy(),
        H=cf.H.copy(),
        G=cf.G.copy(),
        F=cf.F.copy(),
        history_A=list(cf.history_A),
        history_B=list(cf.history_B),
        history_C=list(cf.history_C),
        cycles_run=cf.cycles_run,
        converged=cf.converged,
    )


def copy_coupling_audit(cf: CoupledFactorization) -> CouplingAudit:
    """Read-only check of the H == F copy and the factor shape couplings."""
    if cf.H.shape == cf.F.shape:
        gap = float(np.max(np.abs(cf.H - cf.F))) if cf.H.size else 0.0
    else:
        gap = float("inf")
    k = cf.W.shape[1]
    factors = (cf.W, cf.H, cf.G, cf.F)
    return CouplingAudit(
        max_abs_h_minus_f=gap,
        inner_dims_match=cf.H.shape[0] == k,
        H_F_same_shape=cf.H.shape == cf.F.shape,
        G_rank_matches=cf.G.shape[0] == k and cf.F.shape[0] == k,
        nonnegative=all(f.size == 0 or (np.all(np.isfinite(f)) and f.min() >= 0) for f in factors),
    )
