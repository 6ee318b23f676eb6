"""Regularized least squares over mean-embedded bags, in representer
coordinates.

The estimator minimizes

    (1/n) sum_i (f(mu_i) - y_i)^2 + lambda1 ||f||^2 + lambda2 ||V f||^2

over the RKHS of the second-level kernel, where V^T V is realized on the
observed embeddings by an n x n penalty matrix M: the penalty term equals
(1/n) * evals^T M evals with evals the vector of f values at the training
embeddings.  Writing f = sum_i c_i K(mu_i, .) and eliminating f gives the
(generally nonsymmetric) linear system

    (G + n*lambda1*I + lambda2*M G) c = y,

with G the second-level Gram matrix.  Everything here is dense and direct;
the intended scale is a desk machine, not a cluster.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import lu_factor, lu_solve
from scipy.linalg.lapack import dgecon

from .embedding import Bag, bag_inner_matrix, bag_self_inners
from .errors import SingularSystemError
from .kernels import BaseKernelSpec, EmbeddingKernelSpec

PENALTY_KINDS = ("identity", "laplacian", "custom")

# beyond this 1-norm condition estimate the solve is not trustworthy
CONDITION_LIMIT = 1e14

# suggested additive bump to lambda1 when the system is singular, relative
# to the mean Gram diagonal scale
JITTER_SCALE = 1e-10

# tolerance-guarded rounding so exact integer powers of n survive float pow
_ROUND_GUARD = 1e-9


@dataclass(frozen=True)
class PenaltySpec:
    """Choice of the penalty matrix M realizing the second regularizer.

    identity: M = I, shrinking function values directly.
    laplacian: graph Laplacian of Gaussian weights on embedding distances,
        with ``laplacian_bandwidth`` as the weight width; penalizes
        value differences between nearby embeddings.
    custom: a caller-supplied symmetric PSD matrix.
    """

    kind: str = "identity"
    laplacian_bandwidth: float = 1.0
    custom_matrix: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in PENALTY_KINDS:
            raise ValueError(f"unknown penalty kind {self.kind!r}")
        if self.kind == "laplacian" and not self.laplacian_bandwidth > 0:
            raise ValueError("laplacian_bandwidth must be positive")
        if self.kind == "custom":
            if self.custom_matrix is None:
                raise ValueError("custom penalty requires custom_matrix")
            m = np.asarray(self.custom_matrix, dtype=np.float64)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ValueError("custom_matrix must be square")
            object.__setattr__(self, "custom_matrix", m)


@dataclass(frozen=True, eq=False)
class TwoStageDataset:
    """Bags with real labels, plus the kernels that interpret them.

    Immutable after construction; the pairwise embedding inner products are
    computed once on first use and shared by the Gram, the penalty matrix
    and the fit.
    """

    bags: tuple[Bag, ...]
    y: np.ndarray
    base: BaseKernelSpec
    embed: EmbeddingKernelSpec
    label_bound: float | None = None

    def __post_init__(self):
        bags = tuple(self.bags)
        if not bags:
            raise ValueError("dataset needs at least one bag")
        y = np.asarray(self.y, dtype=np.float64).reshape(-1).copy()
        if y.shape[0] != len(bags):
            raise ValueError(f"{len(bags)} bags but {y.shape[0]} labels")
        if not np.isfinite(y).all():
            raise ValueError("labels must be finite")
        for b in bags:
            if b.dim != self.base.dim:
                raise ValueError("bag dimension does not match base kernel")
        if self.embed.base != self.base:
            raise ValueError("embedding kernel built on a different base kernel")
        if self.label_bound is not None:
            if not self.label_bound > 0:
                raise ValueError("label_bound must be positive")
            if np.abs(y).max() > self.label_bound + 1e-12:
                raise ValueError("labels exceed the stated label bound")
        y.setflags(write=False)
        object.__setattr__(self, "bags", bags)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return len(self.bags)

    @cached_property
    def inner_matrix(self) -> np.ndarray:
        """Symmetric matrix of embedding inner products <mu_i, mu_j>."""
        h = bag_inner_matrix(self.bags, self.base)
        h.setflags(write=False)
        return h


@dataclass(frozen=True, eq=False)
class Model:
    """Fitted estimator f = sum_i c_i K(mu_i, .), frozen after the fit.

    ``support_self_inner`` caches <mu_i, mu_i> of the support bags so
    predictions with the Gaussian second-level kernel need no recomputation;
    ``residual_inf`` and ``condition_estimate`` are solve diagnostics.
    """

    support_bags: tuple[Bag, ...]
    coefficients: np.ndarray
    lambda1: float
    lambda2: float
    penalty: PenaltySpec
    base: BaseKernelSpec
    embed: EmbeddingKernelSpec
    cV_estimate: float
    support_self_inner: np.ndarray
    residual_inf: float
    condition_estimate: float

    @property
    def n(self) -> int:
        return len(self.support_bags)


@dataclass(frozen=True)
class ParamSchedule:
    """Regularization strengths, bag size and machine budget for one n."""

    lambda1: float
    lambda2: float
    d: int
    m_max: int
    regime: str


def _sq_dist_matrix(inner: np.ndarray) -> np.ndarray:
    diag = np.diag(inner)
    sq = diag[:, None] + diag[None, :] - 2.0 * inner
    np.maximum(sq, 0.0, out=sq)
    return sq


def build_gram(ds: TwoStageDataset) -> np.ndarray:
    """Second-level Gram matrix G with G_ij = K(mu_i, mu_j).

    Exactly symmetric; diagonal bounded by the kernel bound (1 for both
    families).
    """
    h = ds.inner_matrix
    if ds.embed.family == "linear":
        return h.copy()
    return np.exp(-_sq_dist_matrix(h) / ds.embed.sigma**2)


def build_penalty_matrix(ds: TwoStageDataset, penalty: PenaltySpec) -> np.ndarray:
    """Materialize the penalty matrix M for this dataset's embeddings."""
    n = ds.n
    if penalty.kind == "identity":
        return np.eye(n)
    if penalty.kind == "laplacian":
        sq = _sq_dist_matrix(ds.inner_matrix)
        w = np.exp(-sq / penalty.laplacian_bandwidth**2)
        np.fill_diagonal(w, 0.0)
        lap = np.diag(w.sum(axis=1)) - w
        return lap
    m = penalty.custom_matrix
    if m.shape != (n, n):
        raise ValueError(f"custom penalty matrix is {m.shape}, expected ({n}, {n})")
    if not np.allclose(m, m.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(m).max())):
        raise ValueError("custom penalty matrix must be symmetric")
    sym = 0.5 * (m + m.T)
    evals = np.linalg.eigvalsh(sym)
    if evals[0] < -1e-10 * max(np.trace(sym), 1e-300):
        raise ValueError(
            f"custom penalty matrix must be PSD (min eigenvalue {evals[0]:.3e})"
        )
    return sym.copy()


def _penalty_operator_norm(penalty: PenaltySpec, mmat: np.ndarray | None) -> float:
    if penalty.kind == "identity":
        return 1.0
    evals = np.linalg.eigvalsh(0.5 * (mmat + mmat.T))
    return float(max(evals[-1], 0.0))


def estimate_cV(ds: TwoStageDataset, penalty: PenaltySpec) -> float:
    """Upper bound on ||V^* V|| for the operator realized by the penalty.

    The sampling operator into representer coordinates has norm at most
    kappa, so ||V^* V|| <= kappa^2 ||M||; for the identity penalty this is
    exactly kappa^2.
    """
    kappa2 = ds.embed.kappa**2
    if penalty.kind == "identity":
        return kappa2
    mmat = build_penalty_matrix(ds, penalty)
    return kappa2 * _penalty_operator_norm(penalty, mmat)


def fit(
    ds: TwoStageDataset,
    lambda1: float,
    lambda2: float = 0.0,
    penalty: PenaltySpec = PenaltySpec(),
) -> Model:
    """Solve the representer system and return the fitted model.

    Uses a pivoted LU factorization (the system is nonsymmetric whenever
    lambda2 > 0 and M is not the identity).  A 1-norm condition estimate
    above ``CONDITION_LIMIT`` raises :class:`SingularSystemError` carrying a
    suggested lambda1 jitter rather than returning garbage silently.
    """
    if not lambda1 > 0:
        raise ValueError("lambda1 must be positive")
    if lambda2 < 0:
        raise ValueError("lambda2 must be nonnegative")
    n = ds.n
    gram = build_gram(ds)
    system = gram + (n * lambda1) * np.eye(n)
    mmat = None
    if lambda2 > 0:
        mmat = build_penalty_matrix(ds, penalty)
        if penalty.kind == "identity":
            system += lambda2 * gram
        else:
            system += lambda2 * (mmat @ gram)

    anorm = np.abs(system).sum(axis=0).max()
    lu, piv = lu_factor(system)
    rcond, info = dgecon(lu, anorm)
    if info != 0:
        raise RuntimeError(f"condition estimate failed (LAPACK info={info})")
    cond = math.inf if rcond == 0.0 else 1.0 / rcond
    if cond > CONDITION_LIMIT:
        raise SingularSystemError(
            condition_estimate=cond,
            suggested_jitter=JITTER_SCALE * np.trace(gram) / n,
        )
    coef = lu_solve((lu, piv), ds.y)
    residual = float(np.abs(system @ coef - ds.y).max())

    if penalty.kind == "identity":
        cv = ds.embed.kappa**2
    elif mmat is not None:
        cv = ds.embed.kappa**2 * _penalty_operator_norm(penalty, mmat)
    else:
        cv = estimate_cV(ds, penalty)

    coef.setflags(write=False)
    self_inner = np.diag(ds.inner_matrix).copy()
    self_inner.setflags(write=False)
    return Model(
        support_bags=ds.bags,
        coefficients=coef,
        lambda1=float(lambda1),
        lambda2=float(lambda2),
        penalty=penalty,
        base=ds.base,
        embed=ds.embed,
        cV_estimate=float(cv),
        support_self_inner=self_inner,
        residual_inf=residual,
        condition_estimate=float(cond),
    )


def _cross_kernel(model: Model, bags) -> np.ndarray:
    """(len(bags), n) matrix of K(mu_bag, mu_support)."""
    cross = bag_inner_matrix(bags, model.base, model.support_bags)
    if model.embed.family == "linear":
        return cross
    q_self = bag_self_inners(bags, model.base)
    sq = q_self[:, None] + model.support_self_inner[None, :] - 2.0 * cross
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-sq / model.embed.sigma**2)


def predict_batch(model: Model, bags) -> np.ndarray:
    """Predictions at several bags; one kernel reduction for all of them."""
    bags = list(bags)
    if not bags:
        return np.zeros(0)
    return _cross_kernel(model, bags) @ model.coefficients


def predict(model: Model, bag: Bag) -> float:
    """Prediction at a single bag."""
    return float(predict_batch(model, [bag])[0])


def schedule_params(
    n: int, r: float, beta: float, alpha: float, cV: float
) -> ParamSchedule:
    """Regularization and design sizes for a dataset of n distributions.

    Two regimes split at r = 1/2.  For r >= 1/2:

        lambda1 = n^(-1/(2r+beta))            lambda2 = lambda1^(2r) / (2 cV)
        d = ceil(n^((1+2r)/(alpha(2r+beta)))) m_max = floor(n^((2r-1)/(2r+beta)))

    and for r < 1/2 the low-smoothness variant

        lambda1 = n^(-1/(1+beta))             lambda2 = lambda1 / (2 cV)
        d = ceil(n^(2/(alpha(1+beta))))       m_max = 1.

    In both regimes lambda2 is computed from lambda1, so the coupling
    2 cV lambda2 = lambda1^max(2r, 1) holds to rounding.  Bag sizes grow
    superlinearly in n; callers cap d when running experiments.
    """
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    if n == 1:
        raise ValueError(
            "schedule is degenerate at n=1 (it would put lambda1 at 1, "
            "outside the open unit interval the analysis requires)"
        )
    for name, val in (("r", r), ("beta", beta), ("alpha", alpha)):
        if not 0.0 < val <= 1.0:
            raise ValueError(f"{name} must lie in (0, 1]")
    if not cV > 0:
        raise ValueError("cV must be positive")

    if r >= 0.5:
        regime = "standard_r"
        lam1 = float(n) ** (-1.0 / (2.0 * r + beta))
        lam2 = lam1 ** (2.0 * r) / (2.0 * cV)
        d_raw = float(n) ** ((1.0 + 2.0 * r) / (alpha * (2.0 * r + beta)))
        m_raw = float(n) ** ((2.0 * r - 1.0) / (2.0 * r + beta))
        m_max = max(1, math.floor(m_raw + _ROUND_GUARD))
    else:
        regime = "low_r"
        lam1 = float(n) ** (-1.0 / (1.0 + beta))
        lam2 = lam1 / (2.0 * cV)
        d_raw = float(n) ** (2.0 / (alpha * (1.0 + beta)))
        m_max = 1
    if not math.isfinite(d_raw):
        raise ValueError("scheduled bag size overflows; alpha is too small for this n")
    d = max(1, math.ceil(d_raw - _ROUND_GUARD))
    if not 0.0 < lam2 < 1.0:
        raise ValueError(
            f"scheduled lambda2={lam2:.3g} falls outside (0, 1); "
            "n is too small for this cV"
        )
    return ParamSchedule(
        lambda1=lam1, lambda2=lam2, d=int(d), m_max=int(m_max), regime=regime
    )
