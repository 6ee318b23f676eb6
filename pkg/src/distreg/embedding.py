"""Bags of points and their empirical mean embeddings.

A bag is the observable stand-in for an unobserved distribution.  Its mean
embedding mu = (1/d) sum_s k(., x_s) is never materialized: inner products
between embeddings reduce to double sums of base-kernel values, and
distances follow from inner products.  All heavy reductions go through
:mod:`distreg.backend`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import NumericalInconsistencyError

# radicands of squared distances may round slightly negative; anything below
# this is a genuine inconsistency rather than rounding
RADICAND_FLOOR = -1e-12


@dataclass(frozen=True, eq=False)
class Bag:
    """A finite sample standing in for one distribution.

    :ivar points: (d, p) array, one point per row.  Stored C-contiguous,
        float64 and read-only; a 1-d input is treated as d points in R^1.
    """

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ValueError("bag requires a nonempty (d, p) point array")
        if not np.isfinite(pts).all():
            raise ValueError("bag points must be finite")
        pts = np.ascontiguousarray(pts)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class EmbeddingGram:
    """Dense base-kernel values between the points of two bags.

    Kept as an explicit object so tests and diagnostics can recompute
    double sums independently of the backend reductions.

    :ivar matrix: (d_A, d_B) array with entries k(a_s, b_t).
    :ivar cached: whether the matrix was served from a cache rather than
        recomputed.
    """

    matrix: np.ndarray
    cached: bool = False


def _check_pair(A: Bag, B: Bag, base) -> None:
    if A.dim != B.dim:
        raise ValueError(f"bag dimensions differ: {A.dim} vs {B.dim}")
    if A.dim != base.dim:
        raise ValueError(
            f"bag dimension {A.dim} does not match kernel dimension {base.dim}"
        )


def embedding_gram(A: Bag, B: Bag, base) -> EmbeddingGram:
    """Base-kernel values between all point pairs of two bags.

    Deliberately a plain NumPy computation, independent of the selected
    backend, so it can serve as a second route for checking the reductions.
    """
    _check_pair(A, B, base)
    a, b = A.points, B.points
    d2 = (
        np.sum(a * a, axis=1)[:, None]
        + np.sum(b * b, axis=1)[None, :]
        - 2.0 * (a @ b.T)
    )
    np.maximum(d2, 0.0, out=d2)
    if base.code == backend.GAUSSIAN:
        mat = np.exp(-d2 / (base.bandwidth**2))
    else:
        mat = np.exp(-np.sqrt(d2) / base.bandwidth)
    return EmbeddingGram(matrix=mat)


def _ordered(A: Bag, B: Bag) -> tuple[Bag, Bag]:
    # fix the argument order so the double-sum accumulation order, and hence
    # the value, is identical for (A, B) and (B, A)
    if A is B:
        return A, B
    ka = (A.size, A.points.tobytes())
    kb = (B.size, B.points.tobytes())
    return (A, B) if ka <= kb else (B, A)


def embed_inner(A: Bag, B: Bag, base) -> float:
    """Inner product of the two empirical mean embeddings.

    Equals the mean of base-kernel values over all point pairs; symmetric
    in its bag arguments by construction.
    """
    _check_pair(A, B, base)
    first, second = _ordered(A, B)
    return backend.pair_mean(first.points, second.points, base.code, base.bandwidth)


def embed_sq_dist(A: Bag, B: Bag, base) -> float:
    """Squared embedding distance ||mu_A - mu_B||^2, clamped at zero."""
    if A is B or (A.size == B.size and np.array_equal(A.points, B.points)):
        return 0.0
    # group the self terms first: float addition commutes, so the radicand
    # (and hence the distance) is bitwise symmetric in A and B
    r = (embed_inner(A, A, base) + embed_inner(B, B, base)) - 2.0 * embed_inner(A, B, base)
    if r < RADICAND_FLOOR:
        raise NumericalInconsistencyError(
            f"squared embedding distance evaluated to {r:.3e}"
        )
    return max(r, 0.0)


def embed_dist(A: Bag, B: Bag, base) -> float:
    """Embedding distance ||mu_A - mu_B||; exactly zero for identical bags."""
    return float(np.sqrt(embed_sq_dist(A, B, base)))


def stack_bags(bags) -> tuple[np.ndarray, np.ndarray]:
    """Concatenate bag points row-wise, returning (points, boundary offsets)."""
    bags = list(bags)
    if not bags:
        raise ValueError("need at least one bag")
    dim = bags[0].dim
    for b in bags:
        if b.dim != dim:
            raise ValueError("bags have inconsistent point dimensions")
    starts = np.zeros(len(bags) + 1, dtype=np.int64)
    np.cumsum([b.size for b in bags], out=starts[1:])
    pts = np.concatenate([b.points for b in bags], axis=0)
    return np.ascontiguousarray(pts), starts


def bag_inner_matrix(bags_a, base, bags_b=None) -> np.ndarray:
    """Matrix of embedding inner products between two bag collections.

    With ``bags_b`` omitted the result is the exactly-symmetric matrix of
    inner products among ``bags_a``.
    """
    pts_a, starts_a = stack_bags(bags_a)
    if pts_a.shape[1] != base.dim:
        raise ValueError("bag dimension does not match kernel dimension")
    if bags_b is None:
        return backend.bag_means(
            pts_a, starts_a, pts_a, starts_a, base.code, base.bandwidth, True
        )
    pts_b, starts_b = stack_bags(bags_b)
    if pts_b.shape[1] != base.dim:
        raise ValueError("bag dimension does not match kernel dimension")
    return backend.bag_means(
        pts_a, starts_a, pts_b, starts_b, base.code, base.bandwidth, False
    )


def bag_self_inners(bags, base) -> np.ndarray:
    """<mu_i, mu_i> for each bag, without forming the full inner matrix."""
    return np.array(
        [backend.pair_mean(b.points, b.points, base.code, base.bandwidth) for b in bags]
    )


def embedding_error_curve(sampler, base, d_values, trials, reference_d, seed=0):
    """Mean embedding error as a function of bag size.

    ``sampler(rng, count)`` draws ``count`` points from one fixed
    distribution.  The unobservable true embedding is proxied by a single
    reference bag of size ``reference_d``; for each requested bag size d the
    curve reports the mean over ``trials`` of the embedding distance between
    a fresh bag of size d and the reference bag.

    :returns: list of (d, mean_error) pairs in the order given.
    """
    d_values = [int(d) for d in d_values]
    if not d_values or any(d < 1 for d in d_values):
        raise ValueError("d_values must be positive integers")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if reference_d < 16 * max(d_values):
        raise ValueError(
            f"reference_d={reference_d} too small; need >= 16*max(d)="
            f"{16 * max(d_values)} for a trustworthy proxy"
        )
    rng = np.random.default_rng(seed)
    ref = np.ascontiguousarray(sampler(rng, reference_d), dtype=np.float64)
    if ref.ndim != 2 or ref.shape != (reference_d, base.dim):
        raise ValueError("sampler output has the wrong shape")
    # the reference self inner product is the expensive reduction; do it once
    refref = backend.pair_mean(ref, ref, base.code, base.bandwidth)
    sums = np.zeros(len(d_values))
    for _ in range(trials):
        for i, d in enumerate(d_values):
            pts = np.ascontiguousarray(sampler(rng, d), dtype=np.float64)
            if pts.shape != (d, base.dim):
                raise ValueError("sampler output has the wrong shape")
            bagbag = backend.pair_mean(pts, pts, base.code, base.bandwidth)
            cross = backend.pair_mean(pts, ref, base.code, base.bandwidth)
            r = bagbag - 2.0 * cross + refref
            if r < RADICAND_FLOOR:
                raise NumericalInconsistencyError(
                    f"squared embedding distance evaluated to {r:.3e}"
                )
            sums[i] += np.sqrt(max(r, 0.0))
    return [(d, float(s / trials)) for d, s in zip(d_values, sums)]
