"""Kernel specifications and evaluations.

Two layers: a base kernel on points (bounded by 1, so embeddings live in
the unit ball) and a second-level kernel on mean embeddings, either the
plain inner product or a Gaussian of the embedding distance.  The local
smoothness of the second-level kernel along a bag corpus is estimated
empirically by ``holder_probe``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend
from .embedding import (
    Bag,
    bag_self_inners,
    embed_dist,
    embed_inner,
    embed_sq_dist,
)
from .errors import DegenerateCorpusError, NumericalInconsistencyError

BASE_FAMILIES = ("gaussian", "laplacian")
EMBEDDING_FAMILIES = ("linear", "gaussian_on_H")

# lower clamp for fitted exponents; zero would break the schedules downstream
ALPHA_MIN = 1e-6

# pairs closer than this carry no slope information and only add log noise
PROBE_DIST_FLOOR = 1e-12


@dataclass(frozen=True)
class BaseKernelSpec:
    """Kernel on points in R^dim.

    gaussian: k(u, v) = exp(-||u-v||^2 / bandwidth^2)
    laplacian: k(u, v) = exp(-||u-v|| / bandwidth)

    Both families are bounded by 1, attained at u = v.
    """

    family: str = "gaussian"
    bandwidth: float = 1.0
    dim: int = 1

    def __post_init__(self):
        if self.family not in BASE_FAMILIES:
            raise ValueError(f"unknown base kernel family {self.family!r}")
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError("dim must be a positive integer")

    @property
    def code(self) -> int:
        return backend.GAUSSIAN if self.family == "gaussian" else backend.LAPLACIAN

    @property
    def bound(self) -> float:
        """Supremum of the kernel, sup_u k(u, u)."""
        return 1.0


@dataclass(frozen=True)
class EmbeddingKernelSpec:
    """Second-level kernel on mean embeddings.

    linear: K(mu, nu) = <mu, nu>
    gaussian_on_H: K(mu, nu) = exp(-||mu - nu||^2 / sigma^2)

    ``base`` fixes the embedding space both arguments live in.
    """

    family: str = "linear"
    sigma: float = 1.0
    base: BaseKernelSpec = BaseKernelSpec()

    def __post_init__(self):
        if self.family not in EMBEDDING_FAMILIES:
            raise ValueError(f"unknown embedding kernel family {self.family!r}")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    @property
    def kappa(self) -> float:
        """Bound on sup K(mu, mu) over the embedding ball, squared root of it.

        The linear kernel is bounded by the base-kernel bound (= 1); the
        Gaussian variant is exactly 1 on the diagonal.
        """
        return 1.0


@dataclass(frozen=True)
class HolderEstimate:
    """Fitted local smoothness of a second-level kernel.

    :ivar alpha: exponent in (0, 1], clamped into range if the fit strays.
    :ivar constant: multiplicative constant of the fitted power law.
    :ivar pair_count: number of bag pairs that survived the distance floor.
    :ivar residual: RMS residual of the log-log fit.
    """

    alpha: float
    constant: float
    pair_count: int
    residual: float


def base_kernel_eval(spec: BaseKernelSpec, u, v) -> float:
    """Evaluate the base kernel at a single pair of points."""
    u = np.atleast_1d(np.asarray(u, dtype=np.float64))
    v = np.atleast_1d(np.asarray(v, dtype=np.float64))
    if u.shape != (spec.dim,) or v.shape != (spec.dim,):
        raise ValueError(f"points must be vectors of length {spec.dim}")
    if spec.family == "gaussian":
        d2 = float(np.sum((u - v) ** 2))
        return float(np.exp(-d2 / spec.bandwidth**2))
    d = float(np.linalg.norm(u - v))
    return float(np.exp(-d / spec.bandwidth))


def embedding_kernel_eval(spec: EmbeddingKernelSpec, A: Bag, B: Bag) -> float:
    """Evaluate the second-level kernel at the embeddings of two bags."""
    if spec.family == "linear":
        return embed_inner(A, B, spec.base)
    return float(np.exp(-embed_sq_dist(A, B, spec.base) / spec.sigma**2))


def holder_probe(
    spec: EmbeddingKernelSpec, bags, pair_budget: int, seed: int = 0
) -> HolderEstimate:
    """Estimate the Holder exponent of mu -> K(mu, .) along a bag corpus.

    For sampled bag pairs the probe relates the feature-space distance
    ||K(mu_x, .) - K(mu_y, .)|| (computed from kernel values) to the
    embedding distance ||mu_x - mu_y|| by a log-log least-squares fit.
    Pairs closer than ``PROBE_DIST_FLOOR`` are discarded; if fewer than two
    pairs survive the corpus is degenerate.  The fitted exponent is clamped
    into (0, 1].
    """
    bags = list(bags)
    if len(bags) < 2:
        raise ValueError("need at least two bags to probe smoothness")
    if pair_budget < 1:
        raise ValueError("pair_budget must be >= 1")

    pairs = [(i, j) for i in range(len(bags)) for j in range(i + 1, len(bags))]
    if len(pairs) > pair_budget:
        rng = np.random.default_rng(seed)
        keep = rng.choice(len(pairs), size=pair_budget, replace=False)
        pairs = [pairs[k] for k in sorted(keep)]

    self_inners = bag_self_inners(bags, spec.base)
    xs, ys = [], []
    for i, j in pairs:
        cross = embed_inner(bags[i], bags[j], spec.base)
        sqd = self_inners[i] + self_inners[j] - 2.0 * cross
        if sqd < -PROBE_DIST_FLOOR:
            raise NumericalInconsistencyError(
                f"squared embedding distance evaluated to {sqd:.3e}"
            )
        x = np.sqrt(max(sqd, 0.0))
        if x < PROBE_DIST_FLOOR:
            continue
        if spec.family == "linear":
            y2 = sqd
        else:
            kab = np.exp(-max(sqd, 0.0) / spec.sigma**2)
            y2 = 2.0 - 2.0 * kab
        if y2 <= 0.0:
            continue
        xs.append(x)
        ys.append(np.sqrt(y2))
    if len(xs) < 2:
        raise DegenerateCorpusError(
            "all probe pairs are closer than the distance floor"
        )

    lx = np.log(np.asarray(xs))
    ly = np.log(np.asarray(ys))
    slope, intercept = np.polyfit(lx, ly, 1)
    residual = float(np.sqrt(np.mean((ly - (slope * lx + intercept)) ** 2)))
    alpha = float(min(max(slope, ALPHA_MIN), 1.0))
    return HolderEstimate(
        alpha=alpha,
        constant=float(np.exp(intercept)),
        pair_count=len(xs),
        residual=residual,
    )


__all__ = [
    "ALPHA_MIN",
    "BASE_FAMILIES",
    "EMBEDDING_FAMILIES",
    "BaseKernelSpec",
    "EmbeddingKernelSpec",
    "HolderEstimate",
    "base_kernel_eval",
    "embedding_kernel_eval",
    "holder_probe",
    "embed_dist",
]
