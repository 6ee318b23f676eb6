"""Synthetic two-stage data with a known ground truth.

Each distribution is parameterized by a point theta drawn uniformly from
the unit cube; the observable bag is a point cloud around theta.  Labels
come from one of two truth families:

* ``linear_mean``: f(theta) = <w, theta>, evaluated exactly from the
  parameter at generation time.
* ``rkhs_combination``: f = sum_k a_k K(mu_k, .), where mu_k are the
  empirical embeddings of fixed anchor bags.  The truth is then exactly a
  member of the second-level RKHS and can be evaluated exactly at any bag;
  labels use a per-distribution reference bag larger than the training bag
  as the stand-in for the unobservable true embedding.

All draws flow through a single generator in a fixed order, so one seed
pins the whole dataset bit for bit.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .embedding import Bag, bag_inner_matrix, bag_self_inners
from .kernels import BaseKernelSpec, EmbeddingKernelSpec
from .solver import TwoStageDataset

META_FAMILIES = ("gaussian_means", "mixture")
TRUTH_FAMILIES = ("linear_mean", "rkhs_combination")

# bag size used when an rkhs truth is asked for a value at a raw parameter
# and has to draw its own stand-in bag
_PARAM_PROXY_D = 1024


@dataclass(frozen=True)
class SyntheticConfig:
    """Shape of one synthetic draw.

    ``point_spread`` scales the cloud around each theta; ``label_bound``
    clips labels symmetrically.  ``anchor_bag_size`` and ``label_ref_size``
    apply to the rkhs_combination truth only.
    """

    n: int = 64
    d: int = 32
    p: int = 2
    meta_family: str = "gaussian_means"
    noise_sigma: float = 0.05
    label_bound: float = 2.0
    truth: str = "rkhs_combination"
    truth_anchors: int = 4
    truth_scale: float = 1.0
    point_spread: float = 0.2
    anchor_bag_size: int = 192
    label_ref_size: int = 256
    seed: int = 0
    base: BaseKernelSpec = None
    embed: EmbeddingKernelSpec = None

    def __post_init__(self):
        if self.base is None:
            object.__setattr__(
                self, "base", BaseKernelSpec("gaussian", 0.5, self.p)
            )
        if self.embed is None:
            object.__setattr__(
                self, "embed", EmbeddingKernelSpec("linear", 1.0, self.base)
            )
        for name in ("n", "d", "p", "truth_anchors", "anchor_bag_size", "label_ref_size"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer")
        if self.meta_family not in META_FAMILIES:
            raise ValueError(f"unknown meta family {self.meta_family!r}")
        if self.truth not in TRUTH_FAMILIES:
            raise ValueError(f"unknown truth family {self.truth!r}")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")
        if not self.label_bound > 0:
            raise ValueError("label_bound must be positive")
        if not self.point_spread > 0:
            raise ValueError("point_spread must be positive")
        if self.base.dim != self.p:
            raise ValueError("base kernel dimension must equal p")
        if self.embed.base != self.base:
            raise ValueError("embedding kernel must be built on the base kernel")


def sample_cloud(cfg: SyntheticConfig, rng, theta: np.ndarray, count: int) -> np.ndarray:
    """Draw one bag's points for the distribution with parameter theta."""
    if cfg.meta_family == "gaussian_means":
        return theta + cfg.point_spread * rng.standard_normal((count, cfg.p))
    # mixture: equal-weight pair of components at theta and its reflection
    centers = np.stack([theta, 1.0 - theta])
    comp = rng.integers(0, 2, size=count)
    return centers[comp] + 0.5 * cfg.point_spread * rng.standard_normal((count, cfg.p))


@dataclass(frozen=True, eq=False)
class LinearMeanTruth:
    """f(theta) = <w, theta>; bags are evaluated through their sample mean."""

    weight: np.ndarray

    @property
    def kind(self) -> str:
        return "linear_mean"

    def value_for_param(self, theta) -> float:
        return float(np.asarray(theta, dtype=np.float64) @ self.weight)

    def value_for_bag(self, bag: Bag) -> float:
        return float(bag.points.mean(axis=0) @ self.weight)

    def values_for_bags(self, bags) -> np.ndarray:
        return np.array([self.value_for_bag(b) for b in bags])


@dataclass(frozen=True, eq=False)
class RkhsCombinationTruth:
    """f = sum_k a_k K(mu_k, .) over fixed anchor embeddings.

    Exact on any bag; evaluation at a raw parameter draws a deterministic
    proxy bag (seeded from the parameter bytes) and is therefore only as
    good as that proxy.
    """

    anchors: tuple[Bag, ...]
    coefficients: np.ndarray
    cfg: SyntheticConfig = field(repr=False)

    @property
    def kind(self) -> str:
        return "rkhs_combination"

    def values_for_bags(self, bags) -> np.ndarray:
        embed = self.cfg.embed
        cross = bag_inner_matrix(self.anchors, embed.base, list(bags))
        if embed.family == "linear":
            kmat = cross
        else:
            a_self = bag_self_inners(self.anchors, embed.base)
            b_self = bag_self_inners(bags, embed.base)
            sq = a_self[:, None] + b_self[None, :] - 2.0 * cross
            np.maximum(sq, 0.0, out=sq)
            kmat = np.exp(-sq / embed.sigma**2)
        return self.coefficients @ kmat

    def value_for_bag(self, bag: Bag) -> float:
        return float(self.values_for_bags([bag])[0])

    def value_for_param(self, theta) -> float:
        theta = np.asarray(theta, dtype=np.float64)
        digest = hashlib.blake2b(
            theta.tobytes() + self.cfg.seed.to_bytes(8, "little", signed=True),
            digest_size=8,
        ).digest()
        rng = np.random.default_rng(int.from_bytes(digest, "little"))
        proxy = Bag(sample_cloud(self.cfg, rng, theta, _PARAM_PROXY_D))
        return self.value_for_bag(proxy)


def draw_truth(cfg: SyntheticConfig, rng):
    """Draw the ground-truth function; consumes a fixed number of draws."""
    if cfg.truth == "linear_mean":
        w = cfg.truth_scale * rng.standard_normal(cfg.p) / np.sqrt(cfg.p)
        return LinearMeanTruth(weight=w)
    anchor_thetas = rng.uniform(size=(cfg.truth_anchors, cfg.p))
    anchors = tuple(
        Bag(sample_cloud(cfg, rng, anchor_thetas[k], cfg.anchor_bag_size))
        for k in range(cfg.truth_anchors)
    )
    coeffs = cfg.truth_scale * rng.uniform(-1.0, 1.0, size=cfg.truth_anchors)
    return RkhsCombinationTruth(anchors=anchors, coefficients=coeffs, cfg=cfg)


def make_dataset(cfg: SyntheticConfig, rng, truth, n: int, d: int) -> TwoStageDataset:
    """Draw n distributions with bags of size d and label them under truth."""
    thetas = rng.uniform(size=(n, cfg.p))
    bags = tuple(Bag(sample_cloud(cfg, rng, thetas[i], d)) for i in range(n))
    if truth.kind == "rkhs_combination":
        refs = [Bag(sample_cloud(cfg, rng, thetas[i], cfg.label_ref_size)) for i in range(n)]
        clean = truth.values_for_bags(refs)
    else:
        clean = thetas @ truth.weight
    noise = rng.normal(0.0, 1.0, size=n) * cfg.noise_sigma
    y = np.clip(clean + noise, -cfg.label_bound, cfg.label_bound)
    return TwoStageDataset(
        bags=bags, y=y, base=cfg.base, embed=cfg.embed, label_bound=cfg.label_bound
    )


def generate_synthetic(cfg: SyntheticConfig):
    """Generate a dataset and its truth oracle from one seed.

    Fixed draw order (truth first, then per-distribution parameters, bags,
    reference bags, label noise), so identical configs and seeds reproduce
    the dataset exactly.
    """
    rng = np.random.default_rng(cfg.seed)
    truth = draw_truth(cfg, rng)
    ds = make_dataset(cfg, rng, truth, cfg.n, cfg.d)
    return ds, truth
