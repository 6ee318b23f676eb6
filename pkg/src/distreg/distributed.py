"""Divide-and-conquer fitting: partition, fit locally, average.

Each subset gets its own fit with the penalty matrix rebuilt from the
subset's embeddings alone, and the averaged predictor weights local
predictions by subset size.  Local fits share no state, so they are safe
to run concurrently; here they run sequentially for determinism.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .embedding import Bag
from .errors import LocalFitError
from .solver import Model, PenaltySpec, TwoStageDataset, fit, predict_batch

PARTITION_STRATEGIES = ("contiguous", "shuffled")

# weights are sizes over n; anything further off than this is a logic error
_WEIGHT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Partition:
    """Assignment of dataset indices to m disjoint machine subsets.

    :ivar assignments: (n,) array; entry i is the subset of bag i.
    :ivar m: number of subsets; every subset is nonempty and sizes differ
        by at most one.
    :ivar strategy: 'contiguous' or 'shuffled'.
    :ivar seed: RNG seed for the shuffled strategy, None otherwise.
    """

    assignments: np.ndarray
    m: int
    strategy: str
    seed: int | None = None

    def __post_init__(self):
        a = np.asarray(self.assignments, dtype=np.int64).copy()
        if a.ndim != 1 or a.shape[0] == 0:
            raise ValueError("assignments must be a nonempty vector")
        counts = np.bincount(a, minlength=self.m)
        if len(counts) != self.m or counts.min() == 0:
            raise ValueError("every subset must receive at least one bag")
        if counts.max() - counts.min() > 1:
            raise ValueError("subset sizes must differ by at most one")
        a.setflags(write=False)
        object.__setattr__(self, "assignments", a)

    @property
    def n(self) -> int:
        return self.assignments.shape[0]

    def subsets(self) -> list[np.ndarray]:
        """Index arrays per subset, ascending within each subset."""
        return [np.flatnonzero(self.assignments == j) for j in range(self.m)]


@dataclass(frozen=True, eq=False)
class AveragedModel:
    """Size-weighted average of local models.

    :ivar locals_: local models in subset order.
    :ivar weights: |D_j|/|D| per subset; sums to one.
    :ivar fit_seconds: wall-clock seconds per local fit.
    """

    locals_: tuple[Model, ...]
    weights: np.ndarray
    fit_seconds: tuple[float, ...]

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64).copy()
        if len(self.locals_) == 0:
            raise ValueError("need at least one local model")
        if w.shape != (len(self.locals_),):
            raise ValueError("one weight per local model required")
        if w.min() <= 0 or abs(w.sum() - 1.0) > _WEIGHT_TOL:
            raise ValueError("weights must be positive and sum to one")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def m(self) -> int:
        return len(self.locals_)


def partition(
    ds: TwoStageDataset, m: int, strategy: str = "contiguous", seed: int = 0
) -> Partition:
    """Split the dataset into m balanced subsets.

    'contiguous' slices the dataset in order, with the first n mod m
    subsets one element larger.  'shuffled' applies the same slicing to a
    seeded random permutation of the indices.
    """
    n = ds.n
    if int(m) != m or m < 1:
        raise ValueError("m must be a positive integer")
    if m > n:
        raise ValueError(f"cannot split {n} bags across {m} machines")
    if strategy not in PARTITION_STRATEGIES:
        raise ValueError(f"unknown partition strategy {strategy!r}")

    sizes = np.full(m, n // m, dtype=np.int64)
    sizes[: n % m] += 1
    labels = np.repeat(np.arange(m, dtype=np.int64), sizes)
    if strategy == "contiguous":
        assignments = labels
        used_seed = None
    else:
        order = np.random.default_rng(seed).permutation(n)
        assignments = np.empty(n, dtype=np.int64)
        assignments[order] = labels
        used_seed = int(seed)
    return Partition(assignments=assignments, m=int(m), strategy=strategy, seed=used_seed)


def _subset_dataset(ds: TwoStageDataset, idx: np.ndarray) -> TwoStageDataset:
    sub = TwoStageDataset(
        bags=tuple(ds.bags[i] for i in idx),
        y=ds.y[idx],
        base=ds.base,
        embed=ds.embed,
        label_bound=ds.label_bound,
    )
    if "inner_matrix" in ds.__dict__:
        # reuse already-computed inner products; entries are pairwise and
        # identical to what a fresh local reduction would produce
        h = np.ascontiguousarray(ds.inner_matrix[np.ix_(idx, idx)])
        h.setflags(write=False)
        sub.__dict__["inner_matrix"] = h
    return sub


def fit_distributed(
    ds: TwoStageDataset,
    part: Partition,
    lambda1: float,
    lambda2: float = 0.0,
    penalty: PenaltySpec = PenaltySpec(),
) -> AveragedModel:
    """Fit one model per subset and combine them with size weights.

    Every subset sees the same regularization strengths; its penalty matrix
    is rebuilt from its own embeddings.  A failing local fit is re-raised
    tagged with the subset index.
    """
    if part.n != ds.n:
        raise ValueError("partition does not match dataset size")
    locals_ = []
    timings = []
    for j, idx in enumerate(part.subsets()):
        sub = _subset_dataset(ds, idx)
        t0 = time.perf_counter()
        try:
            locals_.append(fit(sub, lambda1, lambda2, penalty))
        except Exception as exc:
            raise LocalFitError(j, str(exc)) from exc
        timings.append(time.perf_counter() - t0)
    weights = np.array([m.n for m in locals_], dtype=np.float64) / ds.n
    return AveragedModel(
        locals_=tuple(locals_), weights=weights, fit_seconds=tuple(timings)
    )


def predict_averaged_batch(am: AveragedModel, bags) -> np.ndarray:
    """Weighted average of local predictions at several bags."""
    bags = list(bags)
    if not bags:
        return np.zeros(0)
    out = np.zeros(len(bags))
    for w, local in zip(am.weights, am.locals_):
        out += w * predict_batch(local, bags)
    return out


def predict_averaged(am: AveragedModel, bag: Bag) -> float:
    """Weighted average of local predictions at one bag."""
    return float(predict_averaged_batch(am, [bag])[0])


def max_machines(n: int, r: float, beta: float) -> int:
    """Largest machine count that keeps the averaged rate intact.

    floor(n^((2r-1)/(2r+beta))), at least 1.  Defined for r in [1/2, 1];
    below r = 1/2 no multi-machine budget is available.
    """
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    if not 0.5 <= r <= 1.0:
        raise ValueError("machine budget requires r in [1/2, 1]")
    if not 0.0 < beta <= 1.0:
        raise ValueError("beta must lie in (0, 1]")
    expo = (2.0 * r - 1.0) / (2.0 * r + beta)
    return max(1, math.floor(float(n) ** expo + 1e-9))
