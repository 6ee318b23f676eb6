"""Partitioning, local fits and the size-weighted averaged predictor."""

import numpy as np
import numpy.testing as npt
import pytest

from distreg import (
    Bag,
    BaseKernelSpec,
    EmbeddingKernelSpec,
    LocalFitError,
    Partition,
    SingularSystemError,
    TwoStageDataset,
    fit,
    fit_distributed,
    max_machines,
    partition,
    predict_averaged,
    predict_averaged_batch,
    predict_batch,
)

BASE = BaseKernelSpec("gaussian", 1.0, 1)
LINEAR = EmbeddingKernelSpec("linear", 1.0, BASE)


def _dataset(rng, n):
    bags = tuple(
        Bag(rng.standard_normal((int(rng.integers(2, 7)), 1))) for _ in range(n)
    )
    return TwoStageDataset(bags=bags, y=rng.standard_normal(n), base=BASE, embed=LINEAR)


def test_contiguous_split_five_over_two():
    ds = _dataset(np.random.default_rng(0), 5)
    part = partition(ds, 2)
    npt.assert_array_equal(part.assignments, [0, 0, 0, 1, 1])
    assert part.strategy == "contiguous"
    assert part.seed is None
    subsets = part.subsets()
    npt.assert_array_equal(subsets[0], [0, 1, 2])
    npt.assert_array_equal(subsets[1], [3, 4])


def test_shuffled_split_balanced_and_reproducible():
    ds = _dataset(np.random.default_rng(1), 50)
    a = partition(ds, 5, strategy="shuffled", seed=3)
    b = partition(ds, 5, strategy="shuffled", seed=3)
    npt.assert_array_equal(a.assignments, b.assignments)
    sizes = np.bincount(a.assignments)
    assert sizes.max() - sizes.min() <= 1 and sizes.min() >= 1
    other = partition(ds, 5, strategy="shuffled", seed=4)
    assert not np.array_equal(a.assignments, other.assignments)


def test_partition_validation():
    ds = _dataset(np.random.default_rng(2), 4)
    with pytest.raises(ValueError, match="positive integer"):
        partition(ds, 0)
    with pytest.raises(ValueError, match="cannot split"):
        partition(ds, 5)
    with pytest.raises(ValueError, match="strategy"):
        partition(ds, 2, strategy="striped")


def test_partition_object_checks_invariants():
    with pytest.raises(ValueError, match="at least one bag"):
        Partition(assignments=np.array([0, 0, 2]), m=3, strategy="contiguous")
    with pytest.raises(ValueError, match="at most one"):
        Partition(assignments=np.array([0, 0, 0, 1]), m=2, strategy="contiguous")


def test_single_machine_reproduces_centralized_fit():
    rng = np.random.default_rng(4)
    ds = _dataset(rng, 12)
    central = fit(ds, 0.1)
    am = fit_distributed(ds, partition(ds, 1), 0.1)
    assert am.m == 1
    npt.assert_array_equal(am.locals_[0].coefficients, central.coefficients)
    probes = [Bag(rng.standard_normal((3, 1))) for _ in range(6)]
    npt.assert_allclose(
        predict_averaged_batch(am, probes),
        predict_batch(central, probes),
        rtol=0.0,
        atol=1e-10,
    )


def test_weights_are_subset_fractions():
    ds = _dataset(np.random.default_rng(5), 10)
    am = fit_distributed(ds, partition(ds, 3), 0.2)
    npt.assert_allclose(am.weights, [0.4, 0.3, 0.3], rtol=1e-15)
    assert abs(am.weights.sum() - 1.0) <= 1e-12
    assert len(am.fit_seconds) == 3


def test_averaged_prediction_is_weighted_sum_of_locals():
    rng = np.random.default_rng(6)
    ds = _dataset(rng, 9)
    am = fit_distributed(ds, partition(ds, 3), 0.15)
    probes = [Bag(rng.standard_normal((4, 1))) for _ in range(5)]
    manual = sum(
        w * predict_batch(local, probes) for w, local in zip(am.weights, am.locals_)
    )
    npt.assert_allclose(predict_averaged_batch(am, probes), manual, atol=1e-12)
    for k, bag in enumerate(probes):
        npt.assert_allclose(predict_averaged(am, bag), manual[k], atol=1e-12)
    assert predict_averaged_batch(am, []).shape == (0,)


def test_local_fits_match_independent_subset_fits():
    """Slicing the shared inner-product matrix must give each machine the
    same fit it would compute from its bags alone."""
    rng = np.random.default_rng(7)
    ds = _dataset(rng, 8)
    ds.inner_matrix  # force the shared matrix into existence
    part = partition(ds, 2)
    am = fit_distributed(ds, part, 0.3)
    for j, idx in enumerate(part.subsets()):
        standalone = TwoStageDataset(
            bags=tuple(ds.bags[i] for i in idx),
            y=ds.y[idx],
            base=BASE,
            embed=LINEAR,
        )
        npt.assert_allclose(
            am.locals_[j].coefficients,
            fit(standalone, 0.3).coefficients,
            rtol=1e-12,
        )


def test_failing_subset_is_identified():
    # subset 0 holds two identical bags, singular at tiny lambda1
    b = Bag([0.5, 1.5])
    ds = TwoStageDataset(
        bags=(b, Bag(b.points.copy()), Bag([0.0]), Bag([2.0, 3.0])),
        y=[1.0, -1.0, 0.0, 0.5],
        base=BASE,
        embed=LINEAR,
    )
    with pytest.raises(LocalFitError) as exc_info:
        fit_distributed(ds, partition(ds, 2), 1e-16)
    assert exc_info.value.subset == 0
    assert isinstance(exc_info.value.__cause__, SingularSystemError)


def test_partition_must_match_dataset():
    rng = np.random.default_rng(8)
    ds = _dataset(rng, 6)
    other = _dataset(rng, 4)
    with pytest.raises(ValueError, match="does not match"):
        fit_distributed(ds, partition(other, 2), 0.1)


def test_machine_budget_round_numbers():
    assert max_machines(10000, r=0.5, beta=1.0) == 1
    assert max_machines(512, r=1.0, beta=1.0) == 8
    # exponent (2r-1)/(2r+beta) = 0.25, and 100000**0.25 = 17.78...
    assert max_machines(100000, r=0.75, beta=0.5) == 17
    assert max_machines(2, r=0.5, beta=0.1) == 1


def test_machine_budget_validation():
    with pytest.raises(ValueError, match="positive integer"):
        max_machines(0, 0.5, 1.0)
    with pytest.raises(ValueError, match=r"r in \[1/2, 1\]"):
        max_machines(100, 0.25, 1.0)
    with pytest.raises(ValueError, match="beta"):
        max_machines(100, 0.5, 0.0)
