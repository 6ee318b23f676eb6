"""Mean-embedding inner products and distances.

The backend reductions are checked against a second, independent route:
``embedding_gram`` materializes all base-kernel values and the double sum
is taken with plain numpy means.
"""

import math

import numpy as np
import numpy.testing as npt
import pytest

from distreg import (
    Bag,
    BaseKernelSpec,
    embed_dist,
    embed_inner,
    embedding_error_curve,
    embedding_gram,
)
from distreg.embedding import (
    bag_inner_matrix,
    bag_self_inners,
    embed_sq_dist,
    stack_bags,
)

GAUSS = BaseKernelSpec("gaussian", 1.0, 1)


def _random_bag(rng, dim, max_size=9):
    return Bag(rng.standard_normal((int(rng.integers(1, max_size)), dim)))


class TestBag:
    def test_one_dimensional_input_becomes_column(self):
        bag = Bag([1.0, 2.0, 3.0])
        assert bag.points.shape == (3, 1)
        assert bag.size == 3 and bag.dim == 1

    def test_points_are_float64_contiguous_readonly(self):
        bag = Bag(np.arange(6, dtype=np.int32).reshape(3, 2))
        assert bag.points.dtype == np.float64
        assert bag.points.flags["C_CONTIGUOUS"]
        with pytest.raises(ValueError):
            bag.points[0, 0] = 5.0

    def test_rejects_empty_and_nonfinite(self):
        with pytest.raises(ValueError, match="nonempty"):
            Bag(np.zeros((0, 2)))
        with pytest.raises(ValueError, match="finite"):
            Bag([np.nan])
        with pytest.raises(ValueError, match="finite"):
            Bag([[1.0, np.inf]])


def test_singleton_inner_is_base_kernel_value():
    # <delta_a, delta_b> = k(a, b); with a=0, b=1, h=1 that is e^-1
    got = embed_inner(Bag([0.0]), Bag([1.0]), GAUSS)
    npt.assert_allclose(got, math.exp(-1.0), rtol=1e-15)


def test_inner_hand_double_sum():
    # bags {0} and {0, 1}: (1 + e^-1)/2
    got = embed_inner(Bag([0.0]), Bag([0.0, 1.0]), GAUSS)
    npt.assert_allclose(got, 0.6839397205857212, rtol=1e-15)


def test_inner_matches_independent_gram_route():
    rng = np.random.default_rng(2)
    for family in ("gaussian", "laplacian"):
        for dim in (1, 2, 5):
            base = BaseKernelSpec(family, 0.8, dim)
            for _ in range(10):
                A = _random_bag(rng, dim)
                B = _random_bag(rng, dim)
                two_route = float(embedding_gram(A, B, base).matrix.mean())
                npt.assert_allclose(
                    embed_inner(A, B, base), two_route, rtol=1e-13, atol=1e-15
                )


def test_inner_is_exactly_symmetric():
    rng = np.random.default_rng(17)
    base = BaseKernelSpec("laplacian", 1.2, 3)
    for _ in range(25):
        A = _random_bag(rng, 3)
        B = _random_bag(rng, 3)
        assert embed_inner(A, B, base) == embed_inner(B, A, base)


def test_dimension_mismatch_raises():
    with pytest.raises(ValueError, match="dimensions differ"):
        embed_inner(Bag([[0.0, 0.0]]), Bag([0.0]), GAUSS)
    base3 = BaseKernelSpec("gaussian", 1.0, 3)
    with pytest.raises(ValueError, match="kernel dimension"):
        embed_inner(Bag([0.0]), Bag([0.0]), base3)


def test_distance_of_bag_with_itself_is_exactly_zero():
    rng = np.random.default_rng(8)
    A = Bag(rng.standard_normal((7, 1)))
    assert embed_sq_dist(A, A, GAUSS) == 0.0
    assert embed_dist(A, Bag(A.points.copy()), GAUSS) == 0.0


def test_singleton_distance_hand_value():
    # ||mu_a - mu_b||^2 = 2 - 2 k(a, b) for singletons
    a, b = Bag([0.0]), Bag([1.0])
    expected = 2.0 - 2.0 * math.exp(-1.0)
    npt.assert_allclose(embed_sq_dist(a, b, GAUSS), expected, rtol=1e-14)
    npt.assert_allclose(embed_dist(a, b, GAUSS), math.sqrt(expected), rtol=1e-14)


def test_distance_nonnegative_and_symmetric():
    rng = np.random.default_rng(21)
    base = BaseKernelSpec("gaussian", 0.4, 2)
    for _ in range(20):
        A = _random_bag(rng, 2)
        B = _random_bag(rng, 2)
        d_ab = embed_dist(A, B, base)
        assert d_ab >= 0.0
        assert d_ab == embed_dist(B, A, base)


def test_distance_triangle_inequality():
    rng = np.random.default_rng(29)
    base = BaseKernelSpec("laplacian", 0.9, 2)
    for _ in range(15):
        A, B, C = (_random_bag(rng, 2) for _ in range(3))
        assert embed_dist(A, C, base) <= (
            embed_dist(A, B, base) + embed_dist(B, C, base) + 1e-12
        )


def test_stack_bags_offsets():
    bags = [Bag([0.0]), Bag([1.0, 2.0, 3.0]), Bag([4.0, 5.0])]
    pts, starts = stack_bags(bags)
    npt.assert_array_equal(starts, [0, 1, 4, 6])
    npt.assert_array_equal(pts[:, 0], [0, 1, 2, 3, 4, 5])
    with pytest.raises(ValueError, match="at least one"):
        stack_bags([])
    with pytest.raises(ValueError, match="inconsistent"):
        stack_bags([Bag([0.0]), Bag([[0.0, 1.0]])])


def test_bag_inner_matrix_symmetric_case():
    rng = np.random.default_rng(4)
    base = BaseKernelSpec("gaussian", 0.7, 2)
    bags = [_random_bag(rng, 2) for _ in range(6)]
    m = bag_inner_matrix(bags, base)
    npt.assert_array_equal(m, m.T)  # exact, not approximate
    for i in range(6):
        for j in range(6):
            npt.assert_allclose(
                m[i, j], embed_inner(bags[i], bags[j], base), rtol=1e-13
            )


def test_bag_inner_matrix_cross_case():
    rng = np.random.default_rng(6)
    base = BaseKernelSpec("laplacian", 1.0, 3)
    left = [_random_bag(rng, 3) for _ in range(4)]
    right = [_random_bag(rng, 3) for _ in range(5)]
    cross = bag_inner_matrix(left, base, right)
    assert cross.shape == (4, 5)
    npt.assert_allclose(cross, bag_inner_matrix(right, base, left).T, rtol=1e-13)
    with pytest.raises(ValueError, match="kernel dimension"):
        bag_inner_matrix(left, BaseKernelSpec("gaussian", 1.0, 2), right)


def test_bag_self_inners_match_matrix_diagonal():
    rng = np.random.default_rng(10)
    base = BaseKernelSpec("gaussian", 0.5, 2)
    bags = [_random_bag(rng, 2) for _ in range(5)]
    npt.assert_allclose(
        bag_self_inners(bags, base),
        np.diag(bag_inner_matrix(bags, base)),
        rtol=1e-13,
    )


# ---------------------------------------------------------------------------
# error curve


def test_error_curve_is_zero_for_point_mass():
    """Every bag from a point mass has the same embedding, so the distance
    to the reference is exactly zero at every bag size."""

    def sampler(rng, count):
        return np.full((count, 1), 0.25)

    curve = embedding_error_curve(sampler, GAUSS, [2, 4, 8], trials=3, reference_d=128)
    assert [d for d, _ in curve] == [2, 4, 8]
    assert all(err == 0.0 for _, err in curve)


def test_error_curve_shrinks_with_bag_size():
    base = BaseKernelSpec("gaussian", 0.5, 1)

    def sampler(rng, count):
        return rng.standard_normal((count, 1))

    curve = embedding_error_curve(
        sampler, base, [8, 16, 32, 64], trials=40, reference_d=1024, seed=0
    )
    errs = [e for _, e in curve]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    # one doubling should cut the error by roughly 1/sqrt(2)
    ratios = [b / a for a, b in zip(errs, errs[1:])]
    assert all(0.5 < rho < 0.95 for rho in ratios)


def test_error_curve_deterministic():
    def sampler(rng, count):
        return rng.uniform(size=(count, 1))

    a = embedding_error_curve(sampler, GAUSS, [4, 8], trials=5, reference_d=256, seed=3)
    b = embedding_error_curve(sampler, GAUSS, [4, 8], trials=5, reference_d=256, seed=3)
    assert a == b


def test_error_curve_validation():
    def sampler(rng, count):
        return np.zeros((count, 1))

    with pytest.raises(ValueError, match="reference_d"):
        embedding_error_curve(sampler, GAUSS, [8], trials=1, reference_d=64)
    with pytest.raises(ValueError, match="positive"):
        embedding_error_curve(sampler, GAUSS, [0], trials=1, reference_d=128)
    with pytest.raises(ValueError, match="trials"):
        embedding_error_curve(sampler, GAUSS, [4], trials=0, reference_d=64)

    def bad_sampler(rng, count):
        return np.zeros((count, 2))

    with pytest.raises(ValueError, match="shape"):
        embedding_error_curve(bad_sampler, GAUSS, [4], trials=1, reference_d=64)
