"""Kernel layer: scalar kernel, Gram assembly, median bandwidth."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from condiv.kernels import (
    KernelConfig,
    gaussian_kernel,
    gram,
    median_bandwidth,
    product_kernel_check,
)

import naive


def test_kernel_zero_distance_is_one():
    u = np.array([0.3, -1.2, 4.0])
    assert gaussian_kernel(u, u, 1.0) == 1.0
    assert gaussian_kernel(u, u, 0.01) == 1.0


def test_kernel_distance_sqrt2_sigma():
    # ||u - v|| = sigma * sqrt(2)  ->  exp(-2 sigma^2 / (2 sigma^2)) = e^-1
    sigma = 1.7
    u = np.array([0.0])
    v = np.array([sigma * math.sqrt(2.0)])
    assert gaussian_kernel(u, v, sigma) == pytest.approx(math.exp(-1.0), abs=1e-15)


def test_kernel_hand_value():
    # ||(0,0) - (3,4)||^2 = 25, sigma = 5  ->  exp(-25 / 50)
    assert gaussian_kernel([0.0, 0.0], [3.0, 4.0], 5.0) == pytest.approx(
        math.exp(-0.5), abs=1e-15
    )


def test_kernel_dimension_mismatch():
    with pytest.raises(ValueError):
        gaussian_kernel([0.0, 1.0], [0.0], 1.0)


def test_kernel_bad_width():
    with pytest.raises(ValueError):
        gaussian_kernel([0.0], [1.0], 0.0)
    with pytest.raises(ValueError):
        gaussian_kernel([0.0], [1.0], -2.0)


@given(
    st.lists(st.floats(-3, 3), min_size=1, max_size=5),
    st.floats(0.5, 50.0),
)
def test_kernel_bounds(vals, width):
    # ranges kept small enough that the exponential stays representable;
    # genuinely disjoint supports underflow to 0 by design and are handled
    # by the estimators' floor checks instead
    u = np.array(vals)
    v = u + 1.0
    k = gaussian_kernel(u, v, width)
    assert 0.0 < k <= 1.0
    assert gaussian_kernel(u, u, width) == 1.0


def test_gram_single_point():
    g = gram([[2.0]], [[2.0]], 1.0)
    assert g.shape == (1, 1) and g[0, 0] == 1.0


def test_gram_matches_naive_loop():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(4, 2))
    b = rng.normal(size=(3, 2))
    g = gram(a, b, 0.9)
    assert g.shape == (4, 3)
    for i in range(4):
        for j in range(3):
            assert g[i, j] == pytest.approx(
                naive.kappa(a[i], b[j], 0.9), abs=1e-14
            )


def test_gram_self_symmetric_unit_diagonal():
    rng = np.random.default_rng(4)
    a = rng.normal(size=(7, 3))
    g = gram(a, a, 1.3)
    # exact, not approximate: both claims follow from the kernel form
    assert np.array_equal(g, g.T)
    assert np.array_equal(np.diag(g), np.ones(7))


def test_gram_self_positive_semidefinite():
    rng = np.random.default_rng(5)
    for _ in range(5):
        a = rng.normal(size=(6, 2))
        g = gram(a, a, 0.7)
        assert np.linalg.eigvalsh(g).min() >= -1e-8


def test_gram_shape_errors():
    with pytest.raises(ValueError):
        gram(np.empty((0, 2)), np.ones((3, 2)), 1.0)
    with pytest.raises(ValueError):
        gram(np.ones((3, 2)), np.ones((3, 3)), 1.0)


def test_median_bandwidth_two_points():
    assert median_bandwidth([[0.0], [1.0]]) == 1.0


def test_median_bandwidth_three_points():
    # distances {1, 2, 3} -> median 2
    assert median_bandwidth([[0.0], [1.0], [3.0]]) == 2.0


def test_median_bandwidth_excludes_zero_distances():
    # duplicated point contributes zero distances which must be ignored
    assert median_bandwidth([[0.0], [0.0], [1.0]]) == 1.0


def test_median_bandwidth_degenerate():
    with pytest.raises(ValueError):
        median_bandwidth([[1.0], [1.0], [1.0]])
    with pytest.raises(ValueError):
        median_bandwidth([[1.0]])


def test_median_bandwidth_permutation_invariant():
    rng = np.random.default_rng(6)
    x = rng.normal(size=(20, 3))
    perm = rng.permutation(20)
    assert median_bandwidth(x) == median_bandwidth(x[perm])


def test_product_kernel_trivial():
    joint, marginal = product_kernel_check([1.0], [1.0], [2.0], [2.0], 1.0)
    assert joint == 1.0 and marginal == 1.0


def test_product_kernel_hand_value():
    # squared distances 1 and 4 -> both sides exp(-5/2)
    joint, marginal = product_kernel_check(0.0, 1.0, 0.0, 2.0, 1.0)
    assert joint == pytest.approx(math.exp(-2.5), abs=1e-15)
    assert marginal == pytest.approx(math.exp(-2.5), abs=1e-15)


def test_product_kernel_random():
    rng = np.random.default_rng(8)
    for _ in range(20):
        xi, xj, yi, yj = rng.normal(size=(4, 3))
        joint, marginal = product_kernel_check(xi, xj, yi, yj, 0.8)
        assert joint == pytest.approx(marginal, abs=1e-14)


def test_kernel_config_validation():
    assert KernelConfig(1.5).width == 1.5
    with pytest.raises(ValueError):
        KernelConfig(0.0)
    with pytest.raises(ValueError):
        KernelConfig(1.0, selection_mode="automatic")
