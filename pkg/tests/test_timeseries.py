"""Tests for Hankel embedding, series dissimilarity, and clustering."""

import numpy as np
import pytest

from condiv import (
    ClusterAssignment,
    TimeSeries,
    ar_collection,
    hankel_embed,
    kmedoids,
    load_ucr,
    median_bandwidth,
    nmi,
    pairwise_matrix,
    spectral_cluster,
    to_affinity,
    ts_dissimilarity,
)


def ar1(phi, length, seed, scale=1.0):
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(length + 100) * scale
    x = np.zeros(length + 100)
    for t in range(1, length + 100):
        x[t] = phi * x[t - 1] + noise[t]
    return x[100:]


def median_pair_widths(a, b, order):
    ha, hb = hankel_embed(a, order), hankel_embed(b, order)
    return (
        median_bandwidth(np.vstack([ha.inputs, hb.inputs])),
        median_bandwidth(np.vstack([ha.targets, hb.targets])),
    )


def partition_cost(D, labels, k):
    cost = 0.0
    for c in range(k):
        members = np.flatnonzero(labels == c)
        if members.size:
            cost += D[np.ix_(members, members)].sum(axis=0).min()
    return cost


class TestTimeSeries:
    def test_vector_coerced_to_column(self):
        ts = TimeSeries(np.arange(5.0))
        assert ts.values.shape == (5, 1)
        assert ts.length == 5 and ts.dim == 1

    def test_too_short_rejected(self):
        with pytest.raises(ValueError):
            TimeSeries(np.array([1.0]))

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            TimeSeries(np.array([1.0, np.nan, 2.0]))

    def test_label_kept(self):
        assert TimeSeries(np.arange(4.0), label=3).label == 3


class TestHankelEmbed:
    def test_univariate_hand_case(self):
        pair = hankel_embed(np.array([1.0, 2.0, 3.0, 4.0, 5.0]), order=2)
        assert np.array_equal(pair.inputs, [[1, 2], [2, 3], [3, 4]])
        assert np.array_equal(pair.targets, [[3], [4], [5]])
        assert pair.order == 2

    def test_multivariate_order_one(self):
        values = np.arange(12.0).reshape(6, 2)
        pair = hankel_embed(TimeSeries(values), order=1)
        assert np.array_equal(pair.inputs, values[:-1])
        assert np.array_equal(pair.targets, values[1:])

    def test_shapes(self):
        values = np.random.default_rng(0).normal(size=(100, 3))
        pair = hankel_embed(values, order=10)
        assert pair.inputs.shape == (90, 30)
        assert pair.targets.shape == (90, 3)

    def test_window_overlay_reconstructs_series(self):
        values = np.random.default_rng(1).normal(size=(30, 2))
        pair = hankel_embed(values, order=4)
        assert np.array_equal(pair.inputs[:, :2], values[:-4])
        assert np.array_equal(pair.targets, values[4:])

    def test_order_bounds(self):
        values = np.arange(5.0)
        for order in (0, 5, 6):
            with pytest.raises(ValueError):
                hankel_embed(values, order=order)


class TestTsDissimilarity:
    def test_same_series_gives_exact_zero(self):
        x = ar1(0.6, 120, seed=0)
        assert ts_dissimilarity(x, x, order=2, width_x=1.0, width_y=1.0) == 0.0

    def test_symmetry(self):
        a, b = ar1(0.6, 100, seed=1), ar1(-0.4, 100, seed=2)
        wx, wy = median_pair_widths(a, b, order=2)
        forward = ts_dissimilarity(a, b, order=2, width_x=wx, width_y=wy)
        backward = ts_dissimilarity(b, a, order=2, width_x=wx, width_y=wy)
        assert forward == pytest.approx(backward, abs=1e-12)

    def test_unequal_lengths_supported(self):
        a, b = ar1(0.5, 90, seed=3), ar1(0.5, 60, seed=4)
        wx, wy = median_pair_widths(a, b, order=3)
        assert np.isfinite(ts_dissimilarity(a, b, order=3, width_x=wx, width_y=wy))

    def test_same_process_closer_than_different_process(self):
        # two AR(1) realizations vs an AR(1) against white noise; the
        # same-process pair should be closer in at least 90% of repeats
        wins = 0
        for rep in range(20):
            base = 100 * rep
            a1 = ar1(0.6, 150, seed=base)
            a2 = ar1(0.6, 150, seed=base + 1)
            wn = np.random.default_rng(base + 2).standard_normal(150)
            wx, wy = median_pair_widths(a1, a2, order=2)
            same = ts_dissimilarity(a1, a2, order=2, width_x=wx, width_y=wy)
            wx, wy = median_pair_widths(a1, wn, order=2)
            cross = ts_dissimilarity(a1, wn, order=2, width_x=wx, width_y=wy)
            wins += int(same < cross)
        assert wins >= 18


class TestPairwiseMatrix:
    def test_identical_pair_gives_zero_matrix(self):
        x = ar1(0.5, 80, seed=0)
        D = pairwise_matrix([x, x.copy()], order=2)
        assert np.array_equal(D, np.zeros((2, 2)))

    def test_permutation_consistency(self):
        coll = [ar1(phi, 80, seed=i) for i, phi in enumerate((0.7, -0.5, 0.2, 0.9))]
        D = pairwise_matrix(coll, order=2)
        perm = [2, 0, 3, 1]
        D_perm = pairwise_matrix([coll[i] for i in perm], order=2)
        assert np.array_equal(D_perm, D[np.ix_(perm, perm)])

    def test_block_structure_of_families(self):
        coll = ar_collection(n_per_family=4, length=150, seed=0)
        labels = np.array([ts.label for ts in coll])
        D = pairwise_matrix(coll, order=2)
        within, between = [], []
        for i in range(len(coll)):
            for j in range(i + 1, len(coll)):
                (within if labels[i] == labels[j] else between).append(D[i, j])
        assert np.mean(within) < np.mean(between)

    def test_fixed_mode_needs_widths(self):
        coll = [ar1(0.5, 50, seed=0), ar1(0.5, 50, seed=1)]
        with pytest.raises(ValueError):
            pairwise_matrix(coll, order=2, bandwidth_mode="fixed")
        with pytest.raises(ValueError):
            pairwise_matrix(coll, order=2, bandwidth_mode="widest")
        with pytest.raises(ValueError):
            pairwise_matrix([coll[0]], order=2)

    def test_failed_pair_flagged_as_nan(self):
        near = TimeSeries(np.zeros(40) + np.linspace(0, 0.1, 40))
        far = TimeSeries(np.full(40, 1e4) + np.linspace(0, 0.1, 40))
        with pytest.warns(RuntimeWarning, match=r"pair \(0, 1\)"):
            D = pairwise_matrix([near, far], order=2,
                                widths=(0.5, 0.5), bandwidth_mode="fixed")
        assert np.isnan(D[0, 1]) and np.isnan(D[1, 0])
        assert D[0, 0] == 0.0


class TestToAffinity:
    def test_hand_values(self):
        D = np.array([[0.0, 2.0], [2.0, 0.0]])
        A = to_affinity(D, b=2.0)
        assert A[0, 0] == 1.0
        assert A[0, 1] == pytest.approx(np.exp(-1.0))

    def test_monotone_and_bounded(self):
        D = np.array([[0.0, 1.0, 3.0], [1.0, 0.0, 2.0], [3.0, 2.0, 0.0]])
        A = to_affinity(D, b=1.0)
        assert A[0, 1] > A[0, 2]
        assert np.all(A > 0.0) and np.all(A <= 1.0)

    def test_negative_dissimilarity_clipped(self):
        A = to_affinity(np.array([[0.0, -0.5], [-0.5, 0.0]]), b=1.0)
        assert A[0, 1] == 1.0

    def test_b_must_be_positive(self):
        with pytest.raises(ValueError):
            to_affinity(np.zeros((2, 2)), b=0.0)


class TestSpectralCluster:
    def test_two_disconnected_blocks(self):
        A = np.zeros((8, 8))
        A[:4, :4] = 1.0
        A[4:, 4:] = 1.0
        asg = spectral_cluster(A, k=2, seed=0)
        assert len(set(asg.labels[:4])) == 1
        assert len(set(asg.labels[4:])) == 1
        assert asg.labels[0] != asg.labels[4]

    def test_three_blocks_with_noise(self):
        rng = np.random.default_rng(0)
        truth = np.repeat([0, 1, 2], 8)
        A = np.where(truth[:, None] == truth[None, :], 1.0, 0.01)
        A += rng.uniform(0, 1e-3, A.shape)
        A = 0.5 * (A + A.T)
        np.fill_diagonal(A, 1.0)
        asg = spectral_cluster(A, k=3, seed=1)
        assert nmi(asg, truth) == pytest.approx(1.0)

    def test_deterministic_per_seed(self):
        rng = np.random.default_rng(2)
        A = rng.uniform(0.1, 1.0, (10, 10))
        A = 0.5 * (A + A.T)
        np.fill_diagonal(A, 1.0)
        first = spectral_cluster(A, k=3, seed=7)
        second = spectral_cluster(A, k=3, seed=7)
        assert np.array_equal(first.labels, second.labels)

    def test_input_validation(self):
        good = np.eye(4) + 0.1
        with pytest.raises(ValueError):
            spectral_cluster(good[:3], k=2)
        with pytest.raises(ValueError):
            spectral_cluster(np.triu(good), k=2)
        with pytest.raises(ValueError):
            spectral_cluster(good, k=1)
        with pytest.raises(ValueError):
            spectral_cluster(good, k=5)
        bad = good.copy()
        bad[0, 1] = bad[1, 0] = np.nan
        with pytest.raises(ValueError):
            spectral_cluster(bad, k=2)


class TestKmedoids:
    def planted(self, sizes, gap=1.0):
        truth = np.repeat(np.arange(len(sizes)), sizes)
        D = np.where(truth[:, None] == truth[None, :], 0.0, gap)
        np.fill_diagonal(D, 0.0)
        return D, truth

    def test_planted_three_blocks_recovered(self):
        D, truth = self.planted([5, 5, 5])
        asg = kmedoids(D, k=3, seed=0)
        assert nmi(asg, truth) == pytest.approx(1.0)

    def test_k_equals_n_puts_every_point_alone(self):
        rng = np.random.default_rng(3)
        pts = rng.normal(size=(6, 2))
        D = np.linalg.norm(pts[:, None] - pts[None, :], axis=-1)
        asg = kmedoids(D, k=6, seed=0)
        assert sorted(asg.labels) == list(range(6))
        assert partition_cost(D, asg.labels, 6) == 0.0

    def test_result_beats_random_medoid_partitions(self):
        rng = np.random.default_rng(4)
        pts = np.vstack([rng.normal(c, 0.3, size=(7, 2)) for c in (0.0, 3.0, 6.0)])
        D = np.linalg.norm(pts[:, None] - pts[None, :], axis=-1)
        asg = kmedoids(D, k=3, seed=5)
        cost = partition_cost(D, asg.labels, 3)
        for _ in range(50):
            medoids = rng.choice(len(pts), size=3, replace=False)
            random_cost = D[:, medoids].min(axis=1).sum()
            assert cost <= random_cost + 1e-12

    def test_deterministic_per_seed(self):
        rng = np.random.default_rng(6)
        D = rng.uniform(0.0, 1.0, (9, 9))
        D = 0.5 * (D + D.T)
        np.fill_diagonal(D, 0.0)
        a = kmedoids(D, k=3, seed=11)
        b = kmedoids(D, k=3, seed=11)
        assert np.array_equal(a.labels, b.labels)

    def test_k_bounds(self):
        D = np.zeros((4, 4))
        for k in (1, 5):
            with pytest.raises(ValueError):
                kmedoids(D, k=k)


class TestNmi:
    def test_identical_partitions(self):
        labels = np.array([0, 0, 1, 1, 2, 2])
        assert nmi(labels, labels) == pytest.approx(1.0)

    def test_relabeling_invariance(self):
        a = np.array([0, 0, 1, 1, 2, 2])
        b = np.array([2, 2, 0, 0, 1, 1])
        assert nmi(a, b) == pytest.approx(1.0)

    def test_independent_partitions_near_zero(self):
        rng = np.random.default_rng(0)
        scores = [
            nmi(rng.integers(0, 2, 1000), rng.integers(0, 2, 1000))
            for _ in range(5)
        ]
        assert np.mean(scores) < 0.05

    def test_single_cluster_edge_cases(self):
        assert nmi(np.zeros(5, dtype=int), np.full(5, 3)) == 1.0
        assert nmi(np.zeros(5, dtype=int), np.array([0, 0, 1, 1, 1])) == 0.0

    def test_accepts_assignment_objects(self):
        asg = ClusterAssignment(labels=np.array([0, 1, 0, 1]), k=2)
        assert nmi(asg, np.array([1, 0, 1, 0])) == pytest.approx(1.0)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            nmi(np.zeros(3, dtype=int), np.zeros(4, dtype=int))


class TestClusterAssignment:
    def test_label_range_checked(self):
        with pytest.raises(ValueError):
            ClusterAssignment(labels=np.array([0, 2]), k=2)
        with pytest.raises(ValueError):
            ClusterAssignment(labels=np.array([-1, 0]), k=2)


class TestLoadUcr:
    def test_comma_separated_line(self, tmp_path):
        f = tmp_path / "toy.csv"
        f.write_text("2,1.0,2.0,3.0\n1,4.0,5.0,6.0\n")
        series = load_ucr(f)
        assert len(series) == 2
        assert series[0].label == 2
        assert np.array_equal(series[0].values[:, 0], [1.0, 2.0, 3.0])

    def test_tab_separated_and_float_labels(self, tmp_path):
        f = tmp_path / "toy.tsv"
        f.write_text("1.0000000e+00\t0.5\t0.6\t0.7\n2.0000000e+00\t0.1\t0.2\t0.3\n")
        series = load_ucr(f)
        assert [ts.label for ts in series] == [1, 2]

    def test_ragged_row_names_line(self, tmp_path):
        f = tmp_path / "bad.csv"
        f.write_text("1,1.0,2.0,3.0\n1,1.0,2.0\n")
        with pytest.raises(ValueError, match=":2:"):
            load_ucr(f)

    def test_non_numeric_field_names_line(self, tmp_path):
        f = tmp_path / "bad.csv"
        f.write_text("1,1.0,2.0,3.0\n1,1.0,oops,3.0\n")
        with pytest.raises(ValueError, match=":2:"):
            load_ucr(f)

    def test_empty_file(self, tmp_path):
        f = tmp_path / "empty.csv"
        f.write_text("")
        with pytest.raises(ValueError, match="empty"):
            load_ucr(f)

    def test_too_few_fields(self, tmp_path):
        f = tmp_path / "short.csv"
        f.write_text("1,5.0\n")
        with pytest.raises(ValueError, match=":1:"):
            load_ucr(f)


class TestArCollection:
    def test_shapes_and_labels(self):
        coll = ar_collection(n_per_family=3, length=50, seed=0)
        assert len(coll) == 9
        assert [ts.label for ts in coll] == [0, 0, 0, 1, 1, 1, 2, 2, 2]
        assert all(ts.length == 50 for ts in coll)

    def test_deterministic(self):
        a = ar_collection(n_per_family=2, length=40, seed=5)
        b = ar_collection(n_per_family=2, length=40, seed=5)
        for x, y in zip(a, b):
            assert np.array_equal(x.values, y.values)

    def test_stationary_scale(self):
        coll = ar_collection(n_per_family=5, length=300, seed=1)
        assert max(np.abs(ts.values).max() for ts in coll) < 50.0


class TestClusteringPipeline:
    def test_families_recovered_end_to_end(self):
        coll = ar_collection(n_per_family=5, length=150, seed=2)
        truth = np.array([ts.label for ts in coll])
        D = pairwise_matrix(coll, order=2)
        best = max(
            nmi(spectral_cluster(to_affinity(D, b), k=3, seed=2), truth)
            for b in (0.1, 0.2, 1, 2, 10, 20)
        )
        assert best >= 0.9
        assert nmi(kmedoids(D, k=3, seed=2), truth) >= 0.9
