import itertools

import numpy as np
import pytest

from ermlab import cluster, learners
from ermlab.errors import DomainError, SizeError


def blobs(centers, per, spread=0.3, seed=0):
    rng = np.random.default_rng(seed)
    centers = np.asarray(centers, dtype=float)
    pts = np.concatenate(
        [c + spread * rng.standard_normal((per, centers.shape[1]))
         for c in centers])
    return pts


def brute_force_best_error(x, k):
    """Exhaustive minimum of the clustering error over all assignments."""
    m = x.shape[0]
    best = np.inf
    best_assign = None
    for assign in itertools.product(range(k), repeat=m):
        assign = np.array(assign)
        means = np.zeros((k, x.shape[1]))
        for c in range(k):
            mask = assign == c
            if mask.any():
                means[c] = x[mask].mean(axis=0)
            else:
                means[c] = 1e9  # unused cluster parked far away
        err = cluster.clustering_error(x, means, assign)
        if err < best:
            best, best_assign = err, assign
    return best, best_assign


class TestKmeans:
    def test_k1_is_centroid_and_total_variance(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((30, 3))
        result = cluster.kmeans(x, 1, seed=0)
        np.testing.assert_allclose(result.means[0], x.mean(axis=0), atol=1e-12)
        total_var = float(((x - x.mean(axis=0)) ** 2).sum(axis=1).mean())
        assert result.error == pytest.approx(total_var)

    def test_two_pairs_with_given_means_converge_immediately(self):
        x = np.array([[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]])
        init = np.array([[0.0, 0.5], [10.0, 0.5]])
        result = cluster.kmeans(x, 2, init=init)
        np.testing.assert_array_equal(result.assignments, [0, 0, 1, 1])
        # exhaustive oracle over the 2^4 assignment space
        best, best_assign = brute_force_best_error(x, 2)
        assert result.error == pytest.approx(best)
        assert result.error == pytest.approx(0.25)  # within-pair variance
        # the first loop pass already leaves the error unchanged
        assert result.iterations <= 2

    def test_equidistant_point_takes_lowest_index(self):
        x = np.array([[0.0], [-2.0], [2.0]])
        init = np.array([[-2.0], [2.0]])
        result = cluster.kmeans(x, 2, init=init)
        assert result.assignments[0] == 0

    def test_error_strictly_decreases_then_fixes(self):
        for seed in range(20):
            x = blobs([[0, 0], [4, 0], [0, 4]], per=15, spread=0.8, seed=seed)
            result = cluster.kmeans(x, 3, seed=seed, eps=0.0)
            diffs = -np.diff(result.error_trace)
            assert np.all(diffs[:-1] > 0.0)
            assert diffs[-1] <= 0.0 + 1e-15
            # one extra pass changes no assignment (fixed point)
            again = cluster.kmeans(x, 3, init=result.means, eps=0.0)
            np.testing.assert_array_equal(again.assignments, result.assignments)

    def test_point_order_invariance_without_ties(self):
        x = blobs([[0, 0], [5, 5]], per=10, seed=3)
        a = cluster.kmeans(x, 2, init=np.array([[0.0, 0.0], [5.0, 5.0]]))
        perm = np.random.default_rng(4).permutation(x.shape[0])
        b = cluster.kmeans(x[perm], 2, init=np.array([[0.0, 0.0], [5.0, 5.0]]))
        np.testing.assert_allclose(np.sort(a.means, axis=0),
                                   np.sort(b.means, axis=0), atol=1e-12)

    def test_k_larger_than_m(self):
        with pytest.raises(SizeError):
            cluster.kmeans(np.zeros((3, 2)), 4)

    def test_error_consistent_with_definition(self):
        x = blobs([[0, 0], [3, 3]], per=8, seed=5)
        result = cluster.kmeans(x, 2, seed=1)
        recomputed = cluster.clustering_error(x, result.means,
                                              result.assignments)
        assert abs(result.error - recomputed) < 1e-10


class TestMultiRestart:
    def test_single_restart_equals_seeded_run(self):
        x = blobs([[0, 0], [4, 4]], per=10, seed=6)
        multi = cluster.kmeans_multi_restart(x, 2, restarts=1, seed=7)
        single = cluster.kmeans(x, 2, seed=cluster._child_seed(7, 0))
        np.testing.assert_array_equal(multi.assignments, single.assignments)
        assert multi.error == single.error

    def test_restarts_never_hurt(self):
        x = blobs([[0, 0], [2.5, 0], [5, 0]], per=8, spread=0.4, seed=8)
        # an adversarial init traps a single run in a local minimum
        bad_init = np.array([[0.0, 0.0], [0.1, 0.1], [5.0, 0.0]])
        trapped = cluster.kmeans(x, 3, init=bad_init)
        multi = cluster.kmeans_multi_restart(x, 3, restarts=20, seed=9)
        assert multi.error <= trapped.error

    def test_three_blobs_recovered_vs_brute_force(self):
        x = blobs([[0, 0], [6, 0], [0, 6]], per=3, spread=0.2, seed=10)
        result = cluster.kmeans_multi_restart(x, 3, restarts=20, seed=11)
        best, best_assign = brute_force_best_error(x, 3)
        assert result.error == pytest.approx(best, rel=1e-10)
        # identical partition up to a cluster relabelling
        groups_got = {frozenset(np.nonzero(result.assignments == c)[0])
                      for c in range(3)}
        groups_want = {frozenset(np.nonzero(best_assign == c)[0])
                       for c in range(3)}
        assert groups_got == groups_want


class TestElbow:
    def test_k_equals_m_reaches_zero(self):
        x = blobs([[0, 0]], per=6, seed=12)
        pairs = cluster.elbow_sweep(x, k_max=6, restarts=3, seed=0)
        assert pairs[-1][1] == pytest.approx(0.0, abs=1e-20)

    def test_k1_entry_is_total_variance(self):
        rng = np.random.default_rng(13)
        x = rng.standard_normal((12, 2))
        pairs = cluster.elbow_sweep(x, k_max=3, restarts=2, seed=1)
        total_var = float(((x - x.mean(axis=0)) ** 2).sum(axis=1).mean())
        assert pairs[0] == (1, pytest.approx(total_var))

    def test_nonincreasing_and_elbow_shape(self):
        x = blobs([[0, 0], [8, 0], [0, 8]], per=15, spread=0.5, seed=14)
        pairs = cluster.elbow_sweep(x, k_max=6, restarts=5, seed=2)
        errors = [e for _, e in pairs]
        assert all(b <= a + 1e-12 for a, b in zip(errors, errors[1:]))
        drop_2_to_3 = errors[1] - errors[2]
        drop_3_to_4 = errors[2] - errors[3]
        assert drop_2_to_3 > 5.0 * drop_3_to_4


class TestGmmEm:
    def test_single_component_matches_gaussian_ml(self):
        rng = np.random.default_rng(15)
        x = rng.standard_normal((50, 2)) @ np.array([[1.0, 0.4], [0.0, 0.8]])
        result = cluster.gmm_em(x, 1, seed=0)
        mu, cov = learners.gaussian_ml(x)
        np.testing.assert_allclose(result.params.means[0], mu, atol=1e-9)
        np.testing.assert_allclose(result.params.covariances[0], cov, atol=1e-6)
        assert result.params.probabilities[0] == pytest.approx(1.0)
        np.testing.assert_allclose(result.degrees, 1.0)

    def test_midpoint_between_mirror_clusters(self):
        rng = np.random.default_rng(16)
        left = np.array([-3.0, 0.0]) + 0.5 * rng.standard_normal((40, 2))
        mirrored = np.vstack([left, -left, [[0.0, 0.0]]])
        init = np.array([[-3.0, 0.0], [3.0, 0.0]])
        result = cluster.gmm_em(mirrored, 2, init=init, max_iters=50)
        mid = result.degrees[-1]
        np.testing.assert_allclose(mid, [0.5, 0.5], atol=1e-6)

    def test_degrees_are_probability_vectors(self):
        x = blobs([[0, 0], [4, 4]], per=25, seed=17)
        result = cluster.gmm_em(x, 3, seed=3)
        assert np.all(result.degrees >= 0.0)
        np.testing.assert_allclose(result.degrees.sum(axis=1), 1.0, atol=1e-10)
        assert result.params.probabilities.sum() == pytest.approx(1.0, abs=1e-10)

    def test_nll_nonincreasing(self):
        for seed in range(10):
            x = blobs([[0, 0], [3, 1]], per=30, spread=0.7, seed=seed)
            result = cluster.gmm_em(x, 2, seed=seed, max_iters=60)
            diffs = np.diff(result.neg_log_likelihood_trace)
            assert np.all(diffs <= 1e-9)

    def test_recovers_known_mixture(self):
        rng = np.random.default_rng(18)
        m = 10_000
        means_true = np.array([[3.0, 0.0], [-3.0, 0.0]])
        comp = rng.integers(0, 2, size=m)
        x = means_true[comp] + rng.standard_normal((m, 2))
        result = cluster.gmm_em(x, 2, seed=4)
        got = result.params.means
        scale = np.linalg.norm(means_true[0])
        direct = max(np.linalg.norm(got[i] - means_true[i]) for i in (0, 1))
        swapped = max(np.linalg.norm(got[1 - i] - means_true[i]) for i in (0, 1))
        assert min(direct, swapped) <= 0.05 * scale

    def test_covariance_collapse_is_survived(self):
        # duplicated points make a component covariance singular
        x = np.vstack([np.zeros((10, 2)), np.ones((10, 2)) * 4.0])
        result = cluster.gmm_em(x, 2, seed=5, max_iters=30)
        assert np.all(np.isfinite(result.neg_log_likelihood_trace))
        assert np.all(np.isfinite(result.params.covariances))


class TestHardLimit:
    def test_tiny_variance_matches_kmeans(self):
        for seed in range(10):
            x = blobs([[0, 0], [5, 0], [0, 5]], per=12, spread=0.6, seed=seed)
            km = cluster.kmeans(x, 3, seed=seed)
            em = cluster.gmm_hard_limit_check(x, 3, sigma_sq=1e-9, seed=seed)
            np.testing.assert_array_equal(em.assignments, km.assignments)

    def test_huge_variance_gives_uniform_degrees(self):
        x = blobs([[0, 0], [5, 0]], per=10, seed=19)
        means = cluster._init_means(x, 2, "sample-points", 0)
        d2 = ((x[:, None, :] - means[None, :, :]) ** 2).sum(axis=2)
        log_joint = np.log(np.full(2, 0.5))[None, :] - d2 / (2.0 * 1e12)
        degrees, _ = cluster._degrees_from_log(log_joint)
        np.testing.assert_allclose(degrees, 0.5, atol=1e-10)

    def test_k1_assigns_everything(self):
        x = blobs([[1, 1]], per=8, seed=20)
        result = cluster.gmm_hard_limit_check(x, 1, sigma_sq=1e-6)
        assert np.all(result.assignments == 0)

    def test_requires_positive_variance(self):
        with pytest.raises(DomainError):
            cluster.gmm_hard_limit_check(np.zeros((4, 2)), 2, sigma_sq=0.0)
