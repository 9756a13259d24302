"""Soft-DTW forward/backward against explicit path-sum oracles."""

import math

import numpy as np
import pytest

import oracles
from warpalign import alignment, softdtw
from warpalign.errors import InvalidInputError


def random_D(rng, n, m, lo=0.1, hi=3.0):
    return rng.uniform(lo, hi, size=(n, m))


class TestSoftMin:
    def test_singleton_is_identity(self):
        assert softdtw.soft_min([2.5], 0.1) == 2.5

    def test_below_hard_min(self, rng):
        vals = rng.uniform(0, 5, size=3)
        assert softdtw.soft_min(vals, 0.5) <= vals.min()

    def test_approaches_hard_min_as_gamma_shrinks(self):
        vals = [1.0, 1.5, 3.0]
        assert softdtw.soft_min(vals, 1e-9) == pytest.approx(1.0, abs=1e-7)

    def test_equal_values(self):
        # soft-min of k copies of v is v - gamma * log(k)
        got = softdtw.soft_min([2.0, 2.0, 2.0], 0.5)
        assert got == pytest.approx(2.0 - 0.5 * math.log(3), abs=1e-12)

    def test_infinite_entries_drop_out(self):
        assert softdtw.soft_min([math.inf, 1.0], 0.5) == pytest.approx(1.0, abs=1e-12)

    def test_gamma_must_be_positive(self):
        with pytest.raises(InvalidInputError):
            softdtw.soft_min([1.0, 2.0], 0.0)

    def test_empty_rejected(self):
        with pytest.raises(InvalidInputError):
            softdtw.soft_min([], 1.0)


class TestForward:
    @pytest.mark.parametrize("gamma", [0.05, 0.5, 2.0])
    def test_matches_path_sum_oracle(self, rng, gamma):
        for _ in range(25):
            n, m = rng.integers(1, 5, size=2)
            D = random_D(rng, n, m)
            cost, _ = softdtw.softdtw_cost(D, gamma)
            assert cost == pytest.approx(oracles.brute_softdtw_cost(D, gamma), abs=1e-8)

    def test_single_cell(self):
        cost, tables = softdtw.softdtw_cost(np.array([[1.25]]), 0.3)
        assert cost == 1.25
        assert tables.forward[0, 0] == 1.25

    def test_below_hard_cost(self, rng):
        # The soft minimum lower-bounds the hard minimum everywhere.
        for _ in range(10):
            D = random_D(rng, 4, 4)
            soft, _ = softdtw.softdtw_cost(D, 0.5)
            assert soft <= alignment.dtw_cost(D) + 1e-12

    def test_gamma_limit_bound(self, rng):
        # |soft - hard| <= gamma * log(#paths)
        for _ in range(10):
            n, m = rng.integers(1, 5, size=2)
            D = random_D(rng, n, m)
            n_paths = len(oracles.all_paths(n, m))
            for gamma in (0.05, 0.5, 2.0):
                soft, _ = softdtw.softdtw_cost(D, gamma)
                assert abs(soft - alignment.dtw_cost(D)) <= gamma * math.log(n_paths) + 1e-12

    def test_rejects_nonpositive_gamma(self):
        with pytest.raises(InvalidInputError):
            softdtw.softdtw_cost(np.ones((2, 2)), -1.0)


class TestGradWrtDistance:
    def test_matches_gibbs_expectation(self, rng):
        for gamma in (0.05, 0.5, 2.0):
            for _ in range(10):
                n, m = rng.integers(1, 5, size=2)
                D = random_D(rng, n, m)
                _, tables = softdtw.softdtw_cost(D, gamma)
                E = softdtw.softdtw_grad_wrt_distance(tables, D)
                assert np.allclose(E, oracles.brute_gibbs_expectation(D, gamma), atol=1e-8)

    def test_matches_finite_differences(self):
        # 20 independent problems; gradient-vector relative error within
        # 1e-5. Entrywise comparison is meaningless here: far-off cells
        # carry Gibbs weights around 1e-10, below what central
        # differences can resolve.
        for seed in range(20):
            rng = np.random.default_rng(seed)
            n, m = rng.integers(2, 6, size=2)
            D = random_D(rng, n, m)
            gamma = float(rng.uniform(0.1, 1.0))
            _, tables = softdtw.softdtw_cost(D, gamma)
            E = softdtw.softdtw_grad_wrt_distance(tables, D)
            fd = oracles.central_difference(
                lambda M: softdtw.softdtw_cost(M, gamma)[0], D.copy(), h=1e-6
            )
            assert np.linalg.norm(E - fd) / np.linalg.norm(fd) < 1e-5

    def test_corners_are_one(self, rng):
        # Every path passes through both corners.
        D = random_D(rng, 4, 5)
        _, tables = softdtw.softdtw_cost(D, 0.4)
        E = softdtw.softdtw_grad_wrt_distance(tables, D)
        assert E[0, 0] == pytest.approx(1.0, abs=1e-12)
        assert E[-1, -1] == pytest.approx(1.0, abs=1e-12)
        assert np.all(E >= -1e-12) and np.all(E <= 1.0 + 1e-12)

    def test_tables_cached_on_object(self, rng):
        D = random_D(rng, 3, 3)
        _, tables = softdtw.softdtw_cost(D, 0.2)
        E = softdtw.softdtw_grad_wrt_distance(tables, D)
        assert tables.grad_d is E

    def test_rejects_foreign_tables(self, rng):
        D1 = random_D(rng, 3, 3)
        D2 = D1 + 1.0
        _, tables = softdtw.softdtw_cost(D1, 0.2)
        with pytest.raises(InvalidInputError):
            softdtw.softdtw_grad_wrt_distance(tables, D2)

    def test_rejects_shape_mismatch(self, rng):
        D = random_D(rng, 3, 3)
        _, tables = softdtw.softdtw_cost(D, 0.2)
        with pytest.raises(InvalidInputError):
            softdtw.softdtw_grad_wrt_distance(tables, random_D(rng, 4, 3))


class TestGradWrtEmbeddings:
    def test_matches_finite_differences(self):
        for seed in range(5):
            rng = np.random.default_rng(seed)
            z1 = rng.normal(size=(4, 3))
            z2 = rng.normal(size=(5, 3))
            gamma = 0.3

            def cost_of(z1_, z2_):
                D = alignment.distance_matrix(z1_, z2_)
                return softdtw.softdtw_cost(D, gamma)[0]

            D = alignment.distance_matrix(z1, z2)
            _, tables = softdtw.softdtw_cost(D, gamma)
            grad_d = softdtw.softdtw_grad_wrt_distance(tables, D)
            g1, g2, n_zero = softdtw.softdtw_grad_wrt_embeddings(z1, z2, grad_d)
            assert n_zero == 0
            fd1 = oracles.central_difference(lambda z: cost_of(z, z2), z1.copy())
            fd2 = oracles.central_difference(lambda z: cost_of(z1, z), z2.copy())
            assert np.allclose(g1, fd1, atol=1e-7)
            assert np.allclose(g2, fd2, atol=1e-7)

    def test_zero_distance_counted_not_propagated(self):
        z = np.array([[1.0, 0.0], [0.0, 1.0]])
        D = alignment.distance_matrix(z, z)
        _, tables = softdtw.softdtw_cost(D, 0.5)
        grad_d = softdtw.softdtw_grad_wrt_distance(tables, D)
        g1, g2, n_zero = softdtw.softdtw_grad_wrt_embeddings(z, z, grad_d)
        # The two diagonal cells have zero distance and nonzero weight.
        assert n_zero == 2
        assert np.all(np.isfinite(g1)) and np.all(np.isfinite(g2))

    def test_rejects_mismatched_grad(self, rng):
        with pytest.raises(InvalidInputError):
            softdtw.softdtw_grad_wrt_embeddings(
                rng.normal(size=(3, 2)), rng.normal(size=(4, 2)), np.zeros((3, 3))
            )
