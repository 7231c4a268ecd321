"""Cavity messages on cycle-free instances are exact: the solvers are
compared with the dense references in tests/oracle.py."""

import os
import sys
import unittest

import numpy as np

from cavitymf.tasks.acbmf import acbmf_solve
from cavitymf.tasks.cbmf import (cbmf_half_sweep_u, cbmf_half_sweep_v, cbmf_init,
                                 cbmf_solve)
from cavitymf.tasks.core import SolverConfig, UsageError, build_observed
from cavitymf.tasks.solvers import SOLVERS, solve

sys.path.insert(0, os.path.abspath(os.path.dirname(__file__)))

from oracle import is_tree, oracle_cavity_messages, oracle_global_min  # noqa: E402


# rows 0-2, cols 0-2; a path 0-0-1-1-2 plus the separate edge (2, 2)
PATH = [(0, 0, 1.0), (1, 0, -0.5), (1, 1, 2.0), (2, 2, 0.7)]

# one entry per row and per column
MATCHING = [(0, 1, 1.5), (1, 0, -0.8), (2, 2, 0.4)]


class TestTreeCheck(unittest.TestCase):

    def test_rank_one_path_is_a_tree(self):

        self.assertTrue(is_tree(build_observed(PATH, 3, 3), 1))

    def test_rank_one_cycle(self):

        square = [(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]
        self.assertFalse(is_tree(build_observed(square, 2, 2), 1))

    def test_rank_two_needs_a_matching(self):

        self.assertTrue(is_tree(build_observed(MATCHING, 3, 3), 2))
        self.assertFalse(is_tree(build_observed(PATH, 3, 3), 2))


class TestCavityMessages(unittest.TestCase):

    def check_against_oracle(self, triples, n_rows, n_cols, V, lam, inner=1):

        observed = build_observed(triples, n_rows, n_cols)
        exact = oracle_cavity_messages(observed, lam, V)

        state = cbmf_init(observed, V, lam)
        cbmf_half_sweep_u(state, observed, lam, inner_iterations=inner)

        np.testing.assert_allclose(state.a_hat, exact["a_hat"], atol=1e-12)
        np.testing.assert_allclose(state.b_hat, exact["b_hat"], atol=1e-12)
        np.testing.assert_allclose(state.factors.U, exact["U"], atol=1e-12)

    def test_single_edge(self):

        exact = oracle_cavity_messages(build_observed([(0, 0, 3.0)], 1, 1), 1.0,
                                       np.array([[1.0]]))

        self.assertAlmostEqual(exact["a_hat"][0, 0], 1.0)
        self.assertAlmostEqual(exact["b_hat"][0, 0], 3.0)
        self.assertAlmostEqual(exact["U"][0, 0], 1.5)

        self.check_against_oracle([(0, 0, 3.0)], 1, 1, np.array([[1.0]]), 1.0)

    def test_rank_one_path(self):

        V = np.array([[0.8], [-1.2], [0.5]])
        self.check_against_oracle(PATH, 3, 3, V, 0.3)
        self.check_against_oracle(PATH, 3, 3, V, 0.3, inner=4)

    def test_rank_two_matching(self):

        V = np.array([[0.8, 0.1], [-1.2, 0.9], [0.5, -0.4]])
        self.check_against_oracle(MATCHING, 3, 3, V, 0.5)
        self.check_against_oracle(MATCHING, 3, 3, V, 0.5, inner=3)

    def test_degree_one_variable_gets_the_whole_row(self):

        # with one observation the cavity of u_mu,r is the regularizer alone
        V = np.array([[2.0]])
        exact = oracle_cavity_messages(build_observed([(0, 0, 1.0)], 1, 1), 0.5, V)

        self.assertAlmostEqual(exact["a_hat"][0, 0], 4.0)
        self.assertAlmostEqual(exact["b_hat"][0, 0], 2.0)

    def test_cycle_is_rejected(self):

        with self.assertRaises(UsageError):
            oracle_cavity_messages(build_observed(PATH, 3, 3), 0.5, np.ones((3, 2)))

    def test_size_caps(self):

        big = [(i, i, 1.0) for i in range(5)]
        with self.assertRaises(UsageError):
            oracle_cavity_messages(build_observed(big, 5, 5), 0.5, np.ones((5, 1)))


def transpose(observed):
    '''The same observations with rows and columns swapped.'''

    return build_observed(zip(observed.cols, observed.rows, observed.values),
                          observed.n_cols, observed.n_rows)


def random_trees(count, n_rows=4, n_cols=4):
    '''`count` seeded rank-one cycle-free instances.'''

    trees = []

    for seed in range(1000):

        rng = np.random.default_rng(seed)
        cells = rng.choice(n_rows * n_cols, size=rng.integers(2, 7), replace=False)
        # values bounded away from lambda so the fits converge quickly
        values = rng.choice([-1.0, 1.0], size=len(cells)) * rng.uniform(1.0, 2.0, size=len(cells))
        triples = [(int(x) // n_cols, int(x) % n_cols, float(y)) for x, y in zip(cells, values)]
        observed = build_observed(triples, n_rows, n_cols)

        if is_tree(observed, 1):
            trees.append((seed, observed))
        if len(trees) == count:
            return trees

    raise AssertionError("found only %i trees" % len(trees))


class TestTreeExactness(unittest.TestCase):

    def test_v_half_sweep_matches_the_transposed_oracle(self):

        observed = build_observed(PATH, 3, 3)
        lam = 0.3

        state = cbmf_init(observed, np.array([[0.8], [-1.2], [0.5]]), lam)
        cbmf_half_sweep_u(state, observed, lam)
        cbmf_half_sweep_v(state, observed, lam)

        flipped = transpose(observed)
        exact = oracle_cavity_messages(flipped, lam, state.factors.U)

        # edge e of the flipped instance is (col, row) of the original
        order = {(int(row), int(col)): e
                 for e, (col, row) in enumerate(zip(flipped.rows, flipped.cols))}
        index = [order[(int(row), int(col))]
                 for row, col in zip(observed.rows, observed.cols)]

        np.testing.assert_allclose(state.factors.V, exact["U"], atol=1e-12)
        np.testing.assert_allclose(state.c_hat, exact["a_hat"][index], atol=1e-12)
        np.testing.assert_allclose(state.d_hat, exact["b_hat"][index], atol=1e-12)

    def test_converged_cbmf_on_random_trees(self):

        lam = 0.1

        # the two-edge path first, then seeded random forests
        cases = [(-1, build_observed([(0, 0, 1.0), (0, 1, 2.0)], 1, 2))]
        cases += random_trees(20)

        for seed, observed in cases:

            config = SolverConfig(rank=1, lam=lam, max_sweeps=2000,
                                  convergence_tol=1e-14, seed=max(seed, 0))
            factors, _ = cbmf_solve(observed, config)

            with self.subTest(seed=seed):
                np.testing.assert_allclose(
                    factors.U, oracle_cavity_messages(observed, lam, factors.V)["U"],
                    atol=1e-10)
                np.testing.assert_allclose(
                    factors.V,
                    oracle_cavity_messages(transpose(observed), lam, factors.U)["U"],
                    atol=1e-10)

    def test_acbmf_agrees_with_cbmf_on_trees(self):

        for triples, rank in ((PATH, 1), (MATCHING, 2)):

            observed = build_observed(triples, 3, 3)
            config = SolverConfig(rank=rank, lam=0.2, max_sweeps=20000,
                                  convergence_tol=1e-14, seed=5)

            exact, _ = cbmf_solve(observed, config)
            approx, _ = acbmf_solve(observed, config)

            rows, cols = observed.rows, observed.cols
            with self.subTest(rank=rank):
                np.testing.assert_allclose(
                    np.einsum("er,er->e", approx.U[rows], approx.V[cols]),
                    np.einsum("er,er->e", exact.U[rows], exact.V[cols]),
                    atol=1e-8)


class TestGlobalMin(unittest.TestCase):

    def test_exact_factorization(self):

        u = np.array([1.0, -2.0])
        v = np.array([0.5, 3.0])
        observed = build_observed([(i, j, u[i] * v[j]) for i in range(2)
                                   for j in range(2)], 2, 2)

        _, value = oracle_global_min(observed, 0.0, 1, restarts=20)
        self.assertAlmostEqual(value, 0.0, places=8)

    def test_large_regularization(self):

        observed = build_observed(PATH, 3, 3)
        factors, _ = oracle_global_min(observed, 100.0, 1, restarts=10)

        np.testing.assert_allclose(factors.U, 0.0, atol=1e-6)
        np.testing.assert_allclose(factors.V, 0.0, atol=1e-6)

    def test_restart_count_is_enough(self):

        observed = build_observed(PATH, 3, 3)

        _, first = oracle_global_min(observed, 0.1, 1, restarts=100)
        _, second = oracle_global_min(observed, 0.1, 1, restarts=200, seed=1)

        self.assertAlmostEqual(first, second, places=9)

    def test_no_solver_beats_the_global_minimum(self):

        observed = build_observed(PATH, 3, 3)
        lam = 0.1

        _, best = oracle_global_min(observed, lam, 1, restarts=100)

        config = SolverConfig(rank=1, lam=lam, max_sweeps=2000, convergence_tol=1e-12)
        for tag in sorted(SOLVERS):
            factors, records = solve(tag, observed, config)
            self.assertLessEqual(best, records[-1].objective + 1e-8, msg=tag)


if __name__ == "__main__":
    unittest.main()
