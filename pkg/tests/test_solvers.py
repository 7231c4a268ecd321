"""Test cases for the solver registry and its cost model."""

import unittest

import numpy as np

from cavitymf.tasks.acbmf import acbmf_init
from cavitymf.tasks.cbmf import cbmf_init
from cavitymf.tasks.core import SolverConfig, UsageError
from cavitymf.tasks.datagen import SyntheticConfig, generate
from cavitymf.tasks.solvers import (SOLVERS, check_config, cost_table, get_solver,
                                    memory_slots, operations_per_sweep, solve)


class TestRegistry(unittest.TestCase):

    def test_tags(self):

        self.assertEqual(sorted(SOLVERS), ["acbmf", "als", "cbmf", "sgd"])

    def test_unknown_tag(self):

        with self.assertRaisesRegex(UsageError, "acbmf, als, cbmf, sgd"):
            get_solver("nmf")

    def test_cavity_solvers_need_positive_lambda(self):

        config = SolverConfig(rank=2, lam=0.0)

        for tag in ("als", "sgd"):
            check_config(tag, config)

        for tag in ("cbmf", "acbmf"):
            with self.assertRaisesRegex(UsageError, tag + " needs lambda > 0"):
                check_config(tag, config)

        with self.assertRaises(UsageError):
            check_config("nmf", SolverConfig(rank=2))

    def test_every_solver_runs(self):

        observed = generate(SyntheticConfig(n_rows=15, n_cols=15, rank=2, c=6,
                                            seed=3)).observed
        config = SolverConfig(rank=2, lam=0.1, max_sweeps=3, convergence_tol=0.0)

        for tag in SOLVERS:
            factors, records = solve(tag, observed, config)
            self.assertEqual(len(records), 3, msg=tag)
            self.assertEqual(records[0].algorithm, tag)
            self.assertEqual(factors.U.shape, (15, 2))


class TestCosts(unittest.TestCase):

    def test_memory_matches_allocated_state(self):

        observed = generate(SyntheticConfig(n_rows=30, n_cols=40, rank=3, c=6,
                                            seed=1)).observed
        n, m, omega = observed.n_rows, observed.n_cols, observed.n_entries

        cbmf = cbmf_init(observed, None, lam=0.1, seed=1, rank=3)
        acbmf = acbmf_init(observed, None, lam=0.1, seed=1, rank=3)

        self.assertEqual(memory_slots("cbmf", n, m, omega, 3), cbmf.edge_slot_count())
        self.assertEqual(memory_slots("acbmf", n, m, omega, 3), acbmf.slot_count())

    def test_acbmf_is_cheaper_than_cbmf_at_high_degree(self):

        # c = |Omega| / M grows while N and M stay fixed
        for omega in (5000, 50000):
            self.assertLess(memory_slots("acbmf", 1000, 1000, omega, 10),
                            memory_slots("cbmf", 1000, 1000, omega, 10))

    def test_operations_scale(self):

        self.assertEqual(operations_per_sweep("cbmf", 10, 20, 100, 4), 400)
        self.assertEqual(operations_per_sweep("als", 10, 20, 100, 4),
                         100 * 16 + 30 * 64)

        ratio = (operations_per_sweep("als", 10, 20, 100, 8) /
                 operations_per_sweep("acbmf", 10, 20, 100, 8))
        self.assertGreater(ratio, 8)

    def test_cost_table(self):

        table = cost_table(100, 200, 3000, 5)

        self.assertEqual(list(table.columns), ["solver", "operations", "memory_slots"])
        self.assertEqual(sorted(table["solver"]), sorted(SOLVERS))
        np.testing.assert_array_equal(
            table.set_index("solver").loc["sgd", ["operations", "memory_slots"]].tolist(),
            [15000, 1500 + 3000])

        with self.assertRaises(UsageError):
            memory_slots("nmf", 1, 1, 1, 1)


if __name__ == "__main__":
    unittest.main()
