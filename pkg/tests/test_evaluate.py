"""Test cases for the error metrics and the benchmark protocols."""

import os
import shutil
import tempfile
import unittest

import numpy as np
import pandas as pd

from cavitymf.tasks.core import (FactorPair, SolverConfig, UsageError,
                                 build_observed)
from cavitymf.tasks.datagen import SyntheticConfig, generate
from cavitymf.tasks.evaluate import (FOLD_SUMMARY_COLUMNS,
                                     RECONSTRUCTION_SUMMARY_COLUMNS,
                                     derived_seed, movielens_protocol,
                                     reconstruction_protocol, rmse, rrmse,
                                     summarise_folds, summarise_reconstruction,
                                     summarise_traces, write_result)


def reconstruction_runs():
    '''Two samples at c=5, one at c=10, two restarts each.'''

    rows = [("als", 5, 0, 0, 0.10, False), ("als", 5, 0, 1, 0.40, False),
            ("als", 5, 1, 0, 0.30, False), ("als", 5, 1, 1, np.nan, True),
            ("als", 10, 0, 0, 0.05, False), ("als", 10, 0, 1, 0.12, False)]

    return pd.DataFrame(rows, columns=["solver", "c", "sample", "restart",
                                       "rrmse", "failed"])


class TestMetrics(unittest.TestCase):

    def test_rmse(self):

        factors = FactorPair(np.array([[1.0], [2.0]]), np.array([[1.0]]))
        holdout = build_observed([(0, 0, 2.0), (1, 0, 2.0)], 2, 1)

        self.assertAlmostEqual(rmse(factors, holdout), np.sqrt(0.5))

    def test_rmse_of_exact_predictions(self):

        factors = FactorPair(np.array([[1.0, 2.0]]), np.array([[3.0, 4.0]]))
        self.assertEqual(rmse(factors, build_observed([(0, 0, 11.0)], 1, 1)), 0.0)

    def test_empty_holdout(self):

        factors = FactorPair(np.ones((1, 1)), np.ones((1, 1)))
        with self.assertRaises(UsageError):
            rmse(factors, build_observed([], 1, 1))

    def test_rrmse_of_the_truth(self):

        instance = generate(SyntheticConfig(n_rows=30, n_cols=20, rank=2, c=5,
                                            noise_var=0.0, seed=1))
        self.assertAlmostEqual(rrmse(instance.truth, instance), 0.0)

    def test_rrmse_of_zero_factors(self):

        instance = generate(SyntheticConfig(n_rows=30, n_cols=20, rank=2, c=5, seed=1))
        zero = FactorPair(np.zeros((30, 2)), np.zeros((20, 2)))

        self.assertAlmostEqual(rrmse(zero, instance), 1.0)

    def test_rrmse_streams_over_blocks(self):

        instance = generate(SyntheticConfig(n_rows=37, n_cols=20, rank=2, c=5, seed=3))
        guess = FactorPair(instance.U0 * 0.9, instance.V0)

        self.assertAlmostEqual(rrmse(guess, instance, block_rows=4),
                               rrmse(guess, instance, block_rows=1000), places=12)

    def test_rrmse_matches_rmse_when_fully_observed(self):

        instance = generate(SyntheticConfig(n_rows=10, n_cols=8, rank=2, c=10, seed=2))
        guess = FactorPair(instance.U0 * 1.1, instance.V0)
        norm = np.sqrt(np.mean(instance.observed.values ** 2))

        self.assertAlmostEqual(rrmse(guess, instance),
                               rmse(guess, instance.observed) / norm, places=10)

    def test_derived_seed(self):

        self.assertEqual(derived_seed(1, 2), derived_seed(1, 2))
        self.assertNotEqual(derived_seed(1, 2), derived_seed(2, 1))


class TestSummaries(unittest.TestCase):

    def test_reconstruction_summary(self):

        summary = summarise_reconstruction(reconstruction_runs(), 0.15)

        self.assertEqual(list(summary.columns), RECONSTRUCTION_SUMMARY_COLUMNS)

        low = summary[summary["c"] == 5].iloc[0]
        self.assertEqual(low["samples"], 2)
        self.assertEqual(low["successes"], 1)
        self.assertAlmostEqual(low["reconstruction_rate"], 0.5)
        self.assertAlmostEqual(low["mean_min_rrmse"], 0.2)
        self.assertEqual(low["failed_restarts"], 1)

        high = summary[summary["c"] == 10].iloc[0]
        self.assertAlmostEqual(high["reconstruction_rate"], 1.0)

    def test_rate_grows_with_threshold(self):

        runs = reconstruction_runs()
        rates = [summarise_reconstruction(runs, t)["reconstruction_rate"].sum()
                 for t in (0.01, 0.15, 0.35, 1.0)]

        self.assertEqual(rates, sorted(rates))

    def test_row_order_does_not_matter(self):

        runs = reconstruction_runs()
        shuffled = runs.sample(frac=1.0, random_state=3)

        pd.testing.assert_frame_equal(summarise_reconstruction(runs),
                                      summarise_reconstruction(shuffled))

    def test_fold_summary(self):

        runs = pd.DataFrame({"solver": ["als", "als", "cbmf", "cbmf"],
                             "fold": [1, 0, 0, 1],
                             "test_rmse": [0.9, 0.8, 0.7, 0.9],
                             "train_rmse": [0.5, 0.5, 0.4, 0.4],
                             "sweeps": [10, 20, 30, 40],
                             "seconds": [1.0, 1.0, 2.0, 2.0]})

        summary = summarise_folds(runs)

        self.assertEqual(list(summary.columns), FOLD_SUMMARY_COLUMNS)
        self.assertEqual(summary["fold"].tolist(), ["0", "1", "mean", "0", "1", "mean"])

        means = summary[summary["fold"] == "mean"].set_index("solver")
        self.assertAlmostEqual(means.loc["als", "test_rmse"], 0.85)
        self.assertAlmostEqual(means.loc["cbmf", "sweeps"], 35.0)

    def test_trace_summary(self):

        traces = pd.DataFrame({"algorithm": ["als"] * 4,
                               "sweep": [1, 2, 1, 2],
                               "objective": [4.0, 2.0, 6.0, 4.0],
                               "train_rmse": [1.0, 0.5, 1.0, 0.5],
                               "test_error": [1.2, 1.0, 1.4, 1.0],
                               "seconds": [0.1, 0.2, 0.1, 0.2]})

        curves = summarise_traces(traces)

        self.assertEqual(curves["runs"].tolist(), [2, 2])
        np.testing.assert_allclose(curves["mean_test_error"], [1.3, 1.0])
        np.testing.assert_allclose(curves["mean_objective"], [5.0, 3.0])

    def test_empty_traces(self):

        self.assertEqual(len(summarise_traces(pd.DataFrame())), 0)


class TestProtocols(unittest.TestCase):

    def setUp(self):
        self.work_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.work_dir)

    def test_reconstruction_protocol(self):

        synthetic = SyntheticConfig(n_rows=30, n_cols=30, rank=2, c=30,
                                    noise_var=0.0, seed=4)
        config = SolverConfig(rank=2, lam=1e-3, max_sweeps=100, convergence_tol=1e-8)

        result = reconstruction_protocol([30], samples=2, restarts=2,
                                         solvers=["als"], config=config,
                                         synthetic=synthetic)

        self.assertEqual(len(result.runs), 4)
        self.assertEqual(result.summary.iloc[0]["reconstruction_rate"], 1.0)
        self.assertTrue(set(["c", "sample", "restart", "algorithm"]) <=
                        set(result.traces.columns))

        # instances depend on the sample only, restarts on the instance
        seeds = result.runs.groupby("sample")["instance_seed"].nunique()
        self.assertTrue((seeds == 1).all())
        self.assertEqual(result.runs["seed"].nunique(), 4)

    def test_instances_are_shared_across_c(self):

        synthetic = SyntheticConfig(n_rows=20, n_cols=20, rank=2, c=5, seed=4)
        config = SolverConfig(rank=2, lam=0.1, max_sweeps=3)

        result = reconstruction_protocol([5, 10], samples=1, restarts=1,
                                         solvers="als", config=config,
                                         synthetic=synthetic)

        self.assertEqual(result.runs["instance_seed"].nunique(), 1)
        self.assertEqual(len(result.summary), 2)

    def test_worker_count_does_not_change_results(self):

        synthetic = SyntheticConfig(n_rows=20, n_cols=20, rank=2, c=5, seed=4)
        config = SolverConfig(rank=2, lam=0.1, max_sweeps=5, convergence_tol=0.0)

        serial = reconstruction_protocol([5, 8], 2, 1, ["als", "acbmf"], config,
                                         synthetic, threads=1)
        parallel = reconstruction_protocol([5, 8], 2, 1, ["als", "acbmf"], config,
                                           synthetic, threads=2)

        pd.testing.assert_frame_equal(serial.runs.drop(columns="seconds"),
                                      parallel.runs.drop(columns="seconds"))

    def test_unknown_solver(self):

        synthetic = SyntheticConfig(n_rows=20, n_cols=20, rank=2, c=5, seed=4)

        with self.assertRaises(UsageError):
            reconstruction_protocol([5], 1, 1, ["svd"], SolverConfig(rank=2), synthetic)

    def test_movielens_protocol(self):

        instance = generate(SyntheticConfig(n_rows=40, n_cols=30, rank=2, c=20, seed=5))
        obs = instance.observed
        records = pd.DataFrame({"user": obs.rows + 100, "item": obs.cols + 1,
                                "rating": obs.values, "timestamp": 0})

        config = SolverConfig(rank=2, lam=0.1, max_sweeps=20)
        result = movielens_protocol(records, 5, ["als", "cbmf"], config, seed=2)

        self.assertEqual(len(result.runs), 10)
        self.assertEqual((result.runs["n_train"] + result.runs["n_test"]).unique().tolist(),
                         [len(records)])
        self.assertEqual(len(result.summary), 12)
        self.assertFalse(result.runs["failed"].any())

        paths = write_result(result, self.work_dir, "folds")
        for path in paths.values():
            self.assertTrue(os.path.exists(path))

        summary = pd.read_csv(paths["summary"])
        self.assertEqual(list(summary.columns), FOLD_SUMMARY_COLUMNS)

    def test_selected_folds(self):

        records = pd.DataFrame({"user": [1, 1, 2, 2, 3, 3], "item": [1, 2, 1, 2, 1, 2],
                                "rating": [1.0, 2.0, 3.0, 4.0, 5.0, 1.0],
                                "timestamp": 0})

        result = movielens_protocol(records, 3, "als",
                                    SolverConfig(rank=1, lam=0.1, max_sweeps=3),
                                    only_folds=[1])
        self.assertEqual(result.runs["fold"].tolist(), [1])

        with self.assertRaises(UsageError):
            movielens_protocol(records, 3, "als", SolverConfig(rank=1), only_folds=[3])


if __name__ == "__main__":
    unittest.main()
