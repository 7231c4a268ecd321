"""Test cases for synthetic instance generation and export."""

import os
import shutil
import tempfile
import unittest

import numpy as np
import yaml

from cavitymf.tasks.core import DataError, UsageError
from cavitymf.tasks.datagen import (SyntheticConfig, export_instance, generate,
                                    identifiability_threshold, load_instance,
                                    truth_blocks)


class TestConfig(unittest.TestCase):

    def test_invalid_values(self):

        for kwargs in ({"c": 0.0}, {"c": 11.0}, {"rank": 0}, {"noise_var": -1.0},
                       {"n_rows": 0}):
            arguments = dict(n_rows=10, n_cols=10, rank=2, c=3.0)
            arguments.update(kwargs)
            with self.assertRaises(UsageError):
                SyntheticConfig(**arguments)

    def test_threshold(self):

        self.assertEqual(identifiability_threshold(
            SyntheticConfig(n_rows=500, n_cols=1000, rank=10, c=30)), 15000)


class TestGenerate(unittest.TestCase):

    def test_full_noiseless_observation(self):

        instance = generate(SyntheticConfig(n_rows=6, n_cols=5, rank=2, c=6,
                                            noise_var=0.0, seed=3))
        observed = instance.observed

        self.assertEqual(observed.n_entries, 30)

        expected = instance.U0 @ instance.V0.T
        np.testing.assert_allclose(observed.values,
                                   expected[observed.rows, observed.cols])

    def test_same_seed_same_instance(self):

        config = SyntheticConfig(n_rows=40, n_cols=30, rank=3, c=5, seed=9)
        a = generate(config)
        b = generate(config)

        np.testing.assert_array_equal(a.U0, b.U0)
        np.testing.assert_array_equal(a.observed.rows, b.observed.rows)
        np.testing.assert_array_equal(a.observed.values, b.observed.values)

        c = generate(SyntheticConfig(n_rows=40, n_cols=30, rank=3, c=5, seed=10))
        self.assertFalse(np.array_equal(a.U0, c.U0))

    def test_observed_values_come_from_the_truth(self):

        instance = generate(SyntheticConfig(n_rows=50, n_cols=20, rank=2, c=10, seed=4))
        dense = np.vstack([block for _, block in truth_blocks(instance, block_rows=7)])

        obs = instance.observed
        np.testing.assert_allclose(obs.values, dense[obs.rows, obs.cols])

    def test_truth_does_not_depend_on_block_size(self):

        instance = generate(SyntheticConfig(n_rows=23, n_cols=11, rank=2, c=4, seed=2))

        small = np.vstack([b for _, b in truth_blocks(instance, block_rows=3)])
        large = np.vstack([b for _, b in truth_blocks(instance, block_rows=100)])

        np.testing.assert_array_equal(small, large)

    def test_noise_variance(self):

        instance = generate(SyntheticConfig(n_rows=200, n_cols=200, rank=2, c=5,
                                            noise_var=0.09, seed=6))
        noise = instance.noise_rows(0, 200)

        self.assertAlmostEqual(float(noise.var()), 0.09, delta=0.005)

    def test_mean_column_degree(self):

        instance = generate(SyntheticConfig(n_rows=200, n_cols=500, rank=2, c=8, seed=1))
        degrees = instance.observed.col_degrees()

        # binomial mean c with standard error sqrt(c / M)
        self.assertAlmostEqual(float(degrees.mean()), 8.0, delta=0.6)
        self.assertTrue((degrees <= 200).all())

    def test_below_threshold_warns(self):

        with self.assertLogs("cavitymf.tasks.datagen", level="WARNING"):
            generate(SyntheticConfig(n_rows=50, n_cols=50, rank=5, c=2, seed=1))


class TestExport(unittest.TestCase):

    def setUp(self):
        self.work_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.work_dir)

    def test_export_and_load(self):

        instance = generate(SyntheticConfig(n_rows=20, n_cols=15, rank=2, c=4, seed=8))
        export_instance(instance, self.work_dir)

        for name in ("observed.tsv", "truth.txt", "instance.yml"):
            self.assertTrue(os.path.exists(os.path.join(self.work_dir, name)))

        with open(os.path.join(self.work_dir, "instance.yml")) as inf:
            meta = yaml.safe_load(inf)
        self.assertEqual(meta["n_observed"], instance.observed.n_entries)

        loaded = load_instance(self.work_dir)

        self.assertEqual(loaded.config, instance.config)
        np.testing.assert_array_equal(loaded.U0, instance.U0)
        np.testing.assert_array_equal(loaded.observed.values, instance.observed.values)
        np.testing.assert_array_equal(loaded.noise_rows(0, 20), instance.noise_rows(0, 20))

    def test_mismatched_files(self):

        instance = generate(SyntheticConfig(n_rows=20, n_cols=15, rank=2, c=4, seed=8))
        export_instance(instance, self.work_dir)

        path = os.path.join(self.work_dir, "instance.yml")
        with open(path) as inf:
            meta = yaml.safe_load(inf)
        meta["n_observed"] = instance.observed.n_entries + 5
        with open(path, "w") as outf:
            yaml.safe_dump(meta, outf)

        with self.assertRaises(DataError):
            load_instance(self.work_dir)


if __name__ == "__main__":
    unittest.main()
