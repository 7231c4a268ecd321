'''
datagen.py
==========

Overview
--------

Synthetic low-rank instances for the reconstruction experiments. The ground
truth is

    Y0 = U0 V0^T + Z

with standard Gaussian U0 (N x R) and V0 (M x R) and i.i.d. Gaussian noise Z
of variance `noise_var`. Every one of the N x M positions is observed
independently with probability c / N, so c is the mean number of observed
entries per column.

Only U0, V0 and the seed are kept. Row mu of Z is drawn from its own
generator seeded with (seed, 1, mu), so :func:`truth_blocks` can stream Y0
block by block for the full-matrix error without holding N x M values, and
the observed values are read from the same rows.

Instances are written to a directory by :func:`export_instance`:

* observed.tsv - row, col, value (0-based, tab separated, no header)
* truth.txt - U0 and V0 in the factor file format
* instance.yml - the generating configuration

Code
----

'''

import logging
import os
from dataclasses import asdict, dataclass

import numpy as np
import pandas as pd
import yaml

from cavitymf.tasks.core import (DataError, FactorPair, UsageError,
                                 load_factors, observed_from_arrays,
                                 save_factors)

L = logging.getLogger(__name__)

NOISE_STREAM = 1
BLOCK_ROWS = 256


@dataclass
class SyntheticConfig:
    n_rows: int
    n_cols: int
    rank: int
    c: float
    noise_var: float = 0.09
    seed: int = 1

    def __post_init__(self):

        if self.n_rows < 1 or self.n_cols < 1:
            raise UsageError("n_rows and n_cols must be at least 1")
        if self.rank < 1:
            raise UsageError("rank must be at least 1")
        if not 0 < self.c <= self.n_rows:
            raise UsageError("c must lie in (0, n_rows], got %s" % self.c)
        if self.noise_var < 0:
            raise UsageError("noise_var must be nonnegative")


class SyntheticInstance():
    '''
    A generated instance: the configuration, the true factors and the
    observed entries. The noise is regenerated from the seed on demand.
    '''

    def __init__(self, config, truth, observed):
        self.config = config
        self.truth = truth
        self.observed = observed

    @property
    def U0(self):
        return self.truth.U

    @property
    def V0(self):
        return self.truth.V

    def noise_rows(self, start, stop):
        '''Rows start..stop-1 of the noise matrix Z.'''

        cfg = self.config
        scale = np.sqrt(cfg.noise_var)

        return np.vstack([
            np.random.default_rng([cfg.seed, NOISE_STREAM, mu]).normal(
                0.0, scale, size=cfg.n_cols)
            for mu in range(start, stop)]).reshape(stop - start, cfg.n_cols)


def identifiability_threshold(config):
    '''R (N + M): the fewest observations from which a rank-R matrix can be determined.'''

    return config.rank * (config.n_rows + config.n_cols)


def truth_blocks(instance, block_rows=BLOCK_ROWS):
    '''
    Yield (row slice, dense block of Y0) over all rows of the instance.
    '''

    if block_rows < 1:
        raise UsageError("block_rows must be at least 1")

    n_rows = instance.config.n_rows

    for start in range(0, n_rows, block_rows):
        stop = min(start + block_rows, n_rows)
        block = instance.U0[start:stop] @ instance.V0.T + instance.noise_rows(start, stop)
        yield slice(start, stop), block


def _sample_mask(rng, config):
    '''Per column a Binomial(N, c/N) count of distinct rows.'''

    counts = rng.binomial(config.n_rows, config.c / config.n_rows,
                          size=config.n_cols)

    rows = [rng.choice(config.n_rows, size=k, replace=False) for k in counts]
    cols = np.repeat(np.arange(config.n_cols), counts)

    rows = np.concatenate(rows).astype(np.int64) if len(rows) else np.zeros(0, np.int64)

    return rows, cols


def generate(config):
    '''
    Draw a :class:`SyntheticInstance`. Identical configurations give
    identical instances.
    '''

    threshold = identifiability_threshold(config)
    expected = config.c * config.n_cols

    if expected < threshold:
        L.warning("expected number of observations %.0f is below the "
                  "identifiability threshold R(N+M) = %i", expected, threshold)

    rng = np.random.default_rng([config.seed, 0])

    U0 = rng.standard_normal((config.n_rows, config.rank))
    V0 = rng.standard_normal((config.n_cols, config.rank))
    rows, cols = _sample_mask(rng, config)

    instance = SyntheticInstance(config, FactorPair(U0, V0), None)

    # read observed values row block by row block from the streamed truth
    order = np.argsort(rows, kind="stable")
    sorted_rows = rows[order]
    values = np.empty(len(rows))

    for block, y0 in truth_blocks(instance):
        lo, hi = np.searchsorted(sorted_rows, [block.start, block.stop])
        ids = order[lo:hi]
        values[ids] = y0[rows[ids] - block.start, cols[ids]]

    instance.observed = observed_from_arrays(rows, cols, values,
                                             config.n_rows, config.n_cols)

    L.info("generated %i x %i rank %i instance with %i observations (c=%g, seed=%i)",
           config.n_rows, config.n_cols, config.rank,
           instance.observed.n_entries, config.c, config.seed)

    return instance


def export_instance(instance, outdir):

    os.makedirs(outdir, exist_ok=True)

    obs = instance.observed
    pd.DataFrame({"row": obs.rows, "col": obs.cols, "value": obs.values}).to_csv(
        os.path.join(outdir, "observed.tsv"), sep="\t", header=False,
        index=False, float_format="%.17g")

    save_factors(instance.truth, os.path.join(outdir, "truth.txt"))

    meta = asdict(instance.config)
    meta["n_observed"] = obs.n_entries

    with open(os.path.join(outdir, "instance.yml"), "w") as out:
        yaml.safe_dump(meta, out, default_flow_style=False)


def load_instance(outdir):
    '''
    Read an instance written by :func:`export_instance`.

    Raises:
        DataError: if the files disagree with each other.
    '''

    with open(os.path.join(outdir, "instance.yml")) as inf:
        meta = yaml.safe_load(inf)

    n_observed = meta.pop("n_observed", None)

    try:
        config = SyntheticConfig(**meta)
    except TypeError as err:
        raise DataError("instance.yml in %s is malformed: %s" % (outdir, err))

    truth = load_factors(os.path.join(outdir, "truth.txt"))

    if (truth.n_rows, truth.n_cols, truth.rank) != (config.n_rows, config.n_cols, config.rank):
        raise DataError("truth.txt in %s does not match instance.yml" % outdir)

    path = os.path.join(outdir, "observed.tsv")
    if os.path.getsize(path) == 0:
        table = pd.DataFrame({"row": [], "col": [], "value": []})
    else:
        table = pd.read_csv(path, sep="\t", header=None,
                            names=["row", "col", "value"],
                            dtype={"row": np.int64, "col": np.int64,
                                   "value": np.float64})

    observed = observed_from_arrays(table["row"].to_numpy(np.int64),
                                    table["col"].to_numpy(np.int64),
                                    table["value"].to_numpy(np.float64),
                                    config.n_rows, config.n_cols)

    if n_observed is not None and observed.n_entries != n_observed:
        raise DataError("observed.tsv in %s holds %i entries, instance.yml says %i" %
                        (outdir, observed.n_entries, n_observed))

    return SyntheticInstance(config, truth, observed)
