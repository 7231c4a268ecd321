'''
evaluate.py
===========

Overview
--------

Error metrics and the two benchmark protocols.

* :func:`rmse` - root mean square error over held-out entries
* :func:`rrmse` - relative Frobenius error against the full ground truth of
  a synthetic instance, summed over all N x M positions
* :func:`reconstruction_protocol` - for every mean column degree c,
  generate `samples` instances and run `restarts` seeded initialisations
  on each; an instance is reconstructed when its best restart reaches
  rRMSE <= threshold (0.15)
* :func:`movielens_protocol` - k-fold cross validation of the test RMSE on
  a rating table, keeping the per-sweep traces

Protocol jobs are independent and can be spread over worker processes;
results are collected in job order so the output does not depend on the
number of workers. A solver that diverges counts as a failed run.

Output tables
-------------

:func:`write_result` writes three CSV files per protocol run:

* ``<prefix>.summary.csv`` - reconstruction rates per (solver, c), or test
  RMSE per (solver, fold) with a ``mean`` row per solver
* ``<prefix>.runs.csv`` - one row per restart or fold
* ``<prefix>.traces.csv`` - the per-sweep trace of every run

Code
----

'''

import dataclasses
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import pandas as pd

from cavitymf.tasks.core import SolverError, UsageError, check_dimensions
from cavitymf.tasks.datagen import BLOCK_ROWS, generate, truth_blocks
from cavitymf.tasks.ingest import IndexMap, kfold_split, records_to_observed
from cavitymf.tasks.solvers import check_config, solve
from cavitymf.tasks.trace import TRACE_COLUMNS, traces_to_frame, train_rmse

L = logging.getLogger(__name__)

SUCCESS_THRESHOLD = 0.15

RECONSTRUCTION_RUN_COLUMNS = ["solver", "c", "sample", "restart", "instance_seed",
                              "seed", "n_observed", "rrmse", "sweeps", "seconds",
                              "failed"]

RECONSTRUCTION_SUMMARY_COLUMNS = ["solver", "c", "samples", "restarts", "successes",
                                  "reconstruction_rate", "mean_min_rrmse",
                                  "failed_restarts"]

FOLD_RUN_COLUMNS = ["solver", "fold", "n_train", "n_test", "train_rmse",
                    "test_rmse", "sweeps", "seconds", "failed"]

FOLD_SUMMARY_COLUMNS = ["solver", "fold", "test_rmse", "train_rmse", "sweeps",
                        "seconds"]

TRACE_SUMMARY_COLUMNS = ["algorithm", "sweep", "runs", "mean_test_error",
                         "mean_train_rmse", "mean_objective", "mean_seconds"]


@dataclasses.dataclass
class ProtocolResult:
    summary: pd.DataFrame
    runs: pd.DataFrame
    traces: pd.DataFrame


# --------------------------------- Metrics ---------------------------------- #

def rmse(factors, holdout):
    '''
    Root mean square error of `factors` on the entries of `holdout`, an
    ObservedMatrix sharing the factors' dimensions.

    Raises:
        UsageError: if the holdout is empty.
    '''

    if holdout.n_entries == 0:
        raise UsageError("cannot compute the RMSE of an empty holdout set")

    return train_rmse(factors, holdout)


def rrmse(factors, instance, block_rows=BLOCK_ROWS):
    '''
    sqrt(sum (y0 - u.v)^2) / sqrt(sum y0^2) over every position of the
    ground truth of `instance`.

    Raises:
        UsageError: if the ground truth is identically zero.
    '''

    check_dimensions(factors, instance.observed)

    err = 0.0
    norm = 0.0

    for block, y0 in truth_blocks(instance, block_rows):
        diff = y0 - factors.U[block] @ factors.V.T
        err += float(np.sum(diff ** 2))
        norm += float(np.sum(y0 ** 2))

    if norm == 0:
        raise UsageError("the ground truth matrix has zero norm")

    return math.sqrt(err) / math.sqrt(norm)


def derived_seed(*key):
    '''A 32-bit seed drawn from a SeedSequence over the integers `key`.'''

    return int(np.random.SeedSequence(list(key)).generate_state(1)[0])


def run_jobs(function, jobs, threads):

    if threads is None or threads <= 1 or len(jobs) <= 1:
        return [function(job) for job in jobs]

    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(function, jobs))


def _tag_traces(records, **columns):

    frame = traces_to_frame(records)
    for name, value in reversed(list(columns.items())):
        frame.insert(0, name, value)

    return frame


# ---------------------------- Reconstruction -------------------------------- #

def _reconstruction_job(job):
    '''Generate one instance and run every solver and restart on it.'''

    synthetic, solvers, config, c, sample, restarts = job

    instance = generate(synthetic)

    runs = []
    traces = []

    for solver in solvers:
        for restart in range(restarts):

            seed = derived_seed(config.seed, synthetic.seed, restart)
            run_config = dataclasses.replace(config, seed=seed)

            row = {"solver": solver, "c": c, "sample": sample,
                   "restart": restart, "instance_seed": synthetic.seed,
                   "seed": seed, "n_observed": instance.observed.n_entries}

            try:
                factors, records = solve(solver, instance.observed, run_config)
            except SolverError as err:
                L.warning("%s diverged on c=%g sample=%i restart=%i: %s",
                          solver, c, sample, restart, err)
                row.update(rrmse=np.nan, sweeps=0, seconds=np.nan, failed=True)
                runs.append(row)
                continue

            row.update(rrmse=rrmse(factors, instance), sweeps=len(records),
                       seconds=records[-1].seconds if records else 0.0,
                       failed=False)
            runs.append(row)

            traces.append(_tag_traces(records, c=c, sample=sample,
                                      restart=restart))

    L.info("c=%g sample=%i: done (%i observations)", c, sample,
           instance.observed.n_entries)

    return runs, traces


def reconstruction_protocol(c_values, samples, restarts, solvers, config,
                            synthetic, threshold=SUCCESS_THRESHOLD, threads=1):
    '''
    Reconstruction rates over a sweep of mean column degrees.

    Args:
        c_values: the mean numbers of observations per column
        samples: instances generated per c
        restarts: seeded initialisations per instance and solver
        solvers: a solver tag or a list of tags
        config: the SolverConfig; its seed is the root of the restart seeds
        synthetic: a SyntheticConfig giving N, M, R, the noise variance and
            the root seed of the instances (its c is replaced)
        threshold: the rRMSE at or below which a restart succeeds
        threads: number of worker processes

    Returns:
        ProtocolResult
    '''

    if isinstance(solvers, str):
        solvers = [solvers]

    for tag in solvers:
        check_config(tag, config)

    if samples < 1 or restarts < 1:
        raise UsageError("samples and restarts must be at least 1")

    jobs = []
    for c in c_values:
        for sample in range(samples):
            instance_config = dataclasses.replace(
                synthetic, c=c, seed=derived_seed(synthetic.seed, sample))
            jobs.append((instance_config, list(solvers), config, c, sample,
                         restarts))

    L.info("reconstruction protocol: %i instances x %i restarts x %i solvers",
           len(jobs), restarts, len(solvers))

    results = run_jobs(_reconstruction_job, jobs, threads)

    runs = pd.DataFrame([r for job_runs, _ in results for r in job_runs],
                        columns=RECONSTRUCTION_RUN_COLUMNS)

    trace_frames = [t for _, job_traces in results for t in job_traces]
    traces = (pd.concat(trace_frames, ignore_index=True) if trace_frames
              else pd.DataFrame(columns=["c", "sample", "restart"] + TRACE_COLUMNS))

    return ProtocolResult(summarise_reconstruction(runs, threshold), runs, traces)


def summarise_reconstruction(runs, threshold=SUCCESS_THRESHOLD):
    '''
    Reconstruction rate and mean best rRMSE per (solver, c).

    An instance succeeds when the smallest rRMSE over its non-failed
    restarts is at most `threshold`.
    '''

    rows = []

    for (solver, c), group in runs.groupby(["solver", "c"], sort=True):

        best = group.groupby("sample")["rrmse"].min()
        successes = int((best <= threshold).sum())

        rows.append({"solver": solver,
                     "c": c,
                     "samples": len(best),
                     "restarts": int(group["restart"].nunique()),
                     "successes": successes,
                     "reconstruction_rate": successes / len(best),
                     "mean_min_rrmse": float(best.mean()),
                     "failed_restarts": int(group["failed"].astype(bool).sum())})

    return pd.DataFrame(rows, columns=RECONSTRUCTION_SUMMARY_COLUMNS)


# -------------------------------- MovieLens --------------------------------- #

def _fold_job(job):

    observed, folds, fold, solver, config = job

    test_ids = folds[fold]
    train_ids = np.sort(np.concatenate([f for k, f in enumerate(folds) if k != fold]))

    train = observed.subset(train_ids)
    test = observed.subset(test_ids)

    row = {"solver": solver, "fold": fold, "n_train": train.n_entries,
           "n_test": test.n_entries}

    try:
        factors, records = solve(solver, train, config,
                                 monitor=lambda f: rmse(f, test))
    except SolverError as err:
        L.warning("%s diverged on fold %i: %s", solver, fold, err)
        row.update(train_rmse=np.nan, test_rmse=np.nan, sweeps=0,
                   seconds=np.nan, failed=True)
        return row, None

    row.update(train_rmse=train_rmse(factors, train),
               test_rmse=rmse(factors, test), sweeps=len(records),
               seconds=records[-1].seconds if records else 0.0, failed=False)

    L.info("%s fold %i: test RMSE %.4f after %i sweeps", solver, fold,
           row["test_rmse"], row["sweeps"])

    return row, _tag_traces(records, fold=fold)


def movielens_protocol(records, k, solvers, config, seed=1, threads=1,
                       only_folds=None):
    '''
    k-fold cross validation: for every fold train on the other k - 1 folds
    and report the RMSE on the held-out fold.

    Rows and columns seen only in the held-out fold keep the factor the
    solver leaves for unobserved rows and count toward the test RMSE.

    Args:
        records: a records table from :func:`~cavitymf.tasks.ingest.parse_ratings`
        k: number of folds
        solvers: a solver tag or a list of tags
        config: the SolverConfig
        seed: the seed of the fold partition
        threads: number of worker processes
        only_folds: optional subset of fold numbers to run

    Returns:
        ProtocolResult
    '''

    if isinstance(solvers, str):
        solvers = [solvers]

    for tag in solvers:
        check_config(tag, config)

    observed = records_to_observed(records, IndexMap.from_records(records))
    folds = kfold_split(records, k, seed)

    selected = range(k) if only_folds is None else list(only_folds)
    for fold in selected:
        if not 0 <= fold < k:
            raise UsageError("fold %i is outside 0..%i" % (fold, k - 1))

    jobs = [(observed, folds, fold, solver, config)
            for solver in solvers for fold in selected]

    L.info("movielens protocol: %i x %i ratings matrix, %i folds, %i jobs",
           observed.n_rows, observed.n_cols, k, len(jobs))

    results = run_jobs(_fold_job, jobs, threads)

    runs = pd.DataFrame([row for row, _ in results], columns=FOLD_RUN_COLUMNS)

    trace_frames = [t for _, t in results if t is not None]
    traces = (pd.concat(trace_frames, ignore_index=True) if trace_frames
              else pd.DataFrame(columns=["fold"] + TRACE_COLUMNS))

    return ProtocolResult(summarise_folds(runs), runs, traces)


def summarise_folds(runs):
    '''Per-fold test RMSE for every solver followed by a "mean" row.'''

    rows = []

    for solver, group in runs.groupby("solver", sort=True):

        group = group.sort_values("fold")

        for _, run in group.iterrows():
            rows.append({"solver": solver, "fold": str(run["fold"]),
                         "test_rmse": run["test_rmse"],
                         "train_rmse": run["train_rmse"],
                         "sweeps": run["sweeps"], "seconds": run["seconds"]})

        rows.append({"solver": solver, "fold": "mean",
                     "test_rmse": group["test_rmse"].mean(),
                     "train_rmse": group["train_rmse"].mean(),
                     "sweeps": group["sweeps"].mean(),
                     "seconds": group["seconds"].mean()})

    return pd.DataFrame(rows, columns=FOLD_SUMMARY_COLUMNS)


def summarise_traces(traces):
    '''
    Mean trace per (algorithm, sweep) across runs: the error versus
    iteration curves.
    '''

    if len(traces) == 0:
        return pd.DataFrame(columns=TRACE_SUMMARY_COLUMNS)

    grouped = traces.groupby(["algorithm", "sweep"], sort=True)

    summary = grouped.agg(runs=("sweep", "size"),
                          mean_test_error=("test_error", "mean"),
                          mean_train_rmse=("train_rmse", "mean"),
                          mean_objective=("objective", "mean"),
                          mean_seconds=("seconds", "mean")).reset_index()

    return summary[TRACE_SUMMARY_COLUMNS]


def write_result(result, outdir, prefix):
    '''
    Write the summary, runs and traces of a ProtocolResult.

    Returns:
        dict of table name -> path
    '''

    os.makedirs(outdir, exist_ok=True)

    paths = {}
    for name in ("summary", "runs", "traces"):
        paths[name] = os.path.join(outdir, "%s.%s.csv" % (prefix, name))
        getattr(result, name).to_csv(paths[name], index=False)

    L.info("wrote %s", ", ".join(paths.values()))

    return paths
