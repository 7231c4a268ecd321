'''
trace.py
========

Overview
--------

The convergence loop shared by every solver and the per-sweep trace records
it produces. One :class:`TraceRecord` is written per full sweep (ALS, CBMF,
ACBMF) or per epoch (SGD) so that traces of different algorithms line up
iteration by iteration; the wall-clock column exposes the unequal cost of an
iteration.

A solver hands :func:`run_sweeps` a zero-argument `sweep` callable that
advances its own state and returns the new factors. An optional `monitor`
callable maps factors to a held-out error (test RMSE or rRMSE) that is
recorded in the `test_error` column.

Code
----

'''

import logging
import math
import time
from dataclasses import asdict, dataclass

import numpy as np
import pandas as pd

from cavitymf.tasks.core import SolverError, objective, residuals

L = logging.getLogger(__name__)

TRACE_COLUMNS = ["algorithm", "sweep", "objective", "train_rmse",
                 "test_error", "seconds", "change"]


@dataclass
class TraceRecord:
    algorithm: str
    sweep: int
    objective: float
    train_rmse: float
    test_error: float
    seconds: float
    change: float


def relative_change(previous, current):
    '''
    Relative Frobenius change between two factor pairs:
    sqrt(|dU|^2 + |dV|^2) / sqrt(|U|^2 + |V|^2), current factors in the
    denominator.
    '''

    diff = (np.sum((current.U - previous.U) ** 2) +
            np.sum((current.V - previous.V) ** 2))
    norm = np.sum(current.U ** 2) + np.sum(current.V ** 2)

    return math.sqrt(diff) / max(math.sqrt(norm), 1e-300)


def train_rmse(factors, observed):

    if observed.n_entries == 0:
        return float("nan")

    res = residuals(factors, observed)
    return math.sqrt(float(np.dot(res, res)) / observed.n_entries)


def run_sweeps(algorithm, sweep, factors, observed, config, monitor=None):
    '''
    Drive a solver until the relative factor change of a sweep falls below
    `config.convergence_tol` or `config.max_sweeps` sweeps have run.

    Args:
        algorithm: the solver tag written to the trace
        sweep: callable advancing the solver by one sweep, returning factors
        factors: the starting factors
        observed: the training matrix (for the objective and train RMSE)
        config: a SolverConfig
        monitor: optional callable factors -> held-out error

    Returns:
        (final FactorPair, list of TraceRecord)

    Raises:
        SolverError: if the factors become non-finite.
    '''

    records = []
    previous = factors
    elapsed = 0.0

    L.debug("%s: starting, rank=%i lambda=%g max_sweeps=%i",
            algorithm, config.rank, config.lam, config.max_sweeps)

    for s in range(1, config.max_sweeps + 1):

        tick = time.perf_counter()
        current = sweep()
        elapsed += time.perf_counter() - tick

        if not current.is_finite():
            raise SolverError("factors became non-finite", algorithm=algorithm,
                              sweep=s)

        change = relative_change(previous, current)

        record = TraceRecord(
            algorithm=algorithm,
            sweep=s,
            objective=objective(current, observed, config.lam),
            train_rmse=train_rmse(current, observed),
            test_error=(monitor(current) if monitor is not None
                        else float("nan")),
            seconds=elapsed,
            change=change)

        records.append(record)

        if config.log_every and s % config.log_every == 0:
            L.info("%s sweep %i: objective=%.6g train_rmse=%.6g "
                   "test_error=%.6g change=%.3g", algorithm, s,
                   record.objective, record.train_rmse, record.test_error,
                   change)

        previous = current

        if change < config.convergence_tol:
            break

    L.info("%s: stopped after %i sweeps (change=%.3g, %.2fs)", algorithm,
           len(records), records[-1].change, records[-1].seconds)

    return previous, records


def traces_to_frame(records):
    '''Return trace records as a DataFrame in TRACE_COLUMNS order.'''

    return pd.DataFrame([asdict(r) for r in records], columns=TRACE_COLUMNS)
