'''
solvers.py
==========

Overview
--------

The solver registry and the cost comparison of the four algorithms.

Every solver shares the signature::

    solve(observed, config, factors=None, monitor=None) -> (FactorPair, traces)

Per-sweep operation counts and memory slots (N rows, M columns, |Omega|
observations, rank R):

======  =====================  ==============================
solver  operations per sweep   memory slots
======  =====================  ==============================
als     |Omega| R^2 + (N+M) R^3  (N+M) R + |Omega|
sgd     |Omega| R              (N+M) R + |Omega|
cbmf    |Omega| R              4 |Omega| R
acbmf   |Omega| R              2 (N+M) R + 4 |Omega|
======  =====================  ==============================

Code
----

'''

import pandas as pd

from cavitymf.tasks.acbmf import acbmf_solve
from cavitymf.tasks.als import als_solve
from cavitymf.tasks.cbmf import cbmf_solve, check_lambda
from cavitymf.tasks.core import UsageError
from cavitymf.tasks.sgd import sgd_solve

SOLVERS = {"als": als_solve,
           "sgd": sgd_solve,
           "cbmf": cbmf_solve,
           "acbmf": acbmf_solve}


def get_solver(tag):

    if tag not in SOLVERS:
        raise UsageError("unknown solver %s, expected one of %s" %
                         (tag, ", ".join(sorted(SOLVERS))))

    return SOLVERS[tag]


def check_config(tag, config):
    '''Fail early on a tag or a configuration the solver cannot run.'''

    get_solver(tag)

    if tag in ("cbmf", "acbmf"):
        check_lambda(config.lam, tag)


def solve(tag, observed, config, factors=None, monitor=None):
    '''Run the solver named by `tag`.'''

    return get_solver(tag)(observed, config, factors=factors, monitor=monitor)


def memory_slots(tag, n_rows, n_cols, n_observed, rank):

    get_solver(tag)

    if tag == "cbmf":
        return 4 * n_observed * rank
    elif tag == "acbmf":
        return 2 * (n_rows + n_cols) * rank + 4 * n_observed
    else:
        return (n_rows + n_cols) * rank + n_observed


def operations_per_sweep(tag, n_rows, n_cols, n_observed, rank):

    get_solver(tag)

    if tag == "als":
        return n_observed * rank ** 2 + (n_rows + n_cols) * rank ** 3
    else:
        return n_observed * rank


def cost_table(n_rows, n_cols, n_observed, rank):
    '''One row per solver with its operation count and memory slots.'''

    rows = [{"solver": tag,
             "operations": operations_per_sweep(tag, n_rows, n_cols, n_observed, rank),
             "memory_slots": memory_slots(tag, n_rows, n_cols, n_observed, rank)}
            for tag in SOLVERS]

    return pd.DataFrame(rows, columns=["solver", "operations", "memory_slots"])
