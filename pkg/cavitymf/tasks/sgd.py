'''
sgd.py
======

Overview
--------

Stochastic gradient descent over the observed entries. For an entry
(mu, i) with residual e = y - u.v, computed once from the incoming vectors,
both vectors are moved simultaneously:

    u' = u - eta (lam u - e v)
    v' = v - eta (lam v - e u)

An epoch visits every observed entry exactly once in a seeded random order
with a fixed learning rate taken from the :class:`~cavitymf.tasks.core.SgdSchedule`.
Entries are processed sequentially; the epoch loop is compiled with numba.

Code
----

'''

import logging

import numpy as np
from numba import njit

from cavitymf.tasks.core import (FactorPair, SolverError, UsageError,
                                 check_dimensions, init_factors)
from cavitymf.tasks.trace import run_sweeps

L = logging.getLogger(__name__)


@njit(cache=True)
def sgd_step(u, v, y, eta, lam):
    '''
    One simultaneous gradient step on the per-entry loss
    1/2 e^2 + lam/2 (|u|^2 + |v|^2). Returns new (u, v) arrays.
    '''

    e = y - np.dot(u, v)
    new_u = u - eta * (lam * u - e * v)
    new_v = v - eta * (lam * v - e * u)
    return new_u, new_v


@njit(cache=True)
def _epoch_kernel(U, V, rows, cols, values, order, eta, lam):

    for k in range(order.shape[0]):
        e = order[k]
        mu = rows[e]
        i = cols[e]
        new_u, new_v = sgd_step(U[mu], V[i], values[e], eta, lam)
        U[mu] = new_u
        V[i] = new_v


def learning_rate(schedule, epoch):
    '''Learning rate for `epoch` (0-based) under `schedule`.'''

    if schedule.rule == "constant":
        return schedule.eta0
    elif schedule.rule == "inverse_time":
        return schedule.eta0 / (1.0 + schedule.decay * epoch)
    else:
        raise UsageError("unknown schedule rule: " + str(schedule.rule))


class SgdState():
    '''
    Factors, the number of completed epochs and the generator used for the
    per-epoch permutations.
    '''

    def __init__(self, factors, seed, epoch=0):
        self.factors = factors
        self.epoch = epoch
        self.rng = np.random.default_rng(seed)


def sgd_epoch(state, observed, config):
    '''
    Run one epoch in place on `state` and return it.

    Raises:
        SolverError: if any factor entry becomes non-finite.
    '''

    if config.sgd is None:
        raise UsageError("sgd_epoch needs a learning-rate schedule (config.sgd)")

    check_dimensions(state.factors, observed)

    eta = learning_rate(config.sgd, state.epoch)
    order = state.rng.permutation(observed.n_entries)

    U = state.factors.U.copy()
    V = state.factors.V.copy()

    _epoch_kernel(U, V, observed.rows, observed.cols, observed.values,
                  order, eta, config.lam)

    state.epoch += 1

    if not (np.isfinite(U).all() and np.isfinite(V).all()):
        raise SolverError("SGD diverged (eta=%g)" % eta, algorithm="sgd",
                          sweep=state.epoch)

    state.factors = FactorPair(U, V)

    return state


def sgd_solve(observed, config, factors=None, monitor=None):
    '''
    Run SGD epochs until convergence or `config.max_sweeps` epochs.

    Rows and columns without training entries are set to zero at the start,
    which is where the regularizer alone puts them.
    '''

    if factors is None:
        factors = init_factors(observed.n_rows, observed.n_cols, config.rank,
                               config.seed, config.init_scale)

    U = factors.U.copy()
    V = factors.V.copy()
    U[observed.row_degrees() == 0] = 0.0
    V[observed.col_degrees() == 0] = 0.0

    # the permutation stream is kept apart from the initialisation stream
    state = SgdState(FactorPair(U, V), seed=[config.seed, 1])

    def sweep():
        sgd_epoch(state, observed, config)
        return state.factors

    return run_sweeps("sgd", sweep, state.factors, observed, config, monitor)
