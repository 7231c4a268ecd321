'''
als.py
======

Overview
--------

Alternating least squares. With V fixed, each row of U is the exact
minimizer of the regularized objective:

    u_mu = (sum_i v_i v_i^T + lam I)^-1 (sum_i y_mu,i v_i)

where the sums run over the columns observed in row mu. All rows of U are
solved from the current V, then all rows of V from the new U.

Rows are solved in blocks: the Gram matrices of a block are assembled with a
sparse incidence product and the R x R systems are solved together with
:func:`numpy.linalg.solve`. No row update within a half-sweep sees another
row's update from the same half-sweep.

Code
----

'''

import logging

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from cavitymf.tasks.core import (FactorPair, NumericalError, UsageError,
                                 check_dimensions, init_factors)
from cavitymf.tasks.trace import run_sweeps

L = logging.getLogger(__name__)

# upper bound on the number of Gram-matrix scalars assembled at once
BLOCK_BUDGET = 2 ** 22


class AlsState():
    '''Current factors and the number of completed sweeps.'''

    def __init__(self, factors, sweep_count=0):
        self.factors = factors
        self.sweep_count = sweep_count


def als_row_update(target_row, fixed_factor, observed_neighbors, lam):
    '''
    Solve the normal equations for a single row.

    Args:
        target_row: the index of the row being solved (used in error messages)
        fixed_factor: the fixed factor matrix (M x R for a row of U)
        observed_neighbors: list of (index into fixed_factor, value) pairs
        lam: the regularization parameter

    Returns:
        The row vector (length R).

    Raises:
        NumericalError: if lam = 0 and the Gram matrix is singular.
    '''

    rank = fixed_factor.shape[1]

    if len(observed_neighbors) == 0:
        if lam > 0:
            return np.zeros(rank)
        raise NumericalError("row has no observations and lambda = 0",
                             algorithm="als", location="row " + str(target_row))

    idx = np.array([n for n, _ in observed_neighbors], dtype=np.int64)
    y = np.array([v for _, v in observed_neighbors], dtype=np.float64)

    F = fixed_factor[idx]
    gram = F.T @ F + lam * np.eye(rank)
    rhs = F.T @ y

    try:
        return scipy.linalg.solve(gram, rhs, assume_a="pos")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as err:
        raise NumericalError("singular normal equations: " + str(err),
                             algorithm="als", location="row " + str(target_row))


def _side_view(observed, side):

    if side == "rows":
        return (observed.n_rows, observed.row_ptr, observed.row_entries,
                observed.cols)
    elif side == "cols":
        return (observed.n_cols, observed.col_ptr, observed.col_entries,
                observed.rows)
    else:
        raise UsageError("side must be 'rows' or 'cols'")


def als_half_sweep(fixed_factor, observed, side, lam):
    '''
    Solve every row of one side ("rows" -> U given V, "cols" -> V given U).

    Returns:
        The new factor matrix for that side.
    '''

    n_own, ptr, entries, other_index = _side_view(observed, side)
    rank = fixed_factor.shape[1]

    solved = np.zeros((n_own, rank))
    eye = np.eye(rank)

    max_edges = max(1, BLOCK_BUDGET // (rank * rank))

    start = 0
    while start < n_own:

        # grow the block until it reaches the edge budget
        stop = start + 1
        while stop < n_own and ptr[stop + 1] - ptr[start] <= max_edges:
            stop += 1

        e0, e1 = ptr[start], ptr[stop]
        ids = entries[e0:e1]
        n_block = stop - start

        F = fixed_factor[other_index[ids]]
        y = observed.values[ids]

        # block-local incidence: local row of each edge
        local = np.repeat(np.arange(n_block), np.diff(ptr[start:stop + 1]))
        incidence = sp.csr_matrix((np.ones(len(ids)), (local, np.arange(len(ids)))),
                                  shape=(n_block, len(ids)))

        outer = (F[:, :, None] * F[:, None, :]).reshape(len(ids), rank * rank)
        gram = np.asarray(incidence @ outer).reshape(n_block, rank, rank)
        gram += lam * eye
        rhs = np.asarray(incidence @ (F * y[:, None]))

        try:
            solved[start:stop] = np.linalg.solve(gram, rhs[:, :, None])[:, :, 0]
        except np.linalg.LinAlgError:
            # locate the offending row for the error message
            for k in range(n_block):
                if np.linalg.matrix_rank(gram[k]) < rank:
                    raise NumericalError("singular normal equations",
                                         algorithm="als",
                                         location=side[:-1] + " " + str(start + k))
            raise NumericalError("singular normal equations", algorithm="als",
                                 location=side + " %i-%i" % (start, stop))

        start = stop

    return solved


def als_sweep(state, observed, config):
    '''
    One ALS sweep: all rows of U from the current V, then all rows of V
    from the new U.
    '''

    check_dimensions(state.factors, observed)

    U = als_half_sweep(state.factors.V, observed, "rows", config.lam)
    V = als_half_sweep(U, observed, "cols", config.lam)

    return AlsState(FactorPair(U, V), state.sweep_count + 1)


def als_solve(observed, config, factors=None, monitor=None):
    '''
    Run ALS until convergence or `config.max_sweeps`.

    Returns:
        (FactorPair, list of TraceRecord)
    '''

    if factors is None:
        factors = init_factors(observed.n_rows, observed.n_cols, config.rank,
                               config.seed, config.init_scale)

    state = AlsState(factors)

    def sweep():
        nonlocal state
        state = als_sweep(state, observed, config)
        return state.factors

    return run_sweeps("als", sweep, factors, observed, config, monitor)
