'''
cbmf.py
=======

Overview
--------

Cavity-based matrix factorization. Every cavity objective and bias function
is kept as a quadratic, so a message is a (precision, linear term) pair:

* per edge (observation x rank): a_edge, b_edge (U side) and c_edge, d_edge
  (V side), i.e. the cavity objective of a variable with one observation
  removed
* per node (row or column x rank): a_node, b_node, c_node, d_node, the sums
  of the incoming bias messages
* per observation: chi, delta (U side) and eta_obs, theta (V side)

A U half-sweep runs, for every observation (mu, i):

1. chi = sum_r v_ir^2 / (a_edge + lam) and delta = sum_r u_edge v_ir
2. a_hat = v^2 / den and b_hat = (y - delta + u_edge v) v / den with
   den = 1 + chi - v^2 / (a_edge + lam)
3. a_node = sum a_hat and b_node = sum b_hat over the row
4. a_edge = a_node - a_hat and b_edge = b_node - b_hat
5. u_edge = b_edge / (a_edge + lam) and u = b_node / (a_node + lam)

chi and delta are always computed from the current messages and fed straight
into the bias messages. The V half-sweep mirrors it with the fresh U.

Only the four edge families are stored per edge; a_hat and b_hat are
recovered as a_node - a_edge when needed, and u_edge / v_edge are derived.

Code
----

'''

import logging

import numpy as np

from cavitymf.tasks.core import (FactorPair, SolverError, UsageError,
                                 check_dimensions, init_factors)
from cavitymf.tasks.trace import run_sweeps

L = logging.getLogger(__name__)

MESSAGE_LIMIT = 1e12


class CavityState():
    '''
    Messages and aggregates of a CBMF run.

    Attributes:
        a_edge, b_edge: |Omega| x R arrays, U-side cavity messages
        c_edge, d_edge: |Omega| x R arrays, V-side cavity messages
        a_node, b_node: N x R arrays
        c_node, d_node: M x R arrays
        chi, delta, eta_obs, theta: length |Omega| per-observation aggregates
        factors: the current FactorPair
        lam: the regularization parameter the messages were built with
    '''

    def __init__(self, observed, rank, lam, factors):

        n_entries, n_rows, n_cols = observed.n_entries, observed.n_rows, observed.n_cols

        self.lam = lam
        self._rows = observed.rows
        self._cols = observed.cols

        self.a_edge = np.zeros((n_entries, rank))
        self.b_edge = np.zeros((n_entries, rank))
        self.c_edge = np.zeros((n_entries, rank))
        self.d_edge = np.zeros((n_entries, rank))

        self.a_node = np.zeros((n_rows, rank))
        self.b_node = np.zeros((n_rows, rank))
        self.c_node = np.zeros((n_cols, rank))
        self.d_node = np.zeros((n_cols, rank))

        self.chi = np.zeros(n_entries)
        self.delta = np.zeros(n_entries)
        self.eta_obs = np.zeros(n_entries)
        self.theta = np.zeros(n_entries)

        self.factors = factors
        self.sweep = 0

    @property
    def u_edge(self):
        return self.b_edge / (self.a_edge + self.lam)

    @property
    def v_edge(self):
        return self.d_edge / (self.c_edge + self.lam)

    @property
    def a_hat(self):
        return self.a_node[self._rows] - self.a_edge

    @property
    def b_hat(self):
        return self.b_node[self._rows] - self.b_edge

    @property
    def c_hat(self):
        return self.c_node[self._cols] - self.c_edge

    @property
    def d_hat(self):
        return self.d_node[self._cols] - self.d_edge

    def edge_slot_count(self):
        '''Number of allocated edge-message scalars (4 |Omega| R).'''

        return (self.a_edge.size + self.b_edge.size +
                self.c_edge.size + self.d_edge.size)


def _aggregates(edge_prec, edge_lin, other, lam):
    '''chi (or eta_obs) and delta (or theta) for every observation.'''

    inv = 1.0 / (edge_prec + lam)
    chi = np.sum(other ** 2 * inv, axis=1)
    delta = np.sum(edge_lin * inv * other, axis=1)

    return chi, delta, inv


def _half_sweep(edge_prec, edge_lin, other, y, own_index, incidence, lam):
    '''
    The message update shared by the U and V sides.

    Args:
        edge_prec, edge_lin: the cavity messages of this side (|Omega| x R)
        other: the other side's node factor at every edge (|Omega| x R)
        y: observed values
        own_index: row (or column) index of every edge
        incidence: sparse matrix summing edges into nodes

    Returns:
        dict with the new edge and node messages, the aggregates and the
        node factor.
    '''

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):

        chi, delta, inv = _aggregates(edge_prec, edge_lin, other, lam)

        other_sq = other ** 2
        denom = 1.0 + chi[:, None] - other_sq * inv
        cavity_mean = edge_lin * inv

        prec_hat = other_sq / denom
        lin_hat = ((y - delta)[:, None] + cavity_mean * other) * other / denom

    node_prec = np.asarray(incidence @ prec_hat)
    node_lin = np.asarray(incidence @ lin_hat)

    with np.errstate(divide="ignore", invalid="ignore"):
        factor = node_lin / (node_prec + lam)

    return {"edge_prec": node_prec[own_index] - prec_hat,
            "edge_lin": node_lin[own_index] - lin_hat,
            "node_prec": node_prec,
            "node_lin": node_lin,
            "chi": chi,
            "delta": delta,
            "factor": factor}


def _guard(arrays, algorithm, sweep):
    '''Raise SolverError on the first non-finite or oversized message.'''

    for name, arr in arrays.items():

        bad = ~np.isfinite(arr) | (np.abs(arr) > MESSAGE_LIMIT)
        if bad.any():
            where = np.unravel_index(np.argmax(bad), arr.shape)
            raise SolverError("message diverged (value %r)" % float(arr[where]),
                              algorithm=algorithm, sweep=sweep,
                              location=name + str([int(x) for x in where]))

        if name in ("a_edge", "c_edge", "a_node", "c_node") and (arr < 0).any():
            where = np.unravel_index(np.argmin(arr), arr.shape)
            raise SolverError("negative precision", algorithm=algorithm,
                              sweep=sweep, location=name + str([int(x) for x in where]))


def check_lambda(lam, algorithm="cbmf"):
    '''
    The cavity solvers divide by the cavity precision plus lambda, which
    starts at zero, so they need lambda > 0. ALS handles lambda = 0.
    '''

    if not lam > 0:
        raise UsageError("%s needs lambda > 0, got %r; use als for an "
                         "unregularized fit" % (algorithm, lam))


def initial_v(observed, factors_v_init, seed=None, rank=None):
    '''
    The starting V of the cavity solvers: the V of a FactorPair, an M x R
    array, or (when `factors_v_init` is None) drawn by init_factors from
    `seed` with the given `rank`.
    '''

    if factors_v_init is None:
        if rank is None or seed is None:
            raise UsageError("either initial factors or a seed and rank are required")
        factors_v_init = init_factors(observed.n_rows, observed.n_cols, rank, seed)

    V = factors_v_init.V if isinstance(factors_v_init, FactorPair) else factors_v_init
    V = np.array(V, dtype=np.float64)

    if V.ndim != 2 or V.shape[0] != observed.n_cols:
        raise UsageError("V must be a %i x R matrix, got shape %s" %
                         (observed.n_cols, V.shape))

    return V


def cbmf_init(observed, factors_v_init, lam, seed=None, rank=None):
    '''
    Zero messages, U zero, V from :func:`initial_v` and the per-observation
    aggregates computed once from them.

    Raises:
        UsageError: if lam is not positive
    '''

    check_lambda(lam, "cbmf")

    V = initial_v(observed, factors_v_init, seed, rank)
    rank = V.shape[1]
    U = np.zeros((observed.n_rows, rank))

    state = CavityState(observed, rank, lam, FactorPair(U, V))

    with np.errstate(divide="ignore", invalid="ignore"):
        state.chi, state.delta, _ = _aggregates(state.a_edge, state.b_edge,
                                                V[observed.cols], lam)
        state.eta_obs, state.theta, _ = _aggregates(state.c_edge, state.d_edge,
                                                    U[observed.rows], lam)

    return state


def cbmf_half_sweep_u(state, observed, lam, inner_iterations=1):
    '''Update the U-side messages and U from the current V (in place).'''

    other = state.factors.V[observed.cols]

    for _ in range(inner_iterations):

        out = _half_sweep(state.a_edge, state.b_edge, other, observed.values,
                          observed.rows, observed.row_incidence, lam)

        state.a_edge, state.b_edge = out["edge_prec"], out["edge_lin"]
        state.a_node, state.b_node = out["node_prec"], out["node_lin"]
        state.chi, state.delta = out["chi"], out["delta"]

        _guard({"a_edge": state.a_edge, "b_edge": state.b_edge,
                "a_node": state.a_node, "b_node": state.b_node},
               "cbmf", state.sweep)

        state.factors = FactorPair(out["factor"], state.factors.V)

    return state


def cbmf_half_sweep_v(state, observed, lam, inner_iterations=1):
    '''Update the V-side messages and V from the fresh U (in place).'''

    other = state.factors.U[observed.rows]

    for _ in range(inner_iterations):

        out = _half_sweep(state.c_edge, state.d_edge, other, observed.values,
                          observed.cols, observed.col_incidence, lam)

        state.c_edge, state.d_edge = out["edge_prec"], out["edge_lin"]
        state.c_node, state.d_node = out["node_prec"], out["node_lin"]
        state.eta_obs, state.theta = out["chi"], out["delta"]

        _guard({"c_edge": state.c_edge, "d_edge": state.d_edge,
                "c_node": state.c_node, "d_node": state.d_node},
               "cbmf", state.sweep)

        state.factors = FactorPair(state.factors.U, out["factor"])

    return state


def cbmf_sweep(state, observed, lam, inner_iterations=1):

    state.sweep += 1
    cbmf_half_sweep_u(state, observed, lam, inner_iterations)
    cbmf_half_sweep_v(state, observed, lam, inner_iterations)

    return state


def cbmf_solve(observed, config, factors=None, monitor=None):
    '''
    Run CBMF until convergence or `config.max_sweeps`.

    Returns:
        (FactorPair, list of TraceRecord)
    '''

    check_lambda(config.lam, "cbmf")

    if factors is None:
        factors = init_factors(observed.n_rows, observed.n_cols, config.rank,
                               config.seed, config.init_scale)
    else:
        check_dimensions(factors, observed)

    state = cbmf_init(observed, factors, config.lam)

    def sweep():
        cbmf_sweep(state, observed, config.lam, config.inner_iterations)
        return state.factors

    return run_sweeps("cbmf", sweep, state.factors, observed, config, monitor)


def sherman_morrison_inverse(diag, rank1):
    '''
    Inverse of diag(`diag`) + v v^T by the Sherman-Morrison formula:

        G^-1 - G^-1 v v^T G^-1 / (1 + v^T G^-1 v)

    Raises:
        UsageError: if an entry of `diag` is not positive.
    '''

    diag = np.asarray(diag, dtype=np.float64)
    v = np.asarray(rank1, dtype=np.float64)

    if diag.ndim != 1 or v.shape != diag.shape:
        raise UsageError("diag and rank1 must be vectors of the same length")
    if not (diag > 0).all():
        raise UsageError("all diagonal entries must be positive")

    g_inv_v = v / diag

    return np.diag(1.0 / diag) - np.outer(g_inv_v, g_inv_v) / (1.0 + v @ g_inv_v)
