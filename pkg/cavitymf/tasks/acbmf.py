'''
acbmf.py
========

Overview
--------

Approximate cavity-based matrix factorization. The edge messages of
:mod:`cavitymf.tasks.cbmf` are replaced by node quantities plus one residual
correction per observation, so memory is O((N+M)R + |Omega|).

A U half-sweep runs, for every observation (mu, i):

1. chi = sum_s v_is^2 / (a_mu,s + lam), from the current node precisions
2. phi' = (y - u_mu.v_i + phi chi) / (1 + chi), the previous phi on the right
3. a_mu,r = sum_i v_ir^2 / (1 + chi)
4. b_mu,r = sum_i phi' v_ir + u_mu,r a_mu,r
5. u_mu,r = b_mu,r / (a_mu,r + lam)

and the V half-sweep mirrors it with eta_obs, psi, c, d and the fresh U.

At a fixed point phi = y - u.v and the U update collapses to the ALS normal
equations, so converged ACBMF factors are ALS-stationary;
:func:`verify_stationarity` measures how far a pair of factors is from that.

Code
----

'''

import logging

import numpy as np

from cavitymf.tasks.als import als_half_sweep
from cavitymf.tasks.cbmf import _guard, check_lambda, initial_v
from cavitymf.tasks.core import (FactorPair, check_dimensions, init_factors,
                                 residuals)
from cavitymf.tasks.trace import run_sweeps

L = logging.getLogger(__name__)


class ApproxCavityState():
    '''
    Node parameters and per-observation terms of an ACBMF run.

    Attributes:
        a, b: N x R arrays (U side precision and linear term)
        c, d: M x R arrays (V side)
        chi, phi: length |Omega|, U side aggregate and residual term
        eta_obs, psi: length |Omega|, V side aggregate and residual term
        factors: the current FactorPair
    '''

    def __init__(self, observed, rank, factors):

        self.a = np.zeros((observed.n_rows, rank))
        self.b = np.zeros((observed.n_rows, rank))
        self.c = np.zeros((observed.n_cols, rank))
        self.d = np.zeros((observed.n_cols, rank))

        self.chi = np.zeros(observed.n_entries)
        self.phi = np.zeros(observed.n_entries)
        self.eta_obs = np.zeros(observed.n_entries)
        self.psi = np.zeros(observed.n_entries)

        self.factors = factors
        self.sweep = 0

    def slot_count(self):
        '''Allocated scalars: 2 (N+M) R node slots plus 4 |Omega|.'''

        return sum(x.size for x in (self.a, self.b, self.c, self.d,
                                    self.chi, self.phi, self.eta_obs, self.psi))


def _residual_update(y, uv, phi, chi):
    '''phi' = (y - u.v + phi chi) / (1 + chi); the plain residual when chi = 0.'''

    return (y - uv + phi * chi) / (1.0 + chi)


def _observation_chi(node_prec, own_index, other, lam):

    return np.sum(other ** 2 / (node_prec[own_index] + lam), axis=1)


def _half_sweep(node_prec, own, other_at_edge, y, phi, own_index, incidence, lam):
    '''
    The update shared by both sides.

    Args:
        node_prec: this side's current node precisions (a or c)
        own: this side's current factor (U or V)
        other_at_edge: the other factor at every edge (|Omega| x R)
        phi: the previous residual terms
        own_index: row (or column) index of every edge
        incidence: sparse matrix summing edges into nodes

    Returns:
        (node_prec, node_lin, chi, phi, factor)
    '''

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):

        chi = _observation_chi(node_prec, own_index, other_at_edge, lam)
        uv = np.einsum("er,er->e", own[own_index], other_at_edge)
        phi = _residual_update(y, uv, phi, chi)

        scaled = other_at_edge ** 2 / (1.0 + chi)[:, None]

    new_prec = np.asarray(incidence @ scaled)
    new_lin = np.asarray(incidence @ (phi[:, None] * other_at_edge)) + own * new_prec

    with np.errstate(divide="ignore", invalid="ignore"):
        factor = new_lin / (new_prec + lam)

    return new_prec, new_lin, chi, phi, factor


def acbmf_init(observed, factors_v_init, lam, seed=None, rank=None):
    '''
    Zero node parameters and residual terms, U zero and V taken from
    `factors_v_init` (or drawn from `seed` and `rank`). chi and eta_obs are
    computed from the zero precisions so they are defined before first use.
    lam must be positive.
    '''

    check_lambda(lam, "acbmf")

    V = initial_v(observed, factors_v_init, seed, rank)
    rank = V.shape[1]
    U = np.zeros((observed.n_rows, rank))

    state = ApproxCavityState(observed, rank, FactorPair(U, V))

    with np.errstate(divide="ignore", invalid="ignore"):
        state.chi = _observation_chi(state.a, observed.rows, V[observed.cols], lam)
        state.eta_obs = _observation_chi(state.c, observed.cols, U[observed.rows], lam)

    return state


def acbmf_half_sweep_u(state, observed, lam, inner_iterations=1):
    '''Update a, b, chi, phi and U from the current V (in place).'''

    V = state.factors.V
    other = V[observed.cols]

    for _ in range(inner_iterations):

        a, b, chi, phi, U = _half_sweep(state.a, state.factors.U, other,
                                        observed.values, state.phi,
                                        observed.rows, observed.row_incidence, lam)

        _guard({"a_node": a, "b_node": b, "chi": chi, "phi": phi},
               "acbmf", state.sweep)

        state.a, state.b, state.chi, state.phi = a, b, chi, phi
        state.factors = FactorPair(U, V)

    return state


def acbmf_half_sweep_v(state, observed, lam, inner_iterations=1):
    '''Update c, d, eta_obs, psi and V from the fresh U (in place).'''

    U = state.factors.U
    other = U[observed.rows]

    for _ in range(inner_iterations):

        c, d, eta_obs, psi, V = _half_sweep(state.c, state.factors.V, other,
                                            observed.values, state.psi,
                                            observed.cols, observed.col_incidence, lam)

        _guard({"c_node": c, "d_node": d, "eta_obs": eta_obs, "psi": psi},
               "acbmf", state.sweep)

        state.c, state.d, state.eta_obs, state.psi = c, d, eta_obs, psi
        state.factors = FactorPair(U, V)

    return state


def acbmf_sweep(state, observed, lam, inner_iterations=1):

    state.sweep += 1
    acbmf_half_sweep_u(state, observed, lam, inner_iterations)
    acbmf_half_sweep_v(state, observed, lam, inner_iterations)

    return state


def acbmf_solve(observed, config, factors=None, monitor=None):
    '''
    Run ACBMF until convergence or `config.max_sweeps`.

    Returns:
        (FactorPair, list of TraceRecord)
    '''

    check_lambda(config.lam, "acbmf")

    if factors is None:
        factors = init_factors(observed.n_rows, observed.n_cols, config.rank,
                               config.seed, config.init_scale)
    else:
        check_dimensions(factors, observed)

    state = acbmf_init(observed, factors, config.lam)

    def sweep():
        acbmf_sweep(state, observed, config.lam, config.inner_iterations)
        return state.factors

    return run_sweeps("acbmf", sweep, state.factors, observed, config, monitor)


def verify_stationarity(factors, observed, lam):
    '''
    Distance of `factors` from an ALS fixed point.

    Every row of U is compared with its closed-form ALS solution given V,
    and every row of V with its solution given U.

    Returns:
        max over both sides of the largest absolute difference

    Raises:
        NumericalError: if lam = 0 and a normal-equation system is singular.
    '''

    check_dimensions(factors, observed)

    best_u = als_half_sweep(factors.V, observed, "rows", lam)
    best_v = als_half_sweep(factors.U, observed, "cols", lam)

    gaps = [np.abs(factors.U - best_u), np.abs(factors.V - best_v)]

    return float(max((g.max() for g in gaps if g.size), default=0.0))


def stationarity_residual(factors, observed):
    '''Largest |y - u.v| over observed entries (the fixed-point value of phi).'''

    if observed.n_entries == 0:
        return 0.0

    return float(np.max(np.abs(residuals(factors, observed))))
