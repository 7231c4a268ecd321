'''
core.py
=======

Overview
--------

Shared primitives for the matrix factorization solvers:

* :class:`ObservedMatrix` - the sparse set of observed ratings with row and
  column adjacency views
* :class:`FactorPair` - the dense factor matrices U (N x R) and V (M x R)
* :class:`SolverConfig` and :class:`SgdSchedule` - solver hyperparameters
* :func:`predict`, :func:`residuals` and :func:`objective` - the regularized
  squared-error objective and its pieces
* :func:`init_factors` - seeded Gaussian initialisation
* :func:`save_factors` / :func:`load_factors` - the text factor file format

All arithmetic is carried out in 64-bit floats. Every stochastic function
takes an explicit seed and draws from :func:`numpy.random.default_rng` so that
results are reproducible bit-for-bit on one platform.

Errors
------

Precondition violations raise :class:`UsageError`, malformed input raises
:class:`DataError` and solver failures raise :class:`SolverError` (or its
subclass :class:`NumericalError` for singular linear systems).

Code
----

'''

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

L = logging.getLogger(__name__)


# --------------------------------- Exceptions ------------------------------- #

class UsageError(ValueError):
    '''An argument or configuration value violates a precondition.'''


class DataError(ValueError):
    '''Input data is malformed (duplicates, out of range indices, bad lines).'''


class SolverError(RuntimeError):
    '''
    A solver diverged or broke one of its invariants.

    Args:
        message: description of the failure
        algorithm: the solver tag
        sweep: the sweep (or epoch) at which the failure was detected
        location: free-text location, e.g. "a_edge[12, 3]"
    '''

    def __init__(self, message, algorithm=None, sweep=None, location=None):

        self.algorithm = algorithm
        self.sweep = sweep
        self.location = location

        details = []
        if algorithm is not None:
            details.append("algorithm=" + str(algorithm))
        if sweep is not None:
            details.append("sweep=" + str(sweep))
        if location is not None:
            details.append("location=" + str(location))

        if details:
            message = message + " (" + ", ".join(details) + ")"

        super().__init__(message)


class NumericalError(SolverError):
    '''A linear system could not be solved (singular normal equations).'''


# ------------------------------- Configuration ------------------------------ #

SCHEDULE_RULES = ("constant", "inverse_time")


@dataclass
class SgdSchedule:
    '''
    Learning-rate schedule for SGD. With rule "inverse_time" the rate
    for epoch t (counting from 0) is eta0 / (1 + decay * t).
    '''

    eta0: float = 0.05
    decay: float = 0.1
    rule: str = "inverse_time"

    def __post_init__(self):

        if not self.eta0 > 0:
            raise UsageError("eta0 must be positive, got " + str(self.eta0))
        if not self.decay >= 0:
            raise UsageError("decay must be nonnegative, got " + str(self.decay))
        if self.rule not in SCHEDULE_RULES:
            raise UsageError("schedule rule must be one of: " +
                             ",".join(SCHEDULE_RULES))


@dataclass
class SolverConfig:
    '''
    Hyperparameters shared by all solvers.

    Args:
        rank: the factorization rank R
        lam: the regularization parameter (lambda)
        max_sweeps: maximum number of sweeps (epochs for SGD)
        convergence_tol: stop when the relative factor change of a sweep
            drops below this value
        seed: seed for the factor initialisation (and SGD permutations)
        inner_iterations: repeats of each half-sweep for CBMF/ACBMF
        sgd: the SGD learning-rate schedule
        init_scale: standard deviation of the initial factors, by default
            1/sqrt(rank)
        log_every: log a progress line every this many sweeps
    '''

    rank: int = 10
    lam: float = 1e-2
    max_sweeps: int = 200
    convergence_tol: float = 1e-6
    seed: int = 1
    inner_iterations: int = 1
    sgd: SgdSchedule = field(default_factory=SgdSchedule)
    init_scale: Optional[float] = None
    log_every: int = 10

    def __post_init__(self):

        if self.rank < 1:
            raise UsageError("rank must be at least 1")
        if not self.lam >= 0:
            raise UsageError("lambda must be nonnegative, got " + str(self.lam))
        if self.max_sweeps < 1:
            raise UsageError("max_sweeps must be at least 1")
        if not self.convergence_tol >= 0:
            raise UsageError("convergence_tol must be nonnegative")
        if self.inner_iterations < 1:
            raise UsageError("inner_iterations must be at least 1")
        if self.init_scale is not None and not self.init_scale > 0:
            raise UsageError("init_scale must be positive")


# ------------------------------- Domain types ------------------------------- #

class ObservedMatrix():
    '''
    A sparse N x M matrix of observed ratings.

    Entries keep the order in which they were supplied; the position of an
    entry in :attr:`rows`, :attr:`cols` and :attr:`values` is its entry id.
    Two CSR-style adjacency views are built on construction:

    * row view: :attr:`row_ptr` / :attr:`row_entries` - the entry ids of row
      mu are ``row_entries[row_ptr[mu]:row_ptr[mu + 1]]``
    * column view: :attr:`col_ptr` / :attr:`col_entries`

    Use :func:`build_observed` rather than calling the constructor directly
    on untrusted data.
    '''

    def __init__(self, rows, cols, values, n_rows, n_cols):

        self.n_rows = int(n_rows)
        self.n_cols = int(n_cols)

        self.rows = np.asarray(rows, dtype=np.int64)
        self.cols = np.asarray(cols, dtype=np.int64)
        self.values = np.asarray(values, dtype=np.float64)

        for arr in (self.rows, self.cols, self.values):
            arr.setflags(write=False)

        # stable sorts keep entry-id order within a row / column
        self.row_entries = np.argsort(self.rows, kind="stable")
        self.col_entries = np.argsort(self.cols, kind="stable")

        self.row_ptr = np.concatenate(
            ([0], np.cumsum(np.bincount(self.rows, minlength=self.n_rows))))
        self.col_ptr = np.concatenate(
            ([0], np.cumsum(np.bincount(self.cols, minlength=self.n_cols))))

        ones = np.ones(self.n_entries)
        ids = np.arange(self.n_entries)

        # incidence matrices: (row_incidence @ x)[mu] sums x over the entries of row mu
        self.row_incidence = sp.csr_matrix((ones, (self.rows, ids)),
                                           shape=(self.n_rows, self.n_entries))
        self.col_incidence = sp.csr_matrix((ones, (self.cols, ids)),
                                           shape=(self.n_cols, self.n_entries))

    @property
    def n_entries(self):
        return len(self.values)

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    def row_degrees(self):
        return np.diff(self.row_ptr)

    def col_degrees(self):
        return np.diff(self.col_ptr)

    def row_adjacency(self, row):
        '''Return the list of (col, entry id) pairs observed in `row`.'''

        ids = self.row_entries[self.row_ptr[row]:self.row_ptr[row + 1]]
        return [(int(self.cols[e]), int(e)) for e in ids]

    def col_adjacency(self, col):
        '''Return the list of (row, entry id) pairs observed in `col`.'''

        ids = self.col_entries[self.col_ptr[col]:self.col_ptr[col + 1]]
        return [(int(self.rows[e]), int(e)) for e in ids]

    def triples(self):
        '''Return the entries as a list of (row, col, value) tuples.'''

        return list(zip(self.rows.tolist(),
                        self.cols.tolist(),
                        self.values.tolist()))

    def subset(self, entry_ids):
        '''
        Return a new ObservedMatrix holding only the given entries.
        N and M are preserved so that train and test splits share indices.
        '''

        entry_ids = np.asarray(entry_ids, dtype=np.int64)
        return ObservedMatrix(self.rows[entry_ids], self.cols[entry_ids],
                              self.values[entry_ids], self.n_rows, self.n_cols)

    def __repr__(self):
        return ("ObservedMatrix(n_rows=%i, n_cols=%i, n_entries=%i)" %
                (self.n_rows, self.n_cols, self.n_entries))


@dataclass(frozen=True, eq=False)
class FactorPair:
    '''
    The factor matrices U (N x R) and V (M x R); X is approximated by U V^T.

    Only the shapes are checked here. Solvers build intermediate pairs
    before their divergence checks, so finiteness is enforced where the
    factors leave a sweep: :func:`cavitymf.tasks.trace.run_sweeps` raises
    SolverError on a non-finite pair, and :meth:`is_finite` tests it.
    '''

    U: np.ndarray
    V: np.ndarray

    def __post_init__(self):

        if self.U.ndim != 2 or self.V.ndim != 2:
            raise UsageError("factor matrices must be two-dimensional")
        if self.U.shape[1] != self.V.shape[1]:
            raise UsageError("U and V must have the same number of columns "
                             "(rank), got %i and %i" %
                             (self.U.shape[1], self.V.shape[1]))

    @property
    def rank(self):
        return self.U.shape[1]

    @property
    def n_rows(self):
        return self.U.shape[0]

    @property
    def n_cols(self):
        return self.V.shape[0]

    def is_finite(self):
        return bool(np.isfinite(self.U).all() and np.isfinite(self.V).all())

    def copy(self):
        return FactorPair(self.U.copy(), self.V.copy())


# -------------------------------- Operations -------------------------------- #

def build_observed(triples, n_rows, n_cols):
    '''
    Build an :class:`ObservedMatrix` from (row, col, value) triples.

    Raises:
        DataError: if an index is out of range or a (row, col) pair repeats.
    '''

    triples = list(triples)

    if len(triples) == 0:
        return ObservedMatrix([], [], [], n_rows, n_cols)

    rows, cols, values = (np.asarray(x) for x in zip(*triples))
    return observed_from_arrays(rows, cols, values, n_rows, n_cols)


def observed_from_arrays(rows, cols, values, n_rows, n_cols):
    '''
    Array version of :func:`build_observed` used by the loaders.
    '''

    rows = np.asarray(rows)
    cols = np.asarray(cols)
    values = np.asarray(values, dtype=np.float64)

    if not (len(rows) == len(cols) == len(values)):
        raise DataError("rows, cols and values must have the same length")

    if n_rows < 0 or n_cols < 0:
        raise DataError("matrix dimensions must be nonnegative")

    if len(rows) > 0:

        if not (np.issubdtype(rows.dtype, np.integer) and
                np.issubdtype(cols.dtype, np.integer)):
            if not (np.all(rows == np.round(rows)) and
                    np.all(cols == np.round(cols))):
                raise DataError("row and column indices must be integers")

        rows = rows.astype(np.int64)
        cols = cols.astype(np.int64)

        bad = np.flatnonzero((rows < 0) | (rows >= n_rows) |
                             (cols < 0) | (cols >= n_cols))
        if len(bad) > 0:
            e = bad[0]
            raise DataError("entry %i has index (%i, %i) outside a %i x %i matrix" %
                            (e, rows[e], cols[e], n_rows, n_cols))

        keys = rows * np.int64(n_cols) + cols
        unique_keys, counts = np.unique(keys, return_counts=True)
        if len(unique_keys) < len(keys):
            dup = unique_keys[counts > 1][0]
            raise DataError("duplicate entry at (%i, %i)" %
                            (dup // n_cols, dup % n_cols))

        if not np.isfinite(values).all():
            raise DataError("observed values must be finite")

    return ObservedMatrix(rows, cols, values, n_rows, n_cols)


def check_dimensions(factors, observed):

    if factors.n_rows != observed.n_rows or factors.n_cols != observed.n_cols:
        raise UsageError("factor shapes (%i, %i) do not match the observed "
                         "matrix (%i, %i)" % (factors.n_rows, factors.n_cols,
                                              observed.n_rows, observed.n_cols))


def predict(factors, row, col):
    '''Return the prediction u_row . v_col.'''

    if not (0 <= row < factors.n_rows and 0 <= col < factors.n_cols):
        raise UsageError("index (%s, %s) out of range for a %i x %i matrix" %
                         (row, col, factors.n_rows, factors.n_cols))

    return float(np.dot(factors.U[row], factors.V[col]))


def predict_entries(factors, rows, cols):
    '''Vectorised predictions for paired row and column index arrays.'''

    return np.einsum("er,er->e", factors.U[rows], factors.V[cols])


def residuals(factors, observed):
    '''Return y - u.v for every observed entry, in entry-id order.'''

    check_dimensions(factors, observed)
    return observed.values - predict_entries(factors, observed.rows, observed.cols)


def objective(factors, observed, lam):
    '''
    The regularized objective

        1/2 sum_(mu,i) (y - u_mu . v_i)^2 + lam/2 (|U|_F^2 + |V|_F^2)
    '''

    res = residuals(factors, observed)

    loss = 0.5 * float(np.dot(res, res))
    penalty = 0.5 * lam * (float(np.sum(factors.U ** 2)) +
                           float(np.sum(factors.V ** 2)))

    return loss + penalty


def init_factors(n_rows, n_cols, rank, seed, scale=None):
    '''
    Draw U and V with independent N(0, scale^2) entries; scale defaults to
    1/sqrt(rank). U is drawn before V from a single generator.
    '''

    if rank < 1:
        raise UsageError("rank must be at least 1")

    if scale is None:
        scale = 1.0 / math.sqrt(rank)

    if not scale > 0:
        raise UsageError("scale must be positive, got " + str(scale))

    rng = np.random.default_rng(seed)
    U = rng.normal(0.0, scale, size=(n_rows, rank))
    V = rng.normal(0.0, scale, size=(n_cols, rank))

    return FactorPair(U, V)


# ------------------------------- Serialization ------------------------------ #

def save_factors(factors, path):
    '''
    Write factors as text: a header line "N M R" followed by the rows of U
    and then the rows of V.
    '''

    with open(path, "w") as out:
        out.write("%i %i %i\n" % (factors.n_rows, factors.n_cols, factors.rank))
        np.savetxt(out, factors.U, fmt="%.17g")
        np.savetxt(out, factors.V, fmt="%.17g")


def load_factors(path):
    '''Read factors written by :func:`save_factors`.'''

    with open(path, "r") as inf:

        header = inf.readline().split()

        if len(header) != 3:
            raise DataError("factor file " + path + " has a malformed header")

        try:
            n, m, r = (int(x) for x in header)
        except ValueError:
            raise DataError("factor file " + path + " has a non-integer header")

        values = np.loadtxt(inf, dtype=np.float64, ndmin=1).ravel()

    if len(values) != (n + m) * r:
        raise DataError("factor file %s: expected %i values, found %i" %
                        (path, (n + m) * r, len(values)))

    U = values[:n * r].reshape(n, r)
    V = values[n * r:].reshape(m, r)

    return FactorPair(U, V)
