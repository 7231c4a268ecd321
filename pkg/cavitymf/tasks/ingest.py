'''
ingest.py
=========

Overview
--------

Loading of MovieLens-style rating files into an
:class:`~cavitymf.tasks.core.ObservedMatrix`.

Three line formats are read:

* ``double_colon`` - ``user::item::rating::timestamp`` (MovieLens 1M and 10M)
* ``comma_header`` - a CSV file with the header ``userId,movieId,rating,timestamp``
  (MovieLens 20M)
* ``triples`` - whitespace separated ``row col value`` with 0-based indices,
  as written by :func:`cavitymf.tasks.datagen.export_instance`

:func:`parse_ratings` returns a records table with the columns ``user``,
``item``, ``rating`` and ``timestamp`` indexed by the 1-based line number of
each record in its file, so later validation errors can point at lines.
Raw ids are mapped onto contiguous row and column indices by an
:class:`IndexMap`; N and M are the numbers of distinct ids observed.

Code
----

'''

import logging

import numpy as np
import pandas as pd

from cavitymf.tasks.core import DataError, UsageError, observed_from_arrays

L = logging.getLogger(__name__)

RECORD_COLUMNS = ["user", "item", "rating", "timestamp"]

FORMATS = ("double_colon", "comma_header", "triples")

RATING_SETS = {"ml-1m": np.arange(1.0, 6.0),
               "ml-10m": np.arange(1, 11) / 2.0,
               "ml-20m": np.arange(1, 11) / 2.0}


def empty_records():

    return pd.DataFrame({"user": pd.Series([], dtype=np.int64),
                         "item": pd.Series([], dtype=np.int64),
                         "rating": pd.Series([], dtype=np.float64),
                         "timestamp": pd.Series([], dtype=np.int64)})


def detect_format(path):
    '''Guess the format of a rating file from its first line.'''

    with open(path, "r") as inf:
        first = inf.readline()

    if "::" in first:
        return "double_colon"
    elif first.startswith("userId"):
        return "comma_header"
    else:
        return "triples"


def _read_table(path, format):

    if format == "double_colon":
        return pd.read_csv(path, sep="::", engine="python", header=None,
                           names=RECORD_COLUMNS, dtype=str,
                           skip_blank_lines=False), 1
    elif format == "comma_header":
        table = pd.read_csv(path, sep=",", header=0, dtype=str,
                            skip_blank_lines=False)
        if list(table.columns[:3]) != ["userId", "movieId", "rating"]:
            raise DataError("%s: expected a userId,movieId,rating,timestamp header" % path)
        table = table.iloc[:, :4]
        table.columns = RECORD_COLUMNS[:table.shape[1]]
        return table, 2
    elif format == "triples":
        return pd.read_csv(path, sep=r"\s+", header=None,
                           names=RECORD_COLUMNS[:3], dtype=str,
                           skip_blank_lines=False), 1
    else:
        raise UsageError("unknown rating format %s, expected one of %s" %
                         (format, ", ".join(FORMATS)))


def parse_ratings(path, format=None):
    '''
    Parse a rating file into a records table.

    Args:
        path: the rating file
        format: one of FORMATS; detected from the first line when None

    Raises:
        OSError: if the file cannot be read
        DataError: on the first malformed line, naming its line number
    '''

    if format is None:
        format = detect_format(path)

    try:
        table, first_line = _read_table(path, format)
    except pd.errors.EmptyDataError:
        L.warning("%s is empty", path)
        return empty_records()
    except pd.errors.ParserError as err:
        raise DataError("%s: %s" % (path, err))

    if "timestamp" not in table.columns:
        table["timestamp"] = "0"

    numeric = {}
    bad = np.zeros(len(table), dtype=bool)

    for column in RECORD_COLUMNS:
        numeric[column] = pd.to_numeric(table[column], errors="coerce")
        bad |= numeric[column].isna().to_numpy()

    for column in ("user", "item", "timestamp"):
        values = numeric[column].to_numpy(dtype=np.float64)
        bad |= np.isfinite(values) & (values != np.round(values))

    records = pd.DataFrame(
        {"user": numeric["user"], "item": numeric["item"],
         "rating": numeric["rating"].astype(np.float64),
         "timestamp": numeric["timestamp"]})

    records.index = np.arange(first_line, first_line + len(records))

    if bad.any():
        line = records.index[np.argmax(bad)]
        raise DataError("%s: malformed record on line %i" % (path, line))

    for column in ("user", "item", "timestamp"):
        records[column] = records[column].astype(np.int64)

    L.info("read %i ratings from %s (%s)", len(records), path, format)

    return records


def validate_ratings(records, dataset):
    '''
    Check every rating against the declared rating set of `dataset`.

    Raises:
        UsageError: if the dataset is unknown
        DataError: listing the first offending lines
    '''

    if dataset not in RATING_SETS:
        raise UsageError("unknown dataset %s, expected one of %s" %
                         (dataset, ", ".join(sorted(RATING_SETS))))

    legal = np.isin(records["rating"].to_numpy(), RATING_SETS[dataset])

    if not legal.all():
        lines = records.index[~legal][:5].tolist()
        raise DataError("ratings outside the %s rating set on lines %s" %
                        (dataset, ", ".join(str(x) for x in lines)))


class IndexMap():
    '''
    Bijections between raw user / item ids and row / column indices.
    Raw ids are sorted ascending so the mapping does not depend on record
    order.
    '''

    def __init__(self, users, items):
        self.users = np.asarray(users, dtype=np.int64)
        self.items = np.asarray(items, dtype=np.int64)

    @classmethod
    def from_records(cls, records):
        return cls(np.unique(records["user"].to_numpy()),
                   np.unique(records["item"].to_numpy()))

    @classmethod
    def identity(cls, n_rows, n_cols):
        '''The map of already 0-based data (triples files).'''

        return cls(np.arange(n_rows), np.arange(n_cols))

    @property
    def n_rows(self):
        return len(self.users)

    @property
    def n_cols(self):
        return len(self.items)

    @staticmethod
    def _lookup(keys, ids, what):

        pos = np.searchsorted(keys, ids)
        pos_clipped = np.minimum(pos, max(len(keys) - 1, 0))

        if len(ids) and (len(keys) == 0 or (keys[pos_clipped] != ids).any()):
            missing = ids[(len(keys) == 0) | (keys[pos_clipped] != ids)][0]
            raise DataError("unknown %s id %i" % (what, missing))

        return pos

    def encode(self, records):
        '''Return (rows, cols) for the records.'''

        rows = self._lookup(self.users, records["user"].to_numpy(np.int64), "user")
        cols = self._lookup(self.items, records["item"].to_numpy(np.int64), "item")

        return rows, cols

    def decode(self, rows, cols):
        '''Return the raw (user ids, item ids) of row and column indices.'''

        return self.users[np.asarray(rows)], self.items[np.asarray(cols)]


def records_to_observed(records, index_map=None):
    '''
    Build the ObservedMatrix of a records table.

    Raises:
        DataError: on a repeated (user, item) pair or an id missing from
        `index_map`.
    '''

    if index_map is None:
        index_map = IndexMap.from_records(records)

    rows, cols = index_map.encode(records)

    return observed_from_arrays(rows, cols, records["rating"].to_numpy(np.float64),
                                index_map.n_rows, index_map.n_cols)


def kfold_split(records, k, seed):
    '''
    Partition record positions into k folds of sizes differing by at most
    one.

    Returns:
        list of k integer arrays of positions into `records`

    Raises:
        UsageError: if k < 2 or k exceeds the number of records.
    '''

    n = len(records)

    if k < 2:
        raise UsageError("k must be at least 2, got %i" % k)
    if k > n:
        raise UsageError("cannot split %i records into %i folds" % (n, k))

    order = np.random.default_rng(seed).permutation(n)

    return [np.sort(fold) for fold in np.array_split(order, k)]
