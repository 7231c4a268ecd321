'''
mf_train.py
===========

Train one solver on a rating file or a synthetic instance and write

* <prefix>.factors.txt - the factors of the best restart
* <prefix>.runs.csv - one row per restart (final objective, train RMSE and
  test error)
* <prefix>.traces.csv - the per-sweep trace of every restart

The test error column holds the held-out RMSE when a fold is held out
(--folds/--fold), the rRMSE against the ground truth when --truth is given
and is empty otherwise.

Usage::

    cavitymf train --solver acbmf --rank 10 --lambda 3 --input ratings.dat
'''

import argparse
import dataclasses
import logging
import os
import sys

import numpy as np
import pandas as pd

from cavitymf.tasks.core import (DataError, SolverError, UsageError,
                                 save_factors)
from cavitymf.tasks.datagen import load_instance
from cavitymf.tasks.evaluate import rmse, rrmse
from cavitymf.tasks.ingest import (FORMATS, RATING_SETS, IndexMap, detect_format,
                                   kfold_split, parse_ratings,
                                   records_to_observed, validate_ratings)
from cavitymf.tasks.parameters import (add_solver_arguments,
                                       parse_args_with_flag_file,
                                       solver_config_from_args)
from cavitymf.tasks.solvers import SOLVERS, check_config, solve
from cavitymf.tasks.trace import traces_to_frame

# ---------------------------- Set up the logging ---------------------------- #

L = logging.getLogger(__name__)
log_handler = logging.StreamHandler(sys.stdout)
log_handler.setFormatter(logging.Formatter('%(asctime)s %(message)s'))
log_handler.setLevel(logging.INFO)
L.addHandler(log_handler)
L.setLevel(logging.INFO)

logging.getLogger("cavitymf").addHandler(log_handler)
logging.getLogger("cavitymf").setLevel(logging.INFO)

RUN_COLUMNS = ["solver", "restart", "seed", "objective", "train_rmse",
               "test_error", "sweeps", "seconds", "failed"]


# ---------------------------- Parse the arguments --------------------------- #

def get_parser():

    parser = argparse.ArgumentParser(prog="cavitymf train")
    parser.add_argument("--solver", required=True, choices=sorted(SOLVERS),
                        help="the solver to train")
    parser.add_argument("--input", default=None, type=str,
                        help="the rating file")
    parser.add_argument("--format", default="auto",
                        choices=["auto"] + list(FORMATS),
                        help="format of the rating file")
    parser.add_argument("--dataset", default=None, choices=sorted(RATING_SETS),
                        help="check ratings against this dataset's rating set")
    parser.add_argument("--truth", default=None, type=str,
                        help="an instance directory written by cavitymf generate")
    parser.add_argument("--folds", default=0, type=int,
                        help="split the ratings into this many folds")
    parser.add_argument("--fold", default=0, type=int,
                        help="the fold held out for testing")
    parser.add_argument("--split-seed", default=1, type=int,
                        help="the seed of the fold partition")
    parser.add_argument("--restarts", default=1, type=int,
                        help="number of seeded restarts (seeds seed, seed+1, ...)")
    parser.add_argument("--outdir", default=".", type=str,
                        help="the output directory")
    parser.add_argument("--prefix", default=None, type=str,
                        help="output file prefix (default: the solver name)")
    parser.add_argument("--label", default=[], action="append",
                        help="KEY=VALUE column added to the runs and traces tables")
    parser.add_argument("--keep-going", action="store_true",
                        help="exit 0 even when every restart diverges")

    add_solver_arguments(parser)

    return parser


def parse_labels(parser, labels):

    parsed = {}
    for label in labels:
        if "=" not in label:
            parser.error("--label expects KEY=VALUE, got " + label)
        key, value = label.split("=", 1)
        parsed[key] = value

    return parsed


# ------------------------------- Load the data ------------------------------ #

def load_observed(args, instance):
    '''Return the observed matrix named by --input and/or --truth.'''

    if args.input is None:
        return instance.observed

    fmt = detect_format(args.input) if args.format == "auto" else args.format
    records = parse_ratings(args.input, fmt)

    if args.dataset is not None:
        validate_ratings(records, args.dataset)

    if fmt == "triples":
        if instance is not None:
            n_rows, n_cols = instance.config.n_rows, instance.config.n_cols
        else:
            n_rows = int(records["user"].max()) + 1 if len(records) else 0
            n_cols = int(records["item"].max()) + 1 if len(records) else 0
        index_map = IndexMap.identity(n_rows, n_cols)
    else:
        index_map = IndexMap.from_records(records)

    return records_to_observed(records, index_map)


def main(argv=None):

    L.info("parsing arguments")

    parser = get_parser()
    args = parse_args_with_flag_file(parser, argv)
    labels = parse_labels(parser, args.label)

    L.info("Running with arguments:")
    print(args)

    if args.input is None and args.truth is None:
        parser.error("one of --input or --truth is required")
    if args.restarts < 1:
        parser.error("--restarts must be at least 1")

    try:
        config = solver_config_from_args(args)
        check_config(args.solver, config)
    except UsageError as err:
        parser.error(str(err))

    prefix = os.path.join(args.outdir, args.prefix or args.solver)

    try:
        instance = load_instance(args.truth) if args.truth else None
        observed = load_observed(args, instance)

        monitor = None
        train = observed

        if args.folds:
            if not 0 <= args.fold < args.folds:
                parser.error("--fold must lie in 0..%i" % (args.folds - 1))

            folds = kfold_split(np.arange(observed.n_entries), args.folds,
                                args.split_seed)
            test = observed.subset(folds[args.fold])
            train = observed.subset(np.sort(np.concatenate(
                [f for k, f in enumerate(folds) if k != args.fold])))

            L.info("fold %i of %i: %i training and %i test ratings" %
                   (args.fold, args.folds, train.n_entries, test.n_entries))

            def monitor(factors):
                return rmse(factors, test)

        elif instance is not None:

            def monitor(factors):
                return rrmse(factors, instance)

    except UsageError as err:
        parser.error(str(err))
    except (DataError, OSError) as err:
        L.error("could not load the data: %s" % err)
        return 1

    L.info("training %s on %s" % (args.solver, train))

    runs = []
    traces = []
    best = None

    for restart in range(args.restarts):

        run_config = dataclasses.replace(config, seed=config.seed + restart)
        row = dict(labels, solver=args.solver, restart=restart,
                   seed=run_config.seed)

        try:
            factors, records = solve(args.solver, train, run_config,
                                     monitor=monitor)
        except SolverError as err:
            L.error("restart %i failed: %s" % (restart, err))
            row.update(objective=np.nan, train_rmse=np.nan, test_error=np.nan,
                       sweeps=0, seconds=np.nan, failed=True)
            runs.append(row)
            continue

        last = records[-1]
        row.update(objective=last.objective, train_rmse=last.train_rmse,
                   test_error=last.test_error, sweeps=len(records),
                   seconds=last.seconds, failed=False)
        runs.append(row)

        frame = traces_to_frame(records)
        frame.insert(0, "restart", restart)
        for key, value in reversed(list(labels.items())):
            frame.insert(0, key, value)
        traces.append(frame)

        score = last.test_error if monitor is not None else last.objective
        if best is None or score < best[0]:
            best = (score, factors)

    os.makedirs(args.outdir, exist_ok=True)

    pd.DataFrame(runs, columns=list(labels) + RUN_COLUMNS).to_csv(
        prefix + ".runs.csv", index=False)

    if traces:
        pd.concat(traces, ignore_index=True).to_csv(prefix + ".traces.csv",
                                                    index=False)

    if best is None:
        L.error("all %i restarts failed" % args.restarts)
        return 0 if args.keep_going else 1

    save_factors(best[1], prefix + ".factors.txt")

    L.info("best restart: %s %.6g" %
           ("test error" if monitor is not None else "objective", best[0]))

    L.info("complete")

    return 0


if __name__ == "__main__":
    sys.exit(main())
