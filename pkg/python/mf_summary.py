'''
mf_summary.py
=============

Combine the runs and traces tables written by ``cavitymf train`` (one pair
per pipeline job) into the protocol summaries.

--kind reconstruction
    runs carry "c" and "sample" labels and the rRMSE in test_error;
    writes reconstruction rates per (solver, c)
--kind folds
    runs carry a "fold" label and the held-out RMSE in test_error; writes
    the RMSE per fold and the mean per solver

Usage::

    cavitymf summary --kind folds --runs train.dir/*/*.runs.csv --traces train.dir/*/*.traces.csv
'''

import argparse
import logging
import os
import sys

import pandas as pd

from cavitymf.tasks.evaluate import (SUCCESS_THRESHOLD, ProtocolResult,
                                     summarise_folds, summarise_reconstruction,
                                     summarise_traces, write_result)
from cavitymf.tasks.parameters import parse_args_with_flag_file

# ---------------------------- Set up the logging ---------------------------- #

L = logging.getLogger(__name__)
log_handler = logging.StreamHandler(sys.stdout)
log_handler.setFormatter(logging.Formatter('%(asctime)s %(message)s'))
log_handler.setLevel(logging.INFO)
L.addHandler(log_handler)
L.setLevel(logging.INFO)

logging.getLogger("cavitymf").addHandler(log_handler)
logging.getLogger("cavitymf").setLevel(logging.INFO)

REQUIRED = {"reconstruction": ["solver", "c", "sample", "restart", "test_error", "failed"],
            "folds": ["solver", "fold", "test_error", "train_rmse", "sweeps",
                      "seconds"]}


# ---------------------------- Parse the arguments --------------------------- #

def get_parser():

    parser = argparse.ArgumentParser(prog="cavitymf summary")
    parser.add_argument("--kind", required=True, choices=sorted(REQUIRED),
                        help="the protocol the runs belong to")
    parser.add_argument("--runs", required=True, nargs="+",
                        help="runs tables written by cavitymf train")
    parser.add_argument("--traces", default=[], nargs="*",
                        help="traces tables written by cavitymf train")
    parser.add_argument("--threshold", default=SUCCESS_THRESHOLD, type=float,
                        help="rRMSE at or below which a run succeeds")
    parser.add_argument("--outdir", default=".", type=str,
                        help="the output directory")
    parser.add_argument("--prefix", default=None, type=str,
                        help="output file prefix (default: the kind)")
    parser.add_argument("--config", default=None, type=str,
                        help="a file of key=value lines setting any flag")

    return parser


def read_tables(paths):

    frames = [pd.read_csv(p) for p in paths]
    frames = [f for f in frames if len(f)]

    return pd.concat(frames, ignore_index=True) if frames else pd.DataFrame()


def main(argv=None):

    L.info("parsing arguments")

    parser = get_parser()
    args = parse_args_with_flag_file(parser, argv)

    L.info("Running with arguments:")
    print(args)

    try:
        runs = read_tables(args.runs)
        traces = read_tables(args.traces)
    except (OSError, pd.errors.ParserError) as err:
        L.error("could not read the tables: %s" % err)
        return 1

    missing = [c for c in REQUIRED[args.kind] if c not in runs.columns]
    if missing:
        L.error("the runs tables lack the columns: %s" % ", ".join(missing))
        return 1

    L.info("read %i runs and %i trace rows" % (len(runs), len(traces)))

    if args.kind == "reconstruction":
        runs = runs.rename(columns={"test_error": "rrmse"})
        summary = summarise_reconstruction(runs, args.threshold)
    else:
        runs = runs.rename(columns={"test_error": "test_rmse"})
        summary = summarise_folds(runs)

    prefix = args.prefix or args.kind

    write_result(ProtocolResult(summary, runs, traces), args.outdir, prefix)
    summarise_traces(traces).to_csv(os.path.join(args.outdir, prefix + ".curves.csv"),
                                    index=False)

    print(summary.to_string(index=False))

    L.info("complete")

    return 0


if __name__ == "__main__":
    sys.exit(main())
