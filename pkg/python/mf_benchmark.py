'''
mf_benchmark.py
===============

Run one of the two benchmark protocols in-process.

synthetic
    for every c in --c-list generate --samples instances and run --restarts
    seeded initialisations of every solver on each; reports the
    reconstruction rate (best restart rRMSE <= --threshold) per (solver, c)

movielens
    k-fold cross validation of the test RMSE on a rating file; reports the
    RMSE per fold and the mean, plus the mean RMSE-versus-sweep curves

Outputs <prefix>.summary.csv, <prefix>.runs.csv, <prefix>.traces.csv and
<prefix>.curves.csv in --outdir.

Usage::

    cavitymf benchmark synthetic --c-list 10,20,30,40,60 --samples 10 --restarts 5
    cavitymf benchmark movielens --input ratings.dat --folds 10 --lambda 3
'''

import argparse
import logging
import os
import sys

from cavitymf.tasks.core import DataError, UsageError
from cavitymf.tasks.datagen import SyntheticConfig
from cavitymf.tasks.evaluate import (SUCCESS_THRESHOLD, movielens_protocol,
                                     reconstruction_protocol, summarise_traces,
                                     write_result)
from cavitymf.tasks.ingest import (FORMATS, RATING_SETS, parse_ratings,
                                   validate_ratings)
from cavitymf.tasks.parameters import (add_solver_arguments,
                                       parse_args_with_flag_file,
                                       solver_config_from_args)
from cavitymf.tasks.solvers import SOLVERS

# ---------------------------- Set up the logging ---------------------------- #

L = logging.getLogger(__name__)
log_handler = logging.StreamHandler(sys.stdout)
log_handler.setFormatter(logging.Formatter('%(asctime)s %(message)s'))
log_handler.setLevel(logging.INFO)
L.addHandler(log_handler)
L.setLevel(logging.INFO)

logging.getLogger("cavitymf").addHandler(log_handler)
logging.getLogger("cavitymf").setLevel(logging.INFO)


# ---------------------------- Parse the arguments --------------------------- #

def comma_list(value):
    return [x.strip() for x in value.split(",") if x.strip()]


def get_parser():

    parser = argparse.ArgumentParser(prog="cavitymf benchmark")
    parser.add_argument("protocol", choices=["synthetic", "movielens"],
                        help="the protocol to run")
    parser.add_argument("--solver", default="als,cbmf,acbmf", type=comma_list,
                        help="comma separated solvers (%s)" % ",".join(sorted(SOLVERS)))
    parser.add_argument("--threads", default=1, type=int,
                        help="number of worker processes")
    parser.add_argument("--outdir", default=".", type=str,
                        help="the output directory")
    parser.add_argument("--prefix", default=None, type=str,
                        help="output file prefix (default: the protocol name)")

    synthetic = parser.add_argument_group("synthetic protocol")
    synthetic.add_argument("--n", default=500, type=int, help="number of rows N")
    synthetic.add_argument("--m", default=1000, type=int, help="number of columns M")
    synthetic.add_argument("--noise-var", default=0.09, type=float,
                           help="variance of the Gaussian noise")
    synthetic.add_argument("--c-list", default="10,20,30,40,60", type=comma_list,
                           help="comma separated mean column degrees")
    synthetic.add_argument("--samples", default=10, type=int,
                           help="instances per c")
    synthetic.add_argument("--restarts", default=5, type=int,
                           help="seeded initialisations per instance")
    synthetic.add_argument("--threshold", default=SUCCESS_THRESHOLD, type=float,
                           help="rRMSE at or below which a run succeeds")

    movielens = parser.add_argument_group("movielens protocol")
    movielens.add_argument("--input", default=None, type=str,
                           help="the rating file")
    movielens.add_argument("--format", default="auto",
                           choices=["auto"] + list(FORMATS),
                           help="format of the rating file")
    movielens.add_argument("--dataset", default=None, choices=sorted(RATING_SETS),
                           help="check ratings against this dataset's rating set")
    movielens.add_argument("--folds", default=10, type=int,
                           help="number of folds")
    movielens.add_argument("--split-seed", default=1, type=int,
                           help="the seed of the fold partition")

    add_solver_arguments(parser)

    return parser


def main(argv=None):

    L.info("parsing arguments")

    parser = get_parser()
    args = parse_args_with_flag_file(parser, argv)

    L.info("Running with arguments:")
    print(args)

    for tag in args.solver:
        if tag not in SOLVERS:
            parser.error("unknown solver %s, expected one of %s" %
                         (tag, ", ".join(sorted(SOLVERS))))

    try:
        config = solver_config_from_args(args)

        if args.protocol == "synthetic":

            try:
                c_values = [float(c) for c in args.c_list]
            except ValueError:
                parser.error("--c-list must be comma separated numbers")

            if not c_values:
                parser.error("--c-list is empty")

            synthetic = SyntheticConfig(n_rows=args.n, n_cols=args.m,
                                        rank=args.rank, c=min(c_values),
                                        noise_var=args.noise_var,
                                        seed=args.seed)

            for c in c_values:
                SyntheticConfig(n_rows=args.n, n_cols=args.m, rank=args.rank, c=c)

            result = reconstruction_protocol(c_values, args.samples, args.restarts,
                                             args.solver, config, synthetic,
                                             threshold=args.threshold,
                                             threads=args.threads)
        else:

            if args.input is None:
                parser.error("the movielens protocol needs --input")

            records = parse_ratings(args.input,
                                    None if args.format == "auto" else args.format)

            if args.dataset is not None:
                validate_ratings(records, args.dataset)

            result = movielens_protocol(records, args.folds, args.solver, config,
                                        seed=args.split_seed,
                                        threads=args.threads)

    except DataError as err:
        L.error("could not load the data: %s" % err)
        return 1
    except UsageError as err:
        parser.error(str(err))
    except OSError as err:
        L.error("benchmark failed: %s" % err)
        return 1

    prefix = args.prefix or args.protocol

    write_result(result, args.outdir, prefix)
    summarise_traces(result.traces).to_csv(
        os.path.join(args.outdir, prefix + ".curves.csv"), index=False)

    print(result.summary.to_string(index=False))

    L.info("complete")

    return 0


if __name__ == "__main__":
    sys.exit(main())
