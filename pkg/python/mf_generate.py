'''
mf_generate.py
==============

Generate a synthetic low-rank instance and write it to a directory
(observed.tsv, truth.txt and instance.yml).

Usage::

    cavitymf generate --n 500 --m 1000 --rank 10 --c 30 --noise-var 0.09 --seed 1 --outdir inst
'''

import argparse
import logging
import sys

from cavitymf.tasks.core import DataError, UsageError
from cavitymf.tasks.datagen import (SyntheticConfig, export_instance, generate,
                                    identifiability_threshold)
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


# ---------------------------- Parse the arguments --------------------------- #

def get_parser():

    parser = argparse.ArgumentParser(prog="cavitymf generate")
    parser.add_argument("--n", default=500, type=int, help="number of rows N")
    parser.add_argument("--m", default=1000, type=int, help="number of columns M")
    parser.add_argument("--rank", default=10, type=int, help="true rank R")
    parser.add_argument("--c", default=30.0, type=float,
                        help="mean number of observed entries per column")
    parser.add_argument("--noise-var", default=0.09, type=float,
                        help="variance of the Gaussian noise")
    parser.add_argument("--seed", default=1, type=int, help="the instance seed")
    parser.add_argument("--outdir", required=True, type=str,
                        help="directory for the instance files")
    parser.add_argument("--config", default=None, type=str,
                        help="a file of key=value lines setting any flag")

    return parser


def main(argv=None):

    L.info("parsing arguments")

    parser = get_parser()
    args = parse_args_with_flag_file(parser, argv)

    L.info("Running with arguments:")
    print(args)

    try:
        config = SyntheticConfig(n_rows=args.n, n_cols=args.m, rank=args.rank,
                                 c=args.c, noise_var=args.noise_var,
                                 seed=args.seed)
    except UsageError as err:
        parser.error(str(err))

    try:
        instance = generate(config)
        export_instance(instance, args.outdir)
    except (DataError, OSError) as err:
        L.error("generate failed: %s" % err)
        return 1

    L.info("observed %i of %i entries (threshold R(N+M) = %i)" %
           (instance.observed.n_entries, config.n_rows * config.n_cols,
            identifiability_threshold(config)))

    L.info("complete")

    return 0


if __name__ == "__main__":
    sys.exit(main())
