'''
=====================
pipeline_movielens.py
=====================

Overview
========

This pipeline runs k-fold cross validation of the configured solvers on a
MovieLens rating file: the ratings are split at random into k groups and,
for every group, the factors are trained on the other k - 1 groups and the
RMSE is measured on the held-out group after every sweep.

Configuration
-------------

The pipeline requires a configured :file:`pipeline_movielens.yml` file. A
default version can be obtained by executing: ::

   cavitymf movielens config

Input
-----

A rating file in the MovieLens 1M/10M ``user::item::rating::timestamp``
format or the 20M ``userId,movieId,rating,timestamp`` CSV format. The
datasets are not downloaded by the pipeline.

Running the pipeline
--------------------

::

   cavitymf movielens make full -v5 -p 10


Pipeline output
===============

* train.dir/<solver>/fold<k>.{runs,traces,factors}.* - per-fold results
* summary.dir/folds.summary.csv - test RMSE per (solver, fold) and the mean
* summary.dir/folds.curves.csv - mean test RMSE versus sweep per solver

Code
====

'''

from ruffus import *
import sys
import os
from pathlib import Path

from cgatcore import pipeline as P
import cgatcore.iotools as IOTools

import cavitymf.tasks as T

# -------------------------- Pipeline Configuration -------------------------- #

# Override function to collect config files
P.control.write_config_files = T.write_config_files

# load options from the yml file
P.parameters.HAVE_INITIALIZED = False
PARAMS = P.get_parameters(T.get_parameter_file(__file__))

# set the location of the code directory
PARAMS["cavitymf_code_dir"] = Path(__file__).parents[1]


def solvers():
    return [x.strip() for x in str(PARAMS["solver_list"]).split(",") if x.strip()]


# ------------------------------ Pipeline Tasks ------------------------------ #

def fold_jobs():

    for solver in solvers():
        for fold in range(int(PARAMS["cv_folds"])):
            yield (PARAMS["ratings_path"],
                   os.path.join("train.dir", solver, "fold%i.sentinel" % fold))


@files(fold_jobs)
def train(infile, outfile):
    '''
    Train one solver with one fold held out, recording the test RMSE of
    every sweep.
    '''

    t = T.setup(infile, outfile, PARAMS, memory=PARAMS["resources_memory"],
                cpu=PARAMS["resources_ncpu"])

    solver = os.path.basename(t.outdir)
    fold = int(t.outname[len("fold"):-len(".sentinel")])

    dataset = ""
    if PARAMS["ratings_dataset"] not in [None, False, "False", "false", ""]:
        dataset = "--dataset " + str(PARAMS["ratings_dataset"])

    statement = '''python %(cavitymf_code_dir)s/python/mf_train.py
                   --solver %(solver)s
                   --input %(infile)s
                   --format %(ratings_format)s
                   %(dataset)s
                   --folds %(cv_folds)s
                   --fold %(fold)s
                   --split-seed %(cv_seed)s
                   --rank %(solver_rank)s
                   --lambda %(solver_lambda)s
                   --max-sweeps %(solver_max_sweeps)s
                   --tol %(solver_tol)s
                   --inner-iterations %(solver_inner_iterations)s
                   --seed %(solver_seed)s
                   --eta0 %(sgd_eta0)s
                   --decay %(sgd_decay)s
                   --schedule %(sgd_schedule)s
                   --label fold=%(fold)s
                   --keep-going
                   --outdir %(outdir)s
                   --prefix fold%(fold)s
                   &> %(log_file)s
                ''' % dict(PARAMS, **t.var, **locals())

    P.run(statement, **t.resources)

    IOTools.touch_file(outfile)


@merge(train, "summary.dir/folds.sentinel")
def summary(infiles, outfile):
    '''
    Mean test RMSE per solver and the RMSE-versus-sweep curves.
    '''

    t = T.setup(None, outfile, PARAMS)

    runs = " ".join(x.replace(".sentinel", ".runs.csv") for x in infiles)
    traces = " ".join(x.replace(".sentinel", ".traces.csv") for x in infiles
                      if os.path.exists(x.replace(".sentinel", ".traces.csv")))

    statement = '''python %(cavitymf_code_dir)s/python/mf_summary.py
                   --kind folds
                   --runs %(runs)s
                   --traces %(traces)s
                   --outdir %(outdir)s
                   --prefix folds
                   &> %(log_file)s
                ''' % dict(PARAMS, **t.var, **locals())

    P.run(statement, **t.resources)

    IOTools.touch_file(outfile)


# ---------------------- full target: to run all tasks ----------------------- #

@follows(summary)
def full():
    pass


def main(argv=None):
    if argv is None:
        argv = sys.argv
    P.main(argv)


if __name__ == "__main__":
    sys.exit(P.main(sys.argv))
