'''
=====================
pipeline_synthetic.py
=====================

Overview
========

This pipeline measures how often each solver reconstructs a noisy low-rank
matrix from a sparse random sample of its entries, as a function of the mean
number c of observations per column.

For every c in the configured list, `samples` instances are generated. Every
configured solver is then trained on every instance from `restarts` seeded
initialisations. An instance counts as reconstructed when the best restart
reaches a relative error (rRMSE, over all entries of the ground truth) at or
below the threshold.

Configuration
-------------

The pipeline requires a configured :file:`pipeline_synthetic.yml` file. A
default version can be obtained by executing: ::

   cavitymf synthetic config

Running the pipeline
--------------------

::

   cavitymf synthetic make full -v5 -p 20


Pipeline output
===============

* instances.dir/c<c>_s<sample>/ - the generated instances
* train.dir/c<c>_s<sample>/<solver>.{runs,traces}.csv - per-restart results
* summary.dir/reconstruction.summary.csv - reconstruction rate per (solver, c)
* summary.dir/reconstruction.curves.csv - mean rRMSE versus sweep

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
from cavitymf.tasks.evaluate import derived_seed

# -------------------------- Pipeline Configuration -------------------------- #

# Override function to collect config files
P.control.write_config_files = T.write_config_files

# load options from the yml file
P.parameters.HAVE_INITIALIZED = False
PARAMS = P.get_parameters(T.get_parameter_file(__file__))

# set the location of the code directory
PARAMS["cavitymf_code_dir"] = Path(__file__).parents[1]


def c_values():
    return [x.strip() for x in str(PARAMS["synthetic_c_list"]).split(",") if x.strip()]


def solvers():
    return [x.strip() for x in str(PARAMS["solver_list"]).split(",") if x.strip()]


def instance_name(c, sample):
    return "c%s_s%i" % (c, sample)


# ------------------------------ Pipeline Tasks ------------------------------ #

def generate_jobs():

    for c in c_values():
        for sample in range(int(PARAMS["synthetic_samples"])):
            yield (None, os.path.join("instances.dir", instance_name(c, sample),
                                      "generate.sentinel"))


@files(generate_jobs)
def generate(infile, outfile):
    '''
    Generate one synthetic instance. The instance seed depends on the sample
    number only, so every c shares the same true factors.
    '''

    t = T.setup(infile, outfile, PARAMS, memory=PARAMS["resources_memory"])

    c, sample = os.path.basename(t.outdir)[1:].split("_s")
    seed = derived_seed(int(PARAMS["synthetic_seed"]), int(sample))

    statement = '''python %(cavitymf_code_dir)s/python/mf_generate.py
                   --n %(synthetic_n_rows)s
                   --m %(synthetic_n_cols)s
                   --rank %(synthetic_rank)s
                   --c %(c)s
                   --noise-var %(synthetic_noise_var)s
                   --seed %(seed)s
                   --outdir %(outdir)s
                   &> %(log_file)s
                ''' % dict(PARAMS, **t.var, **locals())

    P.run(statement, **t.resources)

    IOTools.touch_file(outfile)


def train_jobs():

    for c in c_values():
        for sample in range(int(PARAMS["synthetic_samples"])):
            name = instance_name(c, sample)
            for solver in solvers():
                yield (os.path.join("instances.dir", name, "generate.sentinel"),
                       os.path.join("train.dir", name, solver + ".sentinel"))


@follows(generate)
@files(train_jobs)
def train(infile, outfile):
    '''
    Train one solver on one instance from `solver_restarts` seeded
    initialisations, monitoring the rRMSE against the ground truth.
    '''

    t = T.setup(infile, outfile, PARAMS, memory=PARAMS["resources_memory"],
                cpu=PARAMS["resources_ncpu"])

    solver = t.outname[:-len(".sentinel")]
    c, sample = os.path.basename(t.outdir)[1:].split("_s")

    statement = '''python %(cavitymf_code_dir)s/python/mf_train.py
                   --solver %(solver)s
                   --truth %(indir)s
                   --restarts %(solver_restarts)s
                   --rank %(synthetic_rank)s
                   --lambda %(solver_lambda)s
                   --max-sweeps %(solver_max_sweeps)s
                   --tol %(solver_tol)s
                   --inner-iterations %(solver_inner_iterations)s
                   --seed %(solver_seed)s
                   --eta0 %(sgd_eta0)s
                   --decay %(sgd_decay)s
                   --schedule %(sgd_schedule)s
                   --label c=%(c)s
                   --label sample=%(sample)s
                   --keep-going
                   --outdir %(outdir)s
                   --prefix %(solver)s
                   &> %(log_file)s
                ''' % dict(PARAMS, **t.var, **locals())

    P.run(statement, **t.resources)

    IOTools.touch_file(outfile)


@merge(train, "summary.dir/reconstruction.sentinel")
def summary(infiles, outfile):
    '''
    Reconstruction rates per solver and c, and the mean rRMSE-versus-sweep
    curves.
    '''

    t = T.setup(None, outfile, PARAMS)

    runs = " ".join(x.replace(".sentinel", ".runs.csv") for x in infiles)
    traces = " ".join(x.replace(".sentinel", ".traces.csv") for x in infiles
                      if os.path.exists(x.replace(".sentinel", ".traces.csv")))

    statement = '''python %(cavitymf_code_dir)s/python/mf_summary.py
                   --kind reconstruction
                   --runs %(runs)s
                   --traces %(traces)s
                   --threshold %(summary_threshold)s
                   --outdir %(outdir)s
                   --prefix reconstruction
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
