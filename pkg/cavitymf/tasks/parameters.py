'''
parameters.py
=============

Overview
--------

Helper functions for configuring the pipelines and the scripts.

* pipelines read a yml file: the default lives in cavitymf/yaml and a local
  copy is checked out with ``cavitymf <pipeline> config``
* scripts take argparse flags, any of which may also be set in a
  ``key=value`` file passed with ``--config``; flags given on the command
  line win

Functions
---------

'''


import argparse
import shutil
import os
import sys
from pathlib import Path
import logging

# ------------------------------ Set up logging ------------------------------ #

L = logging.getLogger(__name__)
log_handler = logging.StreamHandler(sys.stdout)
log_handler.setFormatter(logging.Formatter('%(asctime)s @tasks.parameters: %(message)s'))
log_handler.setLevel(logging.INFO)
L.addHandler(log_handler)
L.setLevel(logging.INFO)
L.propagate = False


# --------------------------------- Functions -------------------------------- #

def write_config_files(pipeline_path, general_path):
    '''
    Copy the default yaml configuration file

        cavitymf/yaml/pipeline_[name].yml

    into the working directory unless a local copy exists.
    '''

    src_dir = os.path.join(Path(pipeline_path).parents[0], "yaml")
    dest = os.path.basename(pipeline_path).replace(".py", "") + ".yml"

    if os.path.exists(dest):
        L.warning("file `%s` already exists - skipped" % dest)
        return

    src = os.path.join(src_dir, dest)

    if not os.path.exists(src):
        raise ValueError("default config file `%s` not found in %s" %
                         (dest, src_dir))

    shutil.copyfile(src, dest)
    L.info("created new configuration file `%s` " % dest)


def get_parameter_file(pipeline_path):
    '''
    Return the local yml file when the pipeline is being made and the
    packaged default otherwise (config, show and documentation builds).
    '''

    pipeline_name = os.path.basename(pipeline_path)
    default_yml = os.path.join(os.path.dirname(pipeline_path), "yaml",
                               pipeline_name.replace(".py", ".yml"))

    if len(sys.argv) > 1 and sys.argv[1] == "make":

        yml_file = pipeline_name.replace(".py", ".yml")
        L.info("Using local yml file: " + yml_file)

        if not os.path.exists(yml_file):
            cmd = pipeline_name.replace("pipeline_", "").split(".")[0]
            raise ValueError('local configuration file missing. Please run '
                             '"cavitymf ' + cmd + ' config" to check out a '
                             'local copy of the default file')

        return yml_file

    if len(sys.argv) > 1 and sys.argv[1] not in ["config", "show", "-M", "-b", "-T"]:
        raise ValueError('pipeline command not recognised: ' + sys.argv[1])

    if not os.path.exists(default_yml):
        raise ValueError("default configuration file missing")

    return default_yml


def read_flag_file(path):
    '''
    Read ``key=value`` lines into a dict. Blank lines and lines starting
    with "#" are skipped; "-" in keys is read as "_".

    Raises:
        ValueError: on a line without "=".
    '''

    flags = {}

    with open(path, "r") as inf:
        for number, line in enumerate(inf, start=1):

            line = line.strip()
            if not line or line.startswith("#"):
                continue

            if "=" not in line:
                raise ValueError("%s line %i: expected key=value, got %r" %
                                 (path, number, line))

            key, value = line.split("=", 1)
            flags[key.strip().lstrip("-").replace("-", "_")] = value.strip()

    return flags


def parse_args_with_flag_file(parser, argv=None):
    '''
    Parse `argv` with `parser`, taking defaults from the file named by
    ``--config`` when it is given. Values from the file go through the
    argument's type conversion; unknown keys are a usage error.
    '''

    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    config_path = pre.parse_known_args(argv)[0].config

    if config_path:

        actions = {}
        for action in parser._actions:
            actions[action.dest] = action
            for option in action.option_strings:
                actions[option.lstrip("-").replace("-", "_")] = action
        defaults = {}

        for key, value in read_flag_file(config_path).items():

            if key not in actions or key == "config":
                parser.error("unknown key in %s: %s" % (config_path, key))

            action = actions[key]
            key = action.dest

            if action.const is True and action.nargs == 0:
                defaults[key] = value.lower() in ("1", "true", "yes")
            elif action.type is not None:
                try:
                    defaults[key] = action.type(value)
                except (TypeError, ValueError):
                    parser.error("invalid value for %s in %s: %s" %
                                 (key, config_path, value))
            else:
                defaults[key] = value

        parser.set_defaults(**defaults)

        # values from the file satisfy required flags
        for action in parser._actions:
            if action.dest in defaults:
                action.required = False

        L.info("read defaults from " + config_path)

    return parser.parse_args(argv)


def add_solver_arguments(parser, lam=1e-2):
    '''Add the SolverConfig and SgdSchedule flags shared by the scripts.'''

    parser.add_argument("--rank", default=10, type=int,
                        help="the rank R of the factorization")
    parser.add_argument("--lambda", dest="lam", default=lam, type=float,
                        help="the regularization parameter")
    parser.add_argument("--max-sweeps", default=200, type=int,
                        help="the maximum number of sweeps (epochs for sgd)")
    parser.add_argument("--tol", default=1e-6, type=float,
                        help="stop when the relative factor change falls below this")
    parser.add_argument("--seed", default=1, type=int,
                        help="the root seed")
    parser.add_argument("--inner-iterations", default=1, type=int,
                        help="repeats of each cbmf/acbmf half-sweep")
    parser.add_argument("--init-scale", default=None, type=float,
                        help="standard deviation of the initial factors (default 1/sqrt(R))")
    parser.add_argument("--eta0", default=0.05, type=float,
                        help="the initial sgd learning rate")
    parser.add_argument("--decay", default=0.1, type=float,
                        help="the inverse-time decay of the sgd learning rate")
    parser.add_argument("--schedule", default="inverse_time",
                        choices=["constant", "inverse_time"],
                        help="the sgd learning-rate rule")
    parser.add_argument("--log-every", default=10, type=int,
                        help="log every n sweeps")
    parser.add_argument("--config", default=None, type=str,
                        help="a file of key=value lines setting any flag")


def solver_config_from_args(args):
    '''Build the SolverConfig described by parsed solver flags.'''

    from cavitymf.tasks.core import SgdSchedule, SolverConfig

    return SolverConfig(rank=args.rank,
                        lam=args.lam,
                        max_sweeps=args.max_sweeps,
                        convergence_tol=args.tol,
                        seed=args.seed,
                        inner_iterations=args.inner_iterations,
                        sgd=SgdSchedule(eta0=args.eta0, decay=args.decay,
                                        rule=args.schedule),
                        init_scale=args.init_scale,
                        log_every=args.log_every)
