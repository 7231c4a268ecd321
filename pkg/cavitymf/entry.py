'''
cavitymf.py - cavity-based matrix completion
============================================

:Tags: Matrix factorization

To run a single command, type::

    cavitymf <command> [options]

where <command> is one of generate, train, benchmark or summary.

To use a workflow, type::

    cavitymf <workflow> [workflow options] [workflow arguments]

For this message and a list of available commands and workflows type::

    cavitymf --help

To get help for a specific command or workflow, type::

    cavitymf <command> --help
'''

import glob
import importlib.util
import os
import re
import runpy
import sys

CODE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

SCRIPT_DIR = os.path.join(CODE_DIR, "python")

PIPELINE_DIR = os.path.dirname(os.path.abspath(__file__))


def print_list_in_columns(items, ncolumns):
    '''Return `items` laid out in `ncolumns` columns.'''

    if len(items) == 0:
        return ""

    width = max(len(x) for x in items) + 3
    nrows = -(-len(items) // ncolumns)

    padded = list(items) + [""] * (nrows * ncolumns - len(items))
    columns = [padded[x * nrows:(x + 1) * nrows] for x in range(ncolumns)]

    pattern = " ".join(["%-" + str(width) + "s"] * ncolumns)

    return "\n".join(pattern % row for row in zip(*columns))


def available(prefix, directory):

    return sorted(os.path.basename(x)[len(prefix):-len(".py")]
                  for x in glob.glob(os.path.join(directory, prefix + "*.py")))


def run_script(command, argv):
    '''Run python/mf_<command>.py with `argv` and return its exit status.'''

    script = os.path.join(SCRIPT_DIR, "mf_" + command + ".py")
    module = runpy.run_path(script, run_name="cavitymf_" + command)

    return module["main"](argv)


def run_pipeline(command, argv):

    pipeline = "pipeline_" + command
    path = os.path.join(PIPELINE_DIR, pipeline + ".py")

    # cgatcore and the parameter helpers read sys.argv
    sys.argv = [pipeline] + list(argv) + ["--pipeline-logfile=" + pipeline + ".log"]

    spec = importlib.util.spec_from_file_location(pipeline, path)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)

    return module.main(sys.argv)


def main(argv=None):

    if argv is None:
        argv = sys.argv[1:]

    scripts = available("mf_", SCRIPT_DIR)
    pipelines = available("pipeline_", PIPELINE_DIR)

    if len(argv) == 0 or argv[0] in ("--help", "-h"):
        print(globals()["__doc__"])
        print("The list of available commands is:\n")
        print("{}\n".format(print_list_in_columns(scripts, 3)))
        print("The list of available workflows is:\n")
        print("{}\n".format(print_list_in_columns(pipelines, 3)))
        return 0

    command = re.sub("-", "_", argv[0])

    if command in scripts:
        return run_script(command, argv[1:])
    elif command in pipelines:
        return run_pipeline(command, argv[1:])

    sys.stderr.write("cavitymf: unknown command '%s'; expected one of %s\n" %
                     (argv[0], ", ".join(scripts + pipelines)))
    return 2


if __name__ == "__main__":
    sys.exit(main())
