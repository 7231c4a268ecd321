"""
setup.py
========

A class to help set up pipeline tasks. The task object:

* works out the job resources (threads and memory) to pass to ``P.run()``
* provides access to variables by name or via the ``.var`` dictionary
* creates the output folder of the task
* names the log file and the output prefix of ".sentinel" outfiles

"""

import math
import os


def parse_mem(memory):
    '''
    Return the memory request in gigabytes. Plain numbers are gigabytes,
    "G" and "M" suffixes are recognised; empty values give the 4G default.
    '''

    if memory in [None, "None", "none", False, "False", "false", ""]:
        return 4

    if isinstance(memory, (int, float)):
        return memory

    memory = str(memory).strip().upper().rstrip("B")

    if memory.isnumeric():
        return int(memory)
    elif memory.endswith("G") and memory[:-1].isnumeric():
        return int(memory[:-1])
    elif memory.endswith("M") and memory[:-1].isnumeric():
        return int(memory[:-1]) / 1000

    raise ValueError('memory request "%s" not recognised. Please give the '
                     'memory in gigabytes (G) or megabytes (M), e.g. "4G" or '
                     '"4000M"' % memory)


class setup():
    '''
    Routine setup of a pipeline task.

    Args:
        infile: The task infile path or None
        outfile: The task outfile path (typically ends with ".sentinel")
        PARAMS: The pipeline parameters
        memory: The total memory needed by the task, e.g. "4G" or "500M"
        cpu: The number of cores (used for the solver worker processes)
        make_outdir: Create the directory of outfile. Default = True.

    Attributes:
        job_threads, job_memory: the cluster request
        resources: {"job_threads": .., "job_memory": ..} for ``P.run()``
        outdir, outname: dirname and basename of outfile
        indir, inname: dirname and basename of infile (if given)
        log_file, out_prefix: for ".sentinel" outfiles, the outfile with the
            suffix replaced by ".log" and removed
        var: the attribute dictionary, for statement interpolation
    '''

    def __init__(self, infile, outfile, PARAMS, memory="4G", cpu=1,
                 make_outdir=True):

        gb_requested = parse_mem(memory)

        # cgatcore expects memory per core
        self.job_threads = int(cpu)
        self.job_memory = str(int(math.ceil(gb_requested / float(cpu)))) + "G"

        mpc = PARAMS.get("resources_mempercore", False)
        if mpc not in [None, False, "False", "false"]:
            self.job_threads = max(self.job_threads,
                                   int(math.ceil(gb_requested / parse_mem(mpc))))

        self.resources = {"job_memory": self.job_memory,
                          "job_threads": self.job_threads}

        self.outdir = os.path.dirname(outfile)
        self.outname = os.path.basename(outfile)

        if infile is not None:
            self.indir = os.path.dirname(infile)
            self.inname = os.path.basename(infile)

        if make_outdir and self.outdir and not os.path.exists(self.outdir):
            os.makedirs(self.outdir)

        if outfile.endswith(".sentinel"):
            self.log_file = outfile.replace(".sentinel", ".log")
            self.out_prefix = outfile[:-len(".sentinel")]

        self.var = self.__dict__
