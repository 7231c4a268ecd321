'''
tasks.py
========

The :mod:`tasks` module holds the library behind the cavitymf scripts and
pipelines.

Core components:

* `parameters`_
* `setup`_
* `core`_
* `trace`_

Solvers:

* `als`_
* `sgd`_
* `cbmf`_
* `acbmf`_
* `solvers`_

Data and evaluation:

* `datagen`_
* `ingest`_
* `evaluate`_

'''


# import the pipeline helpers into the top-level namespace

from cavitymf.tasks.setup import *
from cavitymf.tasks.parameters import *
