'''test_style
=============

Purpose
-------

Runs pycodestyle (pep8) style tests over the package and the scripts.

This script is best run within pytest::

   pytest tests/test_style.py

'''
import glob
import os
import unittest

import pycodestyle

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

# DIRECTORIES to examine
EXPRESSIONS = (
    ('FirstLevel', 'cavitymf/*.py'),
    ('SecondLevel', 'cavitymf/tasks/*.py'),
    ('Scripts', 'python/*.py'))

# Codes to ignore in the pycodestyle BaseReport
IGNORE = set(('E101',  # indentation contains mixed spaces and tabs
              'E122',  # continuation line missing indentation or outdented
              'E124',  # closing bracket does not match visual indentation
              'E127',  # continuation line over-indented for visual indent
              'E128',  # continuation line under-indented for visual indent
              'E131',  # continuation line unaligned for hanging indent
              'E201',  # whitespace after '('
              'E202',  # whitespace before ')'
              'E265',  # block comment should start with '# '
              'E501',  # line too long (82 > 79 characters)
              'E502',  # the backslash is redundant between brackets
              'E731',  # do not assign a lambda expression, use a def
              'W191',
              'W291',
              'W293',
              'W391',
              'W503',  # line break before binary operator
              'W504',  # line break after binary operator
              'files',
              'directories',
              'physical lines',
              'logical lines',))


def check_style(filename):
    '''Return the counts of the style violations found in filename.'''

    p = pycodestyle.StyleGuide(quiet=True)
    report = p.check_files([filename])

    # count errors/warning excluding
    # those to ignore
    return ['%s:%i' % (x, y) for x, y
            in list(report.counters.items()) if x not in IGNORE]


class TestStyle(unittest.TestCase):

    def test_style(self):

        for label, expression in EXPRESSIONS:

            files = sorted(glob.glob(os.path.join(ROOT, expression)))

            for f in files:
                if os.path.isdir(f):
                    continue
                with self.subTest(label=label, file=os.path.basename(f)):
                    found = check_style(f)
                    self.assertEqual(found, [], msg='pep8 style violations: %s' %
                                     ','.join(found))


if __name__ == "__main__":
    unittest.main()
