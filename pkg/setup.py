import sys
from setuptools import setup, find_packages

# collect version
sys.path.insert(0, "cavitymf")
import version

version = version.__version__

if sys.version_info < (3, 8):
    raise SystemExit("""cavitymf requires Python 3.8 or later.""")

classifiers = """
Development Status :: 3 - Alpha
Intended Audience :: Science/Research
License :: OSI Approved :: MIT License
Programming Language :: Python :: 3
Topic :: Scientific/Engineering :: Mathematics
Operating System :: POSIX
Operating System :: MacOS
"""

setup(
    name='cavitymf',
    version=version,
    description='cavitymf: cavity-based low-rank matrix completion',
    author='cavitymf developers',
    license="MIT",
    platforms=["any"],
    keywords="matrix completion, matrix factorization, message passing",
    long_description='''cavitymf : cavity-based matrix factorization (CBMF, ACBMF)
with ALS and SGD baselines and benchmark pipelines''',
    classifiers=[_f for _f in classifiers.split("\n") if _f],
    packages=find_packages(exclude=["tests"]),
    package_data={"cavitymf": ["yaml/*.yml"]},
    include_package_data=True,
    python_requires=">=3.8",
    install_requires=["numpy", "scipy", "pandas", "numba", "pyyaml",
                      "ruffus", "cgatcore"],
    extras_require={"test": ["pytest", "pycodestyle"],
                    "docs": ["sphinx", "sphinx_rtd_theme"]},
    entry_points={
        "console_scripts": ["cavitymf = cavitymf.entry:main"]
    },
    zip_safe=False,
    test_suite="tests",
)
