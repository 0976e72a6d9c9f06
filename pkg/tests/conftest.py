"""Shared fixtures."""

import os
import tempfile

# keep test runs from writing logs and artifacts into the repository
os.environ.setdefault('GN_LAB_LOG_DIR', tempfile.mkdtemp(prefix='gn_lab_logs_'))
os.environ.setdefault('GN_LAB_OUTPUT_ROOT', tempfile.mkdtemp(prefix='gn_lab_out_'))

import pytest  # noqa: E402

from gn_lab.gn_discrete import run  # noqa: E402
from gn_lab.kernel import Kernel  # noqa: E402
from gn_lab.seeding import make_rng  # noqa: E402


@pytest.fixture
def p2():
    return Kernel.power(2.0)


@pytest.fixture
def p175():
    return Kernel.power(1.75)


@pytest.fixture
def random_trees():
    """Trees from short chains at a few exponents, fixed seeds."""
    trees = []
    for seed, (p, m) in enumerate([(0.5, 10), (1.0, 25), (1.5, 49), (2.0, 30), (0.8, 49)]):
        tree, _ = run(Kernel.power(p), m, make_rng(seed))
        trees.append(tree)
    return trees
