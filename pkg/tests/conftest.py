"""Shared fixtures and the acceptance-line reporter."""

import math

import numpy as np
import pytest

from selfsim import HomogeneousIfs, Similarity, uniform_weights

ACCEPTANCE_LINES = []


def _record(num, passed, detail):
    line = f"ACCEPTANCE {num}: {'PASS' if passed else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


@pytest.fixture
def acceptance():
    """Recorder for one acceptance criterion outcome line."""
    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def cantor13():
    ifs = HomogeneousIfs(1, Similarity(ratio=1 / 3, sign=1),
                         np.array([0.0, 2 / 3]), label="cantor13")
    return ifs, uniform_weights(2)


@pytest.fixture
def cantor14():
    ifs = HomogeneousIfs(1, Similarity(ratio=0.25, sign=1),
                         np.array([0.0, 0.75]), label="cantor14")
    return ifs, uniform_weights(2)


@pytest.fixture
def cantor15():
    ifs = HomogeneousIfs(1, Similarity(ratio=0.2, sign=1),
                         np.array([0.0, 0.8]), label="cantor15")
    return ifs, uniform_weights(2)


@pytest.fixture
def biased13():
    ifs = HomogeneousIfs(1, Similarity(ratio=1 / 3, sign=1),
                         np.array([0.0, 2 / 3]), label="biased13")
    return ifs, np.array([0.25, 0.75])


@pytest.fixture
def lebesgue_unit():
    """lambda = 1/2 with translations 0, 1/2: Lebesgue measure on [0, 1]."""
    ifs = HomogeneousIfs(1, Similarity(ratio=0.5, sign=1),
                         np.array([0.0, 0.5]), label="lebesgue")
    return ifs, uniform_weights(2)


@pytest.fixture
def golden_bc():
    """Bernoulli convolution at the reciprocal golden ratio, a = (-1, 1)."""
    lam = (math.sqrt(5.0) - 1.0) / 2.0
    ifs = HomogeneousIfs(1, Similarity(ratio=lam, sign=1),
                         np.array([-1.0, 1.0]), label="bc_golden")
    return ifs, uniform_weights(2)


@pytest.fixture
def four_corner():
    tr = np.array([[0.0, 0.0], [2 / 3, 0.0], [0.0, 2 / 3], [2 / 3, 2 / 3]])
    ifs = HomogeneousIfs(2, Similarity(ratio=1 / 3, alpha=0.0), tr,
                         label="four_corner")
    return ifs, uniform_weights(4)


@pytest.fixture
def ssc_factory():
    """Random two-map strongly separated system on [0, 1]."""

    def make(rng):
        lam = float(rng.uniform(0.2, 0.45))
        w = float(rng.uniform(0.2, 0.8))
        ifs = HomogeneousIfs(1, Similarity(ratio=lam, sign=1),
                             np.array([0.0, 1.0 - lam]), label="ssc")
        return ifs, np.array([w, 1.0 - w])

    return make
