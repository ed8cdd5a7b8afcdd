"""Shared fixtures: the reference operating point and its converged runs.

The expensive time-domain runs are session-scoped so the whole suite
shares one cold-start convergence per parameter set.
"""

import time

import pytest

from zetastep import SimConfig, run_to_steady_state, validate_params

PAPER_RAW = {
    "vin": 30.0, "duty": 0.6, "n": 2.0,
    "l1": 47e-6, "lm": 300e-6, "lk": 1e-6,
    "c1": 47e-6, "c2": 3.3e-6, "c3": 3.3e-6, "c4": 47e-6,
    "rl": 240.0, "fs": 40e3,
}

# minimum magnetizing inductance at the reference point with I_o = 1 A,
# frozen from a hand evaluation: 0.36*30/(2*2.2*1*40e3)
LM_MIN_REF = 6.136363636363636e-05


@pytest.fixture(scope="session")
def paper_params():
    return validate_params(PAPER_RAW)


@pytest.fixture(scope="session")
def paper_run(paper_params):
    """Cold-start converged run at the reference point, with its wall time."""
    t0 = time.time()
    res = run_to_steady_state(paper_params, SimConfig())
    wall = time.time() - t0
    return res, wall


@pytest.fixture(scope="session")
def run_lm_double():
    p = validate_params({**PAPER_RAW, "lm": 2.0 * LM_MIN_REF})
    return run_to_steady_state(p, SimConfig())


@pytest.fixture(scope="session")
def run_lm_half():
    p = validate_params({**PAPER_RAW, "lm": 0.5 * LM_MIN_REF})
    return run_to_steady_state(p, SimConfig())
