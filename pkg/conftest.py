"""
Shared fixtures for the selective zero-shot test suite.
"""
import logging

import numpy as np
import pytest

from selective_zsc.models import HyperParams, SolverSettings, SynthConfig
from selective_zsc.synth import synth_generate

logging.getLogger("selective_zsc").setLevel(logging.WARNING)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_config():
    """A synthetic benchmark small enough for many fits per test"""
    return SynthConfig(
        seed=3,
        k_o=20,
        k_d=6,
        k_l=6,
        k_r=3,
        classes_seen=6,
        classes_unseen=3,
        samples_per_class=8,
        noise=0.05,
        attribute_noise=0.3,
    )


@pytest.fixture
def small_data(small_config):
    return synth_generate(small_config)


@pytest.fixture
def fast_params():
    return HyperParams(k_r=3, solver=SolverSettings(max_iters=25, rel_tol=1e-6))


@pytest.fixture
def six_samples():
    """Confidences that rank 4 correct samples first, then 2 wrong ones"""
    confidences = [0.9, 0.8, 0.7, 0.6, 0.5, 0.4]
    correct = [True, True, True, True, False, False]
    return confidences, correct
