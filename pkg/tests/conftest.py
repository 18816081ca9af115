import numpy as np
import pytest

from followup.dynamics import DiseaseModel
from followup.params import ModelParams


@pytest.fixture(scope="session")
def model():
    """Default calibration."""
    return DiseaseModel()


@pytest.fixture(scope="session")
def frozen_model():
    """No jumps at all: zero relapse risks, escape switched off."""
    params = ModelParams(mu1_knots_y=(0.0, 0.0, 0.0, 0.0),
                         mu2_knots_y=(0.0, 0.0, 0.0, 0.0),
                         escape_scale=0.0)
    return DiseaseModel(params)


@pytest.fixture(scope="session")
def frozen_noiseless_model():
    """Fully deterministic sub-model: no jumps, no observation noise."""
    params = ModelParams(mu1_knots_y=(0.0, 0.0, 0.0, 0.0),
                         mu2_knots_y=(0.0, 0.0, 0.0, 0.0),
                         escape_scale=0.0, sigma2=0.0)
    return DiseaseModel(params)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
