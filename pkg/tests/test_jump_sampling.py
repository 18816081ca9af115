"""Jump-time sampler against an independent quadrature oracle.

The sampler inverts closed-form cumulative hazards; the oracle integrates
the raw rate along the flow with trapezoid quadrature on a dense grid and
compares survival curves via the KS statistic.
"""

import math

import numpy as np
import pytest
from scipy.integrate import cumulative_trapezoid
from scipy.stats import kstest

from followup import _kernels as K
from followup.dynamics import DiseaseModel
from followup.params import ModelParams
from followup.patient import PatientState

N_SAMPLES = 100_000
KS_LIMIT = 0.01


def _oracle_cdf(model, mode, zeta, u, treatment, t_max, n_grid=16_000):
    """CDF of the jump delay via quadrature of the rate along the raw flow
    (boundary truncation is the segment loop's job, not the sampler's)."""
    v = model.packed.vmat[mode, treatment]
    ts = np.linspace(0.0, t_max, n_grid)
    zs = zeta * np.exp(v * ts)
    rates = np.array([K.risk_rate(mode, z, u + t, treatment, model.packed)
                      for z, t in zip(zs, ts)])
    cum = np.concatenate([[0.0], cumulative_trapezoid(rates, ts)])
    return ts, 1.0 - np.exp(-cum)


def _ks(model, mode, zeta, u, treatment, seed):
    rng = np.random.default_rng(seed)
    samples = K.sample_jump_batch(mode, zeta, u, treatment, model.packed,
                                  N_SAMPLES, rng)
    assert np.isfinite(samples).all()
    t_max = float(samples.max()) * 1.02
    ts, cdf = _oracle_cdf(model, mode, zeta, u, treatment, t_max)
    stat = kstest(samples, lambda x: np.interp(x, ts, cdf)).statistic
    return stat


@pytest.mark.slow
@pytest.mark.parametrize("mode,zeta,u,treatment", [
    (0, 1.0, 0.0, 0),      # remission, both risks ramping from zero
    (0, 1.0, 500.0, 0),    # remission, plateau region
    (0, 1.0, 1800.0, 0),   # remission, late-rise region
    (0, 1.0, 500.0, 1),    # remission under a: disease-2 risk only
    (0, 1.0, 500.0, 2),    # remission under b: disease-1 risk only
    (1, 1.5, 0.0, 1),      # escape, treated disease 1, low marker
    (1, 5.0, 0.0, 1),      # escape, treated disease 1
    (2, 10.0, 0.0, 2),     # escape, treated disease 2
])
def test_sampler_matches_quadrature_survival(mode, zeta, u, treatment):
    model = DiseaseModel()
    stat = _ks(model, mode, zeta, u, treatment, seed=mode * 100 + treatment)
    assert stat < KS_LIMIT, f"KS={stat}"


@pytest.mark.slow
def test_constant_rate_is_exponential():
    c = 0.01
    params = ModelParams(mu_knots_u=(0.0, 1.0), mu1_knots_y=(c, c),
                         mu2_knots_y=(0.0, 0.0))
    model = DiseaseModel(params)
    rng = np.random.default_rng(3)
    samples = K.sample_jump_batch(0, 1.0, 0.0, 0, model.packed,
                                  N_SAMPLES, rng)
    assert samples.mean() == pytest.approx(1.0 / c, rel=0.02)
    stat = kstest(samples, "expon", args=(0.0, 1.0 / c)).statistic
    assert stat < KS_LIMIT


def test_zero_rate_never_jumps(frozen_model, rng):
    s = PatientState(0, 1.0, 100.0, 100.0)
    assert frozen_model.sample_jump_time(s, 0, rng) == math.inf
    # untreated diseases never ring either (boundary hits are separate)
    assert DiseaseModel().sample_jump_time(
        PatientState(1, 5.0, 0.0, 0.0), 0, rng) == math.inf


def test_escape_sampler_closed_form_case(model):
    """Constant-marker limit: under v -> 0 the escape delay is Exp(rate).

    Uses a custom model with a tiny treated slope so the rate is nearly
    constant over the sampled range.
    """
    params = ModelParams(v1_a=-1e-12)
    m = DiseaseModel(params)
    rng = np.random.default_rng(4)
    rate = m.risk_intensity(PatientState(1, 5.0, 0.0, 0.0), 1)
    samples = K.sample_jump_batch(1, 5.0, 0.0, 1, m.packed, 50_000, rng)
    assert samples.mean() == pytest.approx(1.0 / rate, rel=0.02)
