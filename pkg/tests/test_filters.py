"""Particle and conditional filter behavior (unit level)."""

import math

import numpy as np
import pytest

from followup import _kernels as K
from followup.dynamics import DiseaseModel
from followup.filters import (CfGrid, ConditionalFilter, build_transition_tensor,
                              cf_build, cf_update, pf_init, pf_update,
                              sample_states)
from followup.patient import Decision, Observation, PatientState, initial_state


class TestParticleInit:
    def test_dirac(self):
        flt = pf_init(initial_state(), 100)
        assert len(flt) == 100
        assert np.all(flt.modes == 0)
        assert np.all(flt.markers == 1.0)
        marginal = flt.mode_marginal()
        assert marginal[0] == 1.0 and marginal[1:].sum() == 0.0

    def test_sampling_returns_entry_state(self, rng):
        flt = pf_init(initial_state(), 10)
        states = sample_states(flt, 50, rng)
        assert all(s == initial_state() for s in states)

    def test_bad_count_rejected(self):
        with pytest.raises(ValueError):
            pf_init(initial_state(), 0)
        with pytest.raises(ValueError):
            pf_init(initial_state(), -3)


class TestParticleUpdate:
    def test_noiseless_consistent_no_mitigation(self, frozen_noiseless_model, rng):
        flt = pf_init(initial_state(), 200)
        d = Decision(0, 30)
        obs = Observation(1.0, 30.0, False)
        new, diag = pf_update(flt, frozen_noiseless_model, d, obs, 0.1, rng)
        assert len(new) == 200
        assert diag.stage == 0
        assert diag.direct_attempts == 200  # every proposal accepted
        assert np.all(new.markers == 1.0) and np.all(new.clocks == 30.0)

    def test_far_observation_triggers_bestk(self, model, rng):
        flt = pf_init(initial_state(), 100)
        obs = Observation(25.0, 30.0, False)  # ~24 sigma from any arrival
        new, diag = pf_update(flt, model, Decision(0, 30), obs, 0.1, rng,
                              direct_budget_factor=20, bestk_factor=100)
        assert diag.bestk_used and diag.stage == 3
        assert len(new) == 100

    def test_partial_acceptance_revigorates(self, model):
        rng = np.random.default_rng(5)
        flt = pf_init(initial_state(), 500)
        obs = Observation(3.0, 30.0, False)  # ~2 sigma: rare but reachable
        new, diag = pf_update(flt, model, Decision(0, 30), obs, 0.05, rng,
                              direct_budget_factor=3)
        assert 0 < diag.direct_accepted < 500
        assert diag.revigorated == 500 - diag.direct_accepted - diag.backstep_accepted
        assert diag.stage == 2
        assert len(new) == 500

    def test_backstep_stage_accepts(self, model):
        rng = np.random.default_rng(9)
        flt = pf_init(initial_state(), 400)
        d = Decision(0, 30)
        flt, _ = pf_update(flt, model, d, Observation(1.0, 30.0, False),
                           0.1, rng)
        new, diag = pf_update(flt, model, d, Observation(1.0, 60.0, False),
                              0.1, rng, direct_budget_factor=0,
                              backstep_budget_factor=60)
        assert diag.direct_attempts == 0
        assert diag.backstep_accepted > 0
        assert len(new) == 400

    def test_size_contract_across_updates(self, model):
        rng = np.random.default_rng(17)
        flt = pf_init(initial_state(), 64)
        d = Decision(0, 15)
        t = 0.0
        for _ in range(8):
            t += 15.0
            y = 1.0 + rng.normal() * 0.5
            flt, _ = pf_update(flt, model, d, Observation(y, t, False),
                               0.1, rng)
            assert len(flt) == 64
            assert np.all(flt.clocks == t)

    def test_terminal_observation_yields_dead_filter(self, model):
        rng = np.random.default_rng(23)
        # particles pushed near the death boundary die quickly untreated
        flt = pf_init(PatientState(1, 39.5, 100.0, 300.0), 50)
        obs = Observation(math.nan, 330.0, True)
        new, diag = pf_update(flt, model, Decision(0, 30), obs, 0.1, rng)
        assert new.is_dead
        assert len(new) == 50


@pytest.fixture(scope="module")
def small_filter():
    model = DiseaseModel()
    grid = CfGrid(model, 11, 7, 9)
    tensor = build_transition_tensor(model, grid, nmc=400, seed=1)
    weights = np.zeros(grid.size)
    weights[grid.project(0, 1.0, 0.0)] = 1.0
    return ConditionalFilter(grid, tensor, weights, model.params.sigma)


class TestConditionalFilter:
    def test_grid_layout_matches_spec_counts(self, model):
        grid = CfGrid(model)
        assert grid.size == 184
        assert (grid.modes == 0).sum() == 81
        assert (grid.modes == 1).sum() == 31
        assert (grid.modes == 2).sum() == 71
        assert (grid.modes == 3).sum() == 1
        assert grid.markers[grid.death_index] == model.params.death_level
        # remission block spans the horizon in time-since-jump
        assert grid.sincejumps[:81].min() == 0.0
        assert grid.sincejumps[:81].max() == model.params.horizon

    def test_rows_stochastic(self, small_filter):
        sums = small_filter.tensor.sum(axis=2)
        assert np.allclose(sums, 1.0, atol=1e-9)

    def test_death_atom_absorbing(self, small_filter):
        atom = small_filter.grid.death_index
        assert np.all(small_filter.tensor[:, atom, atom] == 1.0)

    def test_deterministic_dynamics_point_mass(self, frozen_noiseless_model):
        grid = CfGrid(frozen_noiseless_model, 81, 5, 5)
        d_idx = 0  # (none, 15)
        counts = K.cf_transition_counts(
            grid.modes, grid.markers, grid.sincejumps, 0, 15.0, 200,
            grid.zeta0, grid.log_step1, grid.log_step2,
            grid.n0, grid.n1, grid.n2, grid.u_step,
            frozen_noiseless_model.packed, np.random.default_rng(0))
        src = grid.project(0, 1.0, 0.0)
        dst = grid.project(0, 1.0, 15.0)
        row = counts[src] / counts[src].sum()
        assert row[dst] == 1.0
        assert abs(grid.sincejumps[dst] - 15.0) <= 15.0  # nearest in age

    def test_update_flat_likelihood_returns_prediction(self, small_filter):
        flat = ConditionalFilter(small_filter.grid, small_filter.tensor,
                                 small_filter.weights, sigma=1e6)
        d = Decision(0, 60)
        predicted = flat.weights @ flat.tensor[2]
        new, diag = cf_update(flat, d, Observation(1.3, 60.0, False))
        live = flat.grid.modes != 3
        expected = predicted * live
        expected = expected / expected.sum()
        assert not diag["degenerate"]
        assert np.allclose(new.weights, expected, atol=1e-6)

    def test_death_dirac_stays(self, small_filter):
        w = np.zeros(small_filter.grid.size)
        w[small_filter.grid.death_index] = 1.0
        flt = small_filter.with_weights(w)
        new, _ = cf_update(flt, Decision(1, 30), Observation(math.nan, 30.0, True))
        assert new.is_dead
        assert new.weights[new.grid.death_index] == 1.0

    def test_update_deterministic_bitwise(self, small_filter):
        d = Decision(2, 30)
        obs = Observation(1.7, 30.0, False)
        a, _ = cf_update(small_filter, d, obs)
        b, _ = cf_update(small_filter, d, obs)
        assert np.array_equal(a.weights, b.weights)

    def test_normalization_along_trajectory(self, small_filter, rng):
        flt = small_filter
        t = 0.0
        for i in range(10):
            t += 30.0
            obs = Observation(float(1.0 + rng.normal()), t, False)
            flt, _ = cf_update(flt, Decision(i % 3, 30), obs)
            assert abs(flt.weights.sum() - 1.0) < 1e-10
            assert flt.clock == t

    def test_degenerate_update_falls_back(self, small_filter):
        # prediction mass entirely on the death atom, but a finite reading
        w = np.zeros(small_filter.grid.size)
        w[small_filter.grid.death_index] = 1.0
        flt = small_filter.with_weights(w)
        new, diag = cf_update(flt, Decision(0, 15), Observation(1.2, 15.0, False))
        assert diag["degenerate"]
        assert abs(new.weights.sum() - 1.0) < 1e-10
        assert new.weights[new.grid.death_index] == 0.0

    def test_cf_build_starts_dirac_at_entry(self, model, tmp_path):
        grid = CfGrid(model, 11, 7, 9)
        flt = cf_build(model, grid, nmc=200, seed=2, cache_dir=str(tmp_path))
        assert flt.weights[grid.project(0, 1.0, 0.0)] == 1.0
        # cache round-trip keeps the tensor bit-identical
        flt2 = cf_build(model, CfGrid(model, 11, 7, 9), nmc=200, seed=2,
                        cache_dir=str(tmp_path))
        assert np.array_equal(flt.tensor, flt2.tensor)


class TestSampleStates:
    def test_dirac(self, rng):
        flt = pf_init(initial_state(), 5)
        states = sample_states(flt, 20, rng)
        assert len(states) == 20
        assert len(set(states)) == 1

    def test_zero_draws(self, rng):
        assert sample_states(pf_init(initial_state(), 5), 0, rng) == []

    def test_conditional_mode_frequencies(self, model):
        rng = np.random.default_rng(31)
        grid = CfGrid(model, 11, 7, 9)
        tensor = np.zeros((9, grid.size, grid.size))  # unused by sampling
        weights = np.zeros(grid.size)
        weights[0] = 0.5                      # a remission state
        weights[grid.n0 + 2] = 0.3            # a disease-1 state
        weights[grid.n0 + grid.n1 + 4] = 0.2  # a disease-2 state
        flt = ConditionalFilter(grid, tensor, weights, 1.0, clock=45.0)
        states = sample_states(flt, 100_000, rng)
        modes = np.array([s.mode for s in states])
        assert np.mean(modes == 0) == pytest.approx(0.5, abs=0.01)
        assert np.mean(modes == 1) == pytest.approx(0.3, abs=0.01)
        assert np.mean(modes == 2) == pytest.approx(0.2, abs=0.01)
        assert all(s.clock == 45.0 for s in states)
