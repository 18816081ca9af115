"""Parameter validation, calibration arithmetic and config round-trips."""

import json
import math

import numpy as np
import pytest

from followup.params import (Config, CostParams, ModelParams, PlannerParams,
                             load_config, relapse_risk_knots, save_config)
from followup.patient import DECISIONS, Decision, decision_index, parse_decision


class TestDefaults:
    def test_decision_space_has_nine_elements(self):
        assert len(DECISIONS) == 9
        assert len(set(DECISIONS)) == 9
        for i, d in enumerate(DECISIONS):
            assert decision_index(d) == i

    def test_lexicographic_order(self):
        assert DECISIONS[0] == Decision(0, 15)
        assert DECISIONS[2] == Decision(0, 60)
        assert DECISIONS[3] == Decision(1, 15)
        assert DECISIONS[8] == Decision(2, 60)

    def test_horizon_consistency(self):
        p = ModelParams()
        assert p.horizon == 160 * 15 == 40 * 60

    def test_relapse_risk_calibration_targets(self):
        knots, mu1, mu2 = relapse_risk_knots()
        # total integrated hazard over the horizon gives 20% never-relapse
        u = np.asarray(knots)
        total = np.asarray(mu1) + np.asarray(mu2)
        xs = np.linspace(0.0, 2400.0, 200_001)
        ys = np.interp(xs, u, total)  # constant extrapolation beyond knots
        ys[xs > u[-1]] = total[-1]
        from scipy.integrate import trapezoid
        integral = trapezoid(ys, xs)
        assert math.exp(-integral) == pytest.approx(0.20, rel=1e-4)
        # share of disease 1 is 22% at every age
        assert np.allclose(np.asarray(mu1)[1:] / total[1:], 0.22)

    def test_slope_matrix_signs(self):
        p = ModelParams()
        assert p.slope(0, 0) == 0.0 and p.slope(3, 2) == 0.0
        assert p.slope(1, 0) == 0.02 and p.slope(1, 1) == -0.077
        assert p.slope(2, 2) == -0.025 and p.slope(2, 1) == 0.003


class TestValidation:
    def test_bad_bounds(self):
        with pytest.raises(ValueError):
            ModelParams(zeta0=50.0)
        with pytest.raises(ValueError):
            ModelParams(sigma2=-1.0)
        with pytest.raises(ValueError):
            ModelParams(escape_alpha=0.5)
        with pytest.raises(ValueError):
            ModelParams(horizon=100.0)

    def test_risk_monotonicity_enforced(self):
        with pytest.raises(ValueError):
            ModelParams(mu1_knots_y=(0.0, 2e-4, 1e-4, 2e-4))
        with pytest.raises(ValueError):
            ModelParams(mu1_knots_y=(-1e-4, 1e-4, 1e-4, 1e-4))

    def test_planner_validation(self):
        with pytest.raises(ValueError):
            PlannerParams(n_search=0)
        with pytest.raises(ValueError):
            PlannerParams(alpha_prime=0.0)
        with pytest.raises(ValueError):
            PlannerParams(alpha_prime="nonsense")
        with pytest.raises(ValueError):
            PlannerParams(rollout="greedy")
        PlannerParams(alpha_prime="rev-entropy-2")

    def test_cost_validation(self):
        with pytest.raises(ValueError):
            CostParams(death_cost=-1.0)

    def test_decision_parsing(self):
        assert parse_decision("a", 30) == Decision(1, 30)
        with pytest.raises(ValueError):
            parse_decision("x", 30)
        with pytest.raises(ValueError):
            parse_decision("a", 45)


class TestConfigIO:
    def test_round_trip(self, tmp_path):
        cfg = Config().with_overrides(
            planner={"n_search": 64, "alpha_prime": "rev-entropy"},
            model={"sigma2": 0.5},
            filter={"kind": "conditional"})
        path = str(tmp_path / "cfg.json")
        save_config(cfg, path)
        loaded = load_config(path)
        assert loaded == cfg

    def test_empty_and_none(self):
        assert load_config(None) == Config()
        assert load_config({}) == Config()

    def test_unknown_section_rejected(self):
        with pytest.raises(ValueError):
            load_config({"bogus": {}})

    def test_defaults_in_file_schema(self, tmp_path):
        path = str(tmp_path / "cfg.json")
        save_config(Config(), path)
        raw = json.load(open(path))
        assert raw["model"]["zeta0"] == 1.0
        assert raw["model"]["death_level"] == 40.0
        assert raw["model"]["sigma2"] == 1.0
        assert raw["costs"]["visit_cost"] == 1.0
        assert raw["costs"]["death_cost"] == 110.0
        assert raw["costs"]["marker_weight"] == pytest.approx(1 / 6)
        assert raw["costs"]["overtreat_weight"] == 0.1
        assert raw["model"]["escape_alpha"] == -0.8
        assert raw["model"]["escape_beta"] == 1000.0

    def test_digest_stable_and_sensitive(self):
        a, b = ModelParams(), ModelParams()
        assert a.digest() == b.digest()
        assert ModelParams(sigma2=2.0).digest() != a.digest()
