"""Model, cost and planner parameters, with JSON config loading.

Defaults reproduce the blood-cancer follow-up calibration used throughout
the package: marker bounds [1, 40], exponential growth/decay slopes per
condition and treatment, piecewise-linear relapse risks, a Weibull-type
therapeutic-escape risk, Gaussian observation noise and a 2400-day study
horizon.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, asdict, replace
from typing import NamedTuple, Optional, Union

import numpy as np

DELAYS = (15, 30, 60)
TREATMENT_LABELS = ("none", "a", "b")

ADAPTIVE_ALPHA_RULES = ("entropy", "rev-entropy", "rev-entropy-2")
ROLLOUT_POLICIES = ("mode", "uniform")


def relapse_risk_knots(
    tau1: float = 365.0,
    tau2: float = 1460.0,
    tau3: float = 2190.0,
    late_factor: float = 2.0,
    horizon: float = 2400.0,
    no_relapse_fraction: float = 0.20,
    fast_disease_share: float = 0.22,
) -> tuple[tuple[float, ...], tuple[float, ...], tuple[float, ...]]:
    """Build default breakpoints for the two standard-relapse risks.

    Both risks share one shape: linear rise on [0, tau1], plateau on
    [tau1, tau2], a second rise to ``late_factor`` times the plateau on
    [tau2, tau3], constant afterwards.  The common scale is set so that
    exp(-integral over [0, horizon]) equals ``no_relapse_fraction``, and
    the two diseases split the total hazard ``fast_disease_share`` /
    (1 - ``fast_disease_share``).

    Returns (knot times, disease-1 levels, disease-2 levels).
    """
    if not 0.0 < tau1 < tau2 < tau3:
        raise ValueError("breakpoints must satisfy 0 < tau1 < tau2 < tau3")
    if not 0.0 < no_relapse_fraction < 1.0:
        raise ValueError("no_relapse_fraction must be in (0, 1)")
    # integral of the unit-plateau shape over [0, horizon]
    shape_area = (
        tau1 / 2.0
        + (tau2 - tau1)
        + (min(tau3, horizon) - tau2) * (1.0 + late_factor) / 2.0
        + max(horizon - tau3, 0.0) * late_factor
    )
    total = -math.log(no_relapse_fraction) / shape_area
    c1 = fast_disease_share * total
    c2 = (1.0 - fast_disease_share) * total
    knots = (0.0, tau1, tau2, tau3)
    return (
        knots,
        (0.0, c1, c1, late_factor * c1),
        (0.0, c2, c2, late_factor * c2),
    )


_DEFAULT_KNOTS, _DEFAULT_MU1, _DEFAULT_MU2 = relapse_risk_knots()


class PackedModel(NamedTuple):
    """Flat, numba-friendly view of model + cost parameters."""

    vmat: np.ndarray        # (4, 3) signed flow slopes per (mode, treatment)
    mu1_u: np.ndarray
    mu1_y: np.ndarray
    mu2_u: np.ndarray
    mu2_y: np.ndarray
    musum_u: np.ndarray     # merged knots of mu1 + mu2
    musum_y: np.ndarray
    esc_alpha: float
    esc_beta: float
    esc_scale: float
    zeta0: float
    dlev: float
    sigma: float
    horizon: float
    visit_cost: float
    marker_weight: float
    overtreat_weight: float
    death_cost: float


@dataclass(frozen=True)
class ModelParams:
    """Disease dynamics: marker bounds, flow slopes, jump risks, noise.

    Slopes are signed: negative values mean the marker decays under that
    (condition, treatment) combination.  ``mu*_knots`` describe piecewise
    linear risks of standard relapse as a function of the time since the
    last condition change; they are constant beyond the last knot.
    """

    zeta0: float = 1.0
    death_level: float = 40.0
    sigma2: float = 1.0
    v1_none: float = 0.02
    v1_a: float = -0.077
    v1_b: float = 0.01
    v2_none: float = 0.006
    v2_a: float = 0.003
    v2_b: float = -0.025
    escape_alpha: float = -0.8
    escape_beta: float = 1000.0
    escape_scale: float = 1.0
    mu_knots_u: tuple[float, ...] = _DEFAULT_KNOTS
    mu1_knots_y: tuple[float, ...] = _DEFAULT_MU1
    mu2_knots_y: tuple[float, ...] = _DEFAULT_MU2
    horizon: float = 2400.0

    def __post_init__(self):
        if not self.zeta0 < self.death_level:
            raise ValueError("zeta0 must be below death_level")
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be nonnegative")
        if not -1.0 < self.escape_alpha < 0.0:
            raise ValueError("escape_alpha must lie in (-1, 0)")
        if self.escape_scale < 0:
            raise ValueError("escape_scale must be nonnegative")
        if self.horizon <= 0 or self.horizon % 15 != 0:
            raise ValueError("horizon must be a positive multiple of 15 days")
        for y in (self.mu1_knots_y, self.mu2_knots_y):
            if len(y) != len(self.mu_knots_u):
                raise ValueError("risk knot lists must align with mu_knots_u")
            if any(v < 0 for v in y):
                raise ValueError("relapse risks must be nonnegative")
            if any(b < a for a, b in zip(y, y[1:])):
                raise ValueError("relapse risks must be nondecreasing")
        if any(b <= a for a, b in zip(self.mu_knots_u, self.mu_knots_u[1:])):
            raise ValueError("mu_knots_u must be strictly increasing")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    def slope(self, mode: int, treatment: int) -> float:
        """Signed flow slope for (mode, treatment); zero in remission/death."""
        return _slope_matrix(self)[mode][treatment]

    def packed(self, costs: "CostParams") -> PackedModel:
        u = np.asarray(self.mu_knots_u, dtype=np.float64)
        y1 = np.asarray(self.mu1_knots_y, dtype=np.float64)
        y2 = np.asarray(self.mu2_knots_y, dtype=np.float64)
        return PackedModel(
            vmat=np.asarray(_slope_matrix(self), dtype=np.float64),
            mu1_u=u,
            mu1_y=y1,
            mu2_u=u,
            mu2_y=y2,
            musum_u=u,
            musum_y=y1 + y2,
            esc_alpha=float(self.escape_alpha),
            esc_beta=float(self.escape_beta),
            esc_scale=float(self.escape_scale),
            zeta0=float(self.zeta0),
            dlev=float(self.death_level),
            sigma=float(self.sigma),
            horizon=float(self.horizon),
            visit_cost=float(costs.visit_cost),
            marker_weight=float(costs.marker_weight),
            overtreat_weight=float(costs.overtreat_weight),
            death_cost=float(costs.death_cost),
        )

    def digest(self) -> str:
        """Stable hash of the dynamics parameters (used to key caches)."""
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _slope_matrix(p: ModelParams):
    return (
        (0.0, 0.0, 0.0),
        (p.v1_none, p.v1_a, p.v1_b),
        (p.v2_none, p.v2_a, p.v2_b),
        (0.0, 0.0, 0.0),
    )


@dataclass(frozen=True)
class CostParams:
    """Per-step cost weights: visit, marker burden, overtreatment, death."""

    visit_cost: float = 1.0
    marker_weight: float = 1.0 / 6.0
    overtreat_weight: float = 0.1
    death_cost: float = 110.0

    def __post_init__(self):
        for name in ("visit_cost", "marker_weight", "overtreat_weight", "death_cost"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")


@dataclass(frozen=True)
class PlannerParams:
    """Tree-search tuning knobs.

    ``alpha_prime`` trades off exploitation (near 1) against exploration
    (near 0); it may also be one of the adaptive rules ``entropy``,
    ``rev-entropy`` or ``rev-entropy-2`` which derive the value from the
    belief's condition-marginal entropy at every visit.
    """

    n_search: int = 500
    k_root: int = 500
    alpha_prime: Union[float, str] = 0.5
    precision: float = 0.1
    rollout: str = "mode"
    n_init: float = 1.0
    v_init: float = 0.0
    support_cap_factor: int = 10
    root_workers: int = 1

    def __post_init__(self):
        if self.n_search < 1 or self.k_root < 1:
            raise ValueError("n_search and k_root must be >= 1")
        if isinstance(self.alpha_prime, str):
            if self.alpha_prime not in ADAPTIVE_ALPHA_RULES:
                raise ValueError(f"unknown alpha rule {self.alpha_prime!r}")
        elif not 0.0 < self.alpha_prime <= 1.0:
            raise ValueError("alpha_prime must lie in (0, 1]")
        if self.precision <= 0:
            raise ValueError("precision must be positive")
        if self.rollout not in ROLLOUT_POLICIES:
            raise ValueError(f"unknown rollout policy {self.rollout!r}")
        if self.root_workers < 1:
            raise ValueError("root_workers must be >= 1")


@dataclass(frozen=True)
class FilterParams:
    """Belief representation: particle or conditional, plus budgets."""

    kind: str = "particle"
    direct_budget_factor: int = 200
    backstep_budget_factor: int = 50
    bestk_factor: int = 1000
    grid_remission: int = 81
    grid_disease1: int = 31
    grid_disease2: int = 71
    tensor_mc: int = 10_000
    tensor_seed: int = 20240901
    cache_dir: Optional[str] = None

    def __post_init__(self):
        if self.kind not in ("particle", "conditional"):
            raise ValueError("filter kind must be 'particle' or 'conditional'")


@dataclass(frozen=True)
class Config:
    """Bundle of everything a run needs; maps 1:1 onto the JSON file."""

    model: ModelParams = field(default_factory=ModelParams)
    costs: CostParams = field(default_factory=CostParams)
    planner: PlannerParams = field(default_factory=PlannerParams)
    filter: FilterParams = field(default_factory=FilterParams)

    def to_dict(self) -> dict:
        return {
            "model": asdict(self.model),
            "costs": asdict(self.costs),
            "planner": asdict(self.planner),
            "filter": asdict(self.filter),
        }

    def with_overrides(self, **sections) -> "Config":
        """Return a copy with per-section field overrides applied."""
        out = self
        for section, fields in sections.items():
            if not fields:
                continue
            current = getattr(out, section)
            out = replace(out, **{section: replace(current, **fields)})
        return out


def _coerce_tuples(d: dict) -> dict:
    return {k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}


def load_config(path_or_dict: Union[str, dict, None]) -> Config:
    """Load a Config from a JSON file path or a plain dict.

    Missing sections and fields fall back to the defaults above, so an
    empty file (or None) is a valid config.
    """
    if path_or_dict is None:
        return Config()
    if isinstance(path_or_dict, dict):
        raw = path_or_dict
    else:
        with open(path_or_dict) as fh:
            raw = json.load(fh)
    known = {"model", "costs", "planner", "filter"}
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown config sections: {sorted(unknown)}")
    return Config(
        model=ModelParams(**_coerce_tuples(raw.get("model", {}))),
        costs=CostParams(**raw.get("costs", {})),
        planner=PlannerParams(**raw.get("planner", {})),
        filter=FilterParams(**raw.get("filter", {})),
    )


def save_config(config: Config, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(config.to_dict(), fh, indent=2)
        fh.write("\n")
