"""Differential-drive scenario: zone map, wheel plan, true dynamics, and the
end-to-end per-step learning run.

State lives on R^2 x S^1 but all estimator / ambiguity inner products use the
flat R^3 tangent-space inner product; angles are wrapped only inside the true
dynamics. The Finsler inner product is provided as a standalone utility and is
not used in the main pipeline.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .estimator import PLearner
from .noise import NoiseModel
from .predictors import PredictorSet, _unicycle_next, make_predictor
from .runlog import RunLog, robot_columns

logger = logging.getLogger(__name__)

ROBOT_SCALE_MASK = (True, True, False)   # position components scaled, angle not


class ScenarioError(ValueError):
    """Invalid scenario configuration."""


def wrap_angle(theta: float) -> float:
    """Map an angle into [-pi, pi); exact (identity) for in-range values."""
    if -math.pi <= theta < math.pi:
        return float(theta)
    return float((theta + math.pi) % (2.0 * math.pi) - math.pi)


@dataclass(frozen=True)
class RobotState:
    x1: float
    x2: float
    x3: float

    def __post_init__(self):
        object.__setattr__(self, "x3", wrap_angle(self.x3))

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.x2, self.x3])

    @classmethod
    def from_array(cls, x) -> "RobotState":
        x = np.asarray(x, dtype=float)
        return cls(float(x[0]), float(x[1]), float(x[2]))


def wheel_plan(t: int, h: float) -> Tuple[float, float]:
    """Left/right wheel speeds (rad/s): 10 -/+ 0.5 sin(20 h pi t)."""
    if t < 0:
        raise ScenarioError("step index must be nonnegative")
    s = math.sin(20.0 * h * math.pi * t)
    return 10.0 - 0.5 * s, 10.0 + 0.5 * s


def finsler_inner(a, b) -> float:
    """Inner product on R^2 x S^1: x^T y + cos of the wrapped angle gap."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    gap = abs(a[2] - b[2]) % (2.0 * math.pi)
    gap = min(gap, 2.0 * math.pi - gap)
    return float(a[:2] @ b[:2] + math.cos(gap))


def finsler_norm(a) -> float:
    a = np.asarray(a, float)
    return float(math.sqrt(a[:2] @ a[:2] + 1.0))


@dataclass(frozen=True)
class ZoneRect:
    """Axis-aligned region with a road-condition offset e."""

    x1_min: float
    x1_max: float
    x2_min: float
    x2_max: float
    e: Tuple[float, float]

    def contains(self, x1: float, x2: float) -> bool:
        return (self.x1_min <= x1 < self.x1_max
                and self.x2_min <= x2 < self.x2_max)


@dataclass(frozen=True)
class ZoneMap:
    """Total lookup from the plane to an offset e; the default applies outside
    every region. Zone ids: 0 = default, regions are numbered from 1."""

    regions: Tuple[ZoneRect, ...] = ()
    default_e: Tuple[float, float] = (0.0, 0.0)

    def lookup(self, x1: float, x2: float) -> Tuple[int, Tuple[float, float]]:
        for i, region in enumerate(self.regions):
            if region.contains(x1, x2):
                return i + 1, region.e
        return 0, self.default_e

    def all_es(self) -> Dict[int, Tuple[float, float]]:
        out = {0: tuple(self.default_e)}
        out.update({i + 1: tuple(r.e) for i, r in enumerate(self.regions)})
        return out


def default_zone_map() -> ZoneMap:
    """Smooth / slippery / sandy bands crossed sequentially by the nominal path."""
    return ZoneMap(
        regions=(
            ZoneRect(0.9, 1.9, -5.0, 5.0, (4.0, 0.0)),    # slippery
            ZoneRect(1.9, 60.0, -5.0, 5.0, (-6.0, 0.0)),  # sandy
        ),
        default_e=(0.0, 0.0),                             # smooth
    )


@dataclass
class ScenarioConfig:
    """Simulation constants; defaults follow the robot case study."""

    steps: int = 1900
    h: float = 1e-3          # step length [s]
    r: float = 0.15          # wheel radius [m]
    R: float = 0.4           # half axle length [m]
    sigma: float = 0.5       # subGaussian parameter (0 allowed only when noiseless)
    T0: int = 300
    beta: float = 0.05
    theta: float = 0.01
    x0: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    predictor_es: Tuple[Tuple[float, float], ...] = ((0.0, 0.0), (10.0, 0.0), (0.0, 10.0))
    noise_kind: str = "mixture"    # mixture | gaussian | none
    gauss_sigma: float = 0.35
    ball_radius: float = 0.35
    gauss_weight: float = 0.5
    radius_mode: str = "full"      # full | concentration_only
    c_override: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if self.steps < 1 or self.T0 < 1:
            raise ScenarioError("steps and T0 must be positive")
        if min(self.h, self.r, self.R) <= 0:
            raise ScenarioError("h, r, R must be positive")
        if not (0.0 < self.beta < 1.0):
            raise ScenarioError("beta must lie in (0, 1)")
        if self.theta < 0 or self.sigma < 0:
            raise ScenarioError("theta and sigma must be nonnegative")
        if self.noise_kind not in ("mixture", "gaussian", "none"):
            raise ScenarioError(f"unknown noise kind {self.noise_kind!r}")
        if self.sigma == 0.0 and self.noise_kind != "none":
            raise ScenarioError("sigma = 0 requires noise_kind = 'none'")
        if self.radius_mode not in ("full", "concentration_only"):
            raise ScenarioError(f"unknown radius mode {self.radius_mode!r}")

    @property
    def p(self) -> int:
        return len(self.predictor_es)


def make_noise_model(cfg: ScenarioConfig) -> Optional[NoiseModel]:
    if cfg.noise_kind == "none":
        return None
    if cfg.noise_kind == "gaussian":
        return NoiseModel.gaussian(cfg.gauss_sigma**2 * np.eye(3), cfg.sigma)
    gauss = NoiseModel.gaussian(cfg.gauss_sigma**2 * np.eye(3), cfg.gauss_sigma)
    ball = NoiseModel.uniform_ball(cfg.ball_radius, dim=3)
    return NoiseModel.mixture(
        [(cfg.gauss_weight, gauss), (1.0 - cfg.gauss_weight, ball)], sigma=cfg.sigma)


def make_predictor_set(cfg: ScenarioConfig) -> PredictorSet:
    preds = [make_predictor("unicycle_e", e1=e1, e2=e2, r=cfg.r, R=cfg.R, h=cfg.h)
             for e1, e2 in cfg.predictor_es]
    return PredictorSet(preds, dim_state=3, dim_input=2)


def robot_step(state: RobotState, d, e, w, cfg: ScenarioConfig) -> RobotState:
    """One true-dynamics step: unicycle update with offsets e plus h-scaled noise."""
    x = state.as_array()
    d = np.asarray(d, float)
    w = np.asarray(w, float)
    nxt = _unicycle_next(x, d, e[0], e[1], cfg.r, cfg.R, cfg.h) + cfg.h * w
    return RobotState.from_array(nxt)


def alpha_star_for_e(e, predictor_es) -> np.ndarray:
    """Coefficients with sum 1 reproducing offset e from the predictor offsets.

    Solves [1; e-rows] alpha = [1; e] and insists on an exact representation,
    which is the predictor-class assumption for this scenario.
    """
    es = np.asarray(predictor_es, float)
    M = np.vstack([np.ones(len(es)), es.T])
    rhs = np.concatenate([[1.0], np.asarray(e, float)])
    alpha, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    if np.abs(M @ alpha - rhs).max() > 1e-9:
        raise ScenarioError(
            f"offset {tuple(e)} is not representable by predictor offsets "
            f"{[tuple(v) for v in es]} with unit coefficient sum"
        )
    return alpha


def zone_alpha_table(cfg: ScenarioConfig, zones: ZoneMap) -> Dict[int, np.ndarray]:
    """Ground-truth coefficients per zone; validates the predictor-class
    consistency of every zone offset at load time."""
    return {zid: alpha_star_for_e(e, cfg.predictor_es)
            for zid, e in zones.all_es().items()}


def run_scenario(cfg: ScenarioConfig, zones: Optional[ZoneMap] = None,
                 atoms_at: Sequence[int] = ()) -> RunLog:
    """Execute the full learning loop and return the per-step log.

    ``atoms_at`` lists step indices at which the published ambiguity set
    (empirical prediction atoms + adaptive radius) is attached to the log.
    """
    zones = default_zone_map() if zones is None else zones
    alpha_table = zone_alpha_table(cfg, zones)
    pset = make_predictor_set(cfg)
    noise = make_noise_model(cfg)
    rng = np.random.default_rng(cfg.seed)
    atoms_set = set(int(t) for t in atoms_at)

    learner = PLearner(
        pset, sigma=cfg.sigma, beta=cfg.beta, T0=cfg.T0, theta=cfg.theta,
        scale_mask=ROBOT_SCALE_MASK, radius_mode=cfg.radius_mode,
        c_override=cfg.c_override,
    )
    x = np.array(cfg.x0, dtype=float)
    x[2] = wrap_angle(x[2])
    learner.start(x)

    p = cfg.p
    names = robot_columns(p)
    cols = {name: [] for name in names}
    aset = {}

    for t in range(cfg.steps + 1):
        d = np.array(wheel_plan(t, cfg.h))
        zone_id, e = zones.lookup(x[0], x[1])
        if t >= 1:
            try:
                step = learner.characterize(d, alpha_star=alpha_table[zone_id],
                                            with_atoms=t in atoms_set)
            except Exception as exc:
                raise RuntimeError(f"learning step failed at t = {t}: {exc}") from exc
            cols["t"].append(t)
            for i in range(p):
                cols[f"alpha_{i + 1}"].append(step.alpha[i])
            cols["gamma"].append(step.gamma)
            cols["sigma_min_A"].append(step.sigma_min_A)
            cols["eta"].append(step.eta)
            cols["inf_error"].append(step.inf_error)
            cols["radius"].append(step.eps_hat)
            cols["confidence"].append(step.confidence)
            cols["x1"].append(x[0])
            cols["x2"].append(x[1])
            cols["x3"].append(x[2])
            cols["zone_id"].append(zone_id)
            cols["H"].append(step.H)
            cols["eps"].append(step.epsilon)
            cols["eps_hat"].append(step.eps_hat)
            cols["eps_hat_oracle"].append(step.eps_hat_oracle)
            cols["unidentifiable"].append(int(step.unidentifiable))
            cols["degenerate"].append(int(step.degenerate))
            if t in atoms_set:
                aset[t] = step.ambiguity_set()
        if t == cfg.steps:
            break
        w = noise.sample(rng) if noise is not None else np.zeros(3)
        x_next = _unicycle_next(x, d, e[0], e[1], cfg.r, cfg.R, cfg.h) + cfg.h * w
        x_next[2] = wrap_angle(x_next[2])
        learner.observe(d, x_next)
        x = x_next

    data = {name: np.array(cols[name]) for name in names}
    n_unident = int(data["unidentifiable"].sum())
    if n_unident:
        logger.info("run seed=%d: %d unidentifiable windows (alpha carried over)",
                    cfg.seed, n_unident)
    meta = {
        "scenario": "unicycle",
        "seed": cfg.seed,
        "p": p,
        "n": 3,
        "steps": cfg.steps,
        "T0": cfg.T0,
        "beta": cfg.beta,
        "theta": cfg.theta,
        "sigma": cfg.sigma,
        "radius_mode": cfg.radius_mode,
    }
    return RunLog(columns=data, meta=meta, ambiguity_sets=aset)


def true_center_at(cfg: ScenarioConfig, zones: ZoneMap, x, t: int) -> np.ndarray:
    """Mean next state under the true zone dynamics at (t, x)."""
    x = np.asarray(x, float)
    _, e = zones.lookup(x[0], x[1])
    d = np.array(wheel_plan(t, cfg.h))
    return _unicycle_next(x, d, e[0], e[1], cfg.r, cfg.R, cfg.h)


def scenario_with_seed(cfg: ScenarioConfig, seed: int) -> ScenarioConfig:
    return replace(cfg, seed=int(seed))
