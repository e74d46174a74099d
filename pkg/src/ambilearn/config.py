"""Strict JSON run-configuration parsing and serialization.

The schema is validated before any computation; unknown keys are rejected at
every level with the offending path in the message, so CLI usage errors stay
actionable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Tuple

from .generic_sim import GenericSpec
from .robot_sim import ScenarioConfig, ZoneMap, ZoneRect, default_zone_map

_REQUIRED = object()

MODES = ("simulate", "verify", "sweep")
RADIUS_MODES = ("full", "concentration_only")


class ConfigError(ValueError):
    """Schema violation in a run configuration."""


def _take(d: dict, key: str, default=_REQUIRED, path: str = "config"):
    if key in d:
        return d.pop(key)
    if default is _REQUIRED:
        raise ConfigError(f"{path}: missing required key {key!r}")
    return default


def _done(d: dict, path: str) -> None:
    if d:
        raise ConfigError(f"{path}: unknown keys {sorted(d)}")


@dataclass
class VerifyOptions:
    n_reference_atoms: Optional[int] = None   # None: mode-specific default
    checkpoint: str = "final"


@dataclass
class SweepOptions:
    T0_grid: Tuple[int, ...] = ()


@dataclass
class RunConfig:
    mode: str
    out_dir: str = "runs"
    seed: int = 0
    seeds: Optional[int] = None
    radius_mode: str = "full"
    workers: Optional[int] = None
    scenario_kind: str = "unicycle"
    unicycle: Optional[ScenarioConfig] = None
    zones: Optional[ZoneMap] = None
    generic: Optional[GenericSpec] = None
    verify: VerifyOptions = field(default_factory=VerifyOptions)
    sweep: SweepOptions = field(default_factory=SweepOptions)

    def with_overrides(self, *, mode=None, seed=None, seeds=None, out_dir=None,
                       radius_mode=None) -> "RunConfig":
        rc = replace(self)
        if mode is not None:
            if mode not in MODES:
                raise ConfigError(f"unknown mode {mode!r}")
            rc.mode = mode
        if seed is not None:
            rc.seed = int(seed)
        if seeds is not None:
            rc.seeds = int(seeds)
        if out_dir is not None:
            rc.out_dir = str(out_dir)
        if radius_mode is not None:
            if radius_mode not in RADIUS_MODES:
                raise ConfigError(f"unknown radius mode {radius_mode!r}")
            rc.radius_mode = radius_mode
        # The radius mode flows into the scenario objects that compute radii.
        if rc.unicycle is not None:
            rc.unicycle = replace(rc.unicycle, radius_mode=rc.radius_mode,
                                  seed=rc.seed)
        if rc.generic is not None:
            rc.generic = replace(rc.generic, radius_mode=rc.radius_mode,
                                 seed=rc.seed)
        return rc


# -- parsing ---------------------------------------------------------------------

def parse_config(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    d = dict(data)
    mode = _take(d, "mode")
    if mode not in MODES:
        raise ConfigError(f"config.mode: expected one of {MODES}, got {mode!r}")
    out_dir = str(_take(d, "out_dir", "runs"))
    seed = int(_take(d, "seed", 0))
    seeds = _take(d, "seeds", None)
    seeds = None if seeds is None else int(seeds)
    radius_mode = _take(d, "radius_mode", "full")
    if radius_mode not in RADIUS_MODES:
        raise ConfigError(f"config.radius_mode: unknown value {radius_mode!r}")
    workers = _take(d, "workers", None)
    workers = None if workers is None else int(workers)

    scenario = _take(d, "scenario")
    if not isinstance(scenario, dict):
        raise ConfigError("config.scenario must be an object")
    scenario = dict(scenario)
    kind = _take(scenario, "kind", path="config.scenario")

    rc = RunConfig(mode=mode, out_dir=out_dir, seed=seed, seeds=seeds,
                   radius_mode=radius_mode, workers=workers, scenario_kind=kind)
    if kind == "unicycle":
        rc.unicycle, rc.zones = _parse_unicycle(scenario, seed, radius_mode)
    elif kind == "generic":
        rc.generic = _parse_generic(scenario, seed, radius_mode)
    else:
        raise ConfigError(f"config.scenario.kind: unknown kind {kind!r}")

    verify = _take(d, "verify", None)
    if verify is not None:
        verify = dict(verify)
        n_ref = _take(verify, "n_reference_atoms", None, "config.verify")
        checkpoint = _take(verify, "checkpoint", "final", "config.verify")
        _done(verify, "config.verify")
        if checkpoint != "final":
            raise ConfigError("config.verify.checkpoint: only 'final' is supported")
        rc.verify = VerifyOptions(None if n_ref is None else int(n_ref), checkpoint)

    sweep = _take(d, "sweep", None)
    if sweep is not None:
        sweep = dict(sweep)
        grid = _take(sweep, "T0_grid", path="config.sweep")
        _done(sweep, "config.sweep")
        if not isinstance(grid, list) or not all(isinstance(v, int) and v >= 1
                                                 for v in grid):
            raise ConfigError("config.sweep.T0_grid must be a list of positive ints")
        rc.sweep = SweepOptions(tuple(grid))

    _done(d, "config")
    return rc


def _parse_unicycle(s: dict, seed: int, radius_mode: str):
    path = "config.scenario"
    noise = dict(_take(s, "noise", {"kind": "mixture"}, path))
    noise_kind = _take(noise, "kind", path=f"{path}.noise")
    kw = dict(
        steps=int(_take(s, "steps", 1900, path)),
        h=float(_take(s, "h", 1e-3, path)),
        r=float(_take(s, "r", 0.15, path)),
        R=float(_take(s, "R", 0.4, path)),
        sigma=float(_take(s, "sigma", 0.5, path)),
        T0=int(_take(s, "T0", 300, path)),
        beta=float(_take(s, "beta", 0.05, path)),
        theta=float(_take(s, "theta", 0.01, path)),
        x0=tuple(float(v) for v in _take(s, "x0", [0.0, 0.0, 0.0], path)),
        predictor_es=tuple(tuple(float(v) for v in e)
                           for e in _take(s, "predictor_es",
                                          [[0, 0], [10, 0], [0, 10]], path)),
        noise_kind=noise_kind,
        radius_mode=radius_mode,
        seed=seed,
    )
    if noise_kind not in ("mixture", "gaussian", "none"):
        raise ConfigError(f"{path}.noise.kind: unknown kind {noise_kind!r}")
    if noise_kind != "none":
        kw["gauss_sigma"] = float(_take(noise, "gauss_sigma", 0.35, f"{path}.noise"))
        kw["ball_radius"] = float(_take(noise, "ball_radius", 0.35, f"{path}.noise"))
        kw["gauss_weight"] = float(_take(noise, "gauss_weight", 0.5, f"{path}.noise"))
    _done(noise, f"{path}.noise")
    c_override = _take(s, "c_override", None, path)
    if c_override is not None:
        kw["c_override"] = float(c_override)

    zones_spec = _take(s, "zones", None, path)
    _done(s, path)
    try:
        cfg = ScenarioConfig(**kw)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return cfg, _parse_zones(zones_spec)


def _parse_zones(spec) -> ZoneMap:
    if spec is None:
        return default_zone_map()
    spec = dict(spec)
    path = "config.scenario.zones"
    default_e = tuple(float(v) for v in _take(spec, "default_e", [0.0, 0.0], path))
    regions = []
    for i, reg in enumerate(_take(spec, "regions", [], path)):
        reg = dict(reg)
        rpath = f"{path}.regions[{i}]"
        rect = _take(reg, "rect", path=rpath)
        e = tuple(float(v) for v in _take(reg, "e", path=rpath))
        _done(reg, rpath)
        if len(rect) != 4:
            raise ConfigError(f"{rpath}.rect must be [x1_min, x1_max, x2_min, x2_max]")
        regions.append(ZoneRect(*[float(v) for v in rect], e=e))
    _done(spec, path)
    return ZoneMap(regions=tuple(regions), default_e=default_e)


def _parse_generic(s: dict, seed: int, radius_mode: str) -> GenericSpec:
    path = "config.scenario"
    truth = dict(_take(s, "truth", path=path))
    truth_predictor, truth_params, alpha_star = None, {}, None
    if "predictor" in truth:
        truth_predictor = str(_take(truth, "predictor", path=f"{path}.truth"))
        truth_params = dict(_take(truth, "params", {}, f"{path}.truth"))
    if "alpha_star" in truth:
        raw = _take(truth, "alpha_star", path=f"{path}.truth")
        if isinstance(raw, list):
            raw = {"0": raw}
        alpha_star = {str(k): [float(v) for v in vs] for k, vs in raw.items()}
    _done(truth, f"{path}.truth")
    if (truth_predictor is None) == (alpha_star is None):
        raise ConfigError(f"{path}.truth: give exactly one of predictor / alpha_star")

    predictors = []
    for i, pd in enumerate(_take(s, "predictors", [], path)):
        pd = dict(pd)
        ppath = f"{path}.predictors[{i}]"
        name = str(_take(pd, "name", path=ppath))
        params = dict(_take(pd, "params", {}, ppath))
        _done(pd, ppath)
        predictors.append((name, tuple(sorted(params.items()))))
    if alpha_star is not None and not predictors:
        raise ConfigError(f"{path}: mixture truth needs a predictors list")

    noise = _take(s, "noise", None, path)
    if noise is not None and dict(noise).get("kind") == "none":
        noise = None

    sched = dict(_take(s, "d_schedule", {"kind": "zeros"}, path))
    d_kind = _take(sched, "kind", path=f"{path}.d_schedule")
    d_base = float(_take(sched, "base", 0.0, f"{path}.d_schedule"))
    d_amp = float(_take(sched, "amp", 1.0, f"{path}.d_schedule"))
    d_period = int(_take(sched, "period", 25, f"{path}.d_schedule"))
    _done(sched, f"{path}.d_schedule")

    spec = GenericSpec(
        dim_state=int(_take(s, "dim_state", path=path)),
        dim_input=int(_take(s, "dim_input", path=path)),
        steps=int(_take(s, "steps", path=path)),
        T0=int(_take(s, "T0", path=path)),
        beta=float(_take(s, "beta", 0.05, path)),
        sigma=float(_take(s, "sigma", path=path)),
        theta=float(_take(s, "theta", 0.0, path)),
        truth_predictor=truth_predictor,
        truth_params=truth_params,
        predictors=tuple(predictors),
        alpha_star=alpha_star,
        noise=None if noise is None else dict(noise),
        d_kind=str(d_kind), d_base=d_base, d_amp=d_amp, d_period=d_period,
        x0=tuple(float(v) for v in _take(s, "x0", [], path)),
        radius_mode=radius_mode,
        seed=seed,
    )
    _done(s, path)
    if d_kind not in ("zeros", "constant", "sine"):
        raise ConfigError(f"{path}.d_schedule.kind: unknown kind {d_kind!r}")
    return spec


def load_config(path) -> RunConfig:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return parse_config(data)


# -- serialization -----------------------------------------------------------------

def config_to_dict(rc: RunConfig) -> dict:
    out = {
        "mode": rc.mode,
        "out_dir": rc.out_dir,
        "seed": rc.seed,
        "radius_mode": rc.radius_mode,
    }
    if rc.seeds is not None:
        out["seeds"] = rc.seeds
    if rc.workers is not None:
        out["workers"] = rc.workers
    if rc.scenario_kind == "unicycle":
        cfg, zones = rc.unicycle, rc.zones
        noise = {"kind": cfg.noise_kind}
        if cfg.noise_kind != "none":
            noise.update(gauss_sigma=cfg.gauss_sigma, ball_radius=cfg.ball_radius,
                         gauss_weight=cfg.gauss_weight)
        scenario = {
            "kind": "unicycle",
            "steps": cfg.steps, "h": cfg.h, "r": cfg.r, "R": cfg.R,
            "sigma": cfg.sigma, "T0": cfg.T0, "beta": cfg.beta, "theta": cfg.theta,
            "x0": list(cfg.x0),
            "predictor_es": [list(e) for e in cfg.predictor_es],
            "noise": noise,
            "zones": {
                "default_e": list(zones.default_e),
                "regions": [{"rect": [z.x1_min, z.x1_max, z.x2_min, z.x2_max],
                             "e": list(z.e)} for z in zones.regions],
            },
        }
        if cfg.c_override is not None:
            scenario["c_override"] = cfg.c_override
    else:
        g = rc.generic
        truth = ({"predictor": g.truth_predictor, "params": dict(g.truth_params)}
                 if g.truth_predictor is not None
                 else {"alpha_star": {k: list(v) for k, v in g.alpha_star.items()}})
        scenario = {
            "kind": "generic",
            "dim_state": g.dim_state, "dim_input": g.dim_input,
            "steps": g.steps, "T0": g.T0, "beta": g.beta, "sigma": g.sigma,
            "theta": g.theta,
            "truth": truth,
            "predictors": [{"name": name, "params": dict(params)}
                           for name, params in g.predictors],
            "noise": {"kind": "none"} if g.noise is None else dict(g.noise),
            "d_schedule": {"kind": g.d_kind, "base": g.d_base, "amp": g.d_amp,
                           "period": g.d_period},
            "x0": list(g.x0),
        }
    out["scenario"] = scenario
    if rc.verify.n_reference_atoms is not None or rc.verify.checkpoint != "final":
        out["verify"] = {"n_reference_atoms": rc.verify.n_reference_atoms,
                         "checkpoint": rc.verify.checkpoint}
    if rc.sweep.T0_grid:
        out["sweep"] = {"T0_grid": list(rc.sweep.T0_grid)}
    return out
