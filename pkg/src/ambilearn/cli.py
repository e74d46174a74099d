"""Command-line entry point: simulate / verify / sweep.

Exit codes: 0 success (for verify: coverage meets its floor), 1 runtime
failure or failed verification, 2 usage / configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .ambiguity import composite_confidence
from .config import ConfigError, RunConfig, config_to_dict, load_config
from .generic_sim import run_generic
from .robot_sim import run_scenario
from .verification import (
    AdaptiveTrialSpec,
    KnownFTrialSpec,
    adaptive_coverage,
    known_f_coverage,
)

logger = logging.getLogger(__name__)


class UsageError(ValueError):
    """Invalid invocation (maps to exit code 2)."""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ambilearn",
        description="Online learning of uncertain environments with "
                    "probabilistically guaranteed ambiguity sets.")
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--mode", choices=("simulate", "verify", "sweep"),
                        help="override the config mode")
    parser.add_argument("--seed", type=int, help="base seed override")
    parser.add_argument("--seeds", type=int, help="number of Monte Carlo trials")
    parser.add_argument("--out-dir", help="output directory override")
    parser.add_argument("--radius-mode", choices=("full", "concentration_only"),
                        help="radius diagnostic mode override")
    parser.add_argument("--no-plots", action="store_true",
                        help="skip SVG figure emission")
    return parser


def _configure_logging() -> None:
    level = os.environ.get("AMBILEARN_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _out_dir(rc: RunConfig) -> Path:
    out = Path(rc.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _echo_config(rc: RunConfig, out: Path) -> None:
    with open(out / "config_used.json", "w") as fh:
        json.dump(config_to_dict(rc), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _seed_list(rc: RunConfig) -> list:
    if rc.seeds is None or rc.seeds < 1:
        raise UsageError("verification needs --seeds M with M >= 1")
    return [rc.seed + i for i in range(rc.seeds)]


def cmd_simulate(rc: RunConfig, make_plots: bool = True) -> int:
    out = _out_dir(rc)
    _echo_config(rc, out)
    if rc.scenario_kind == "unicycle":
        log = run_scenario(rc.unicycle, rc.zones, atoms_at=[rc.unicycle.steps])
        zones = rc.zones
    else:
        if rc.generic.alpha_star is None:
            raise UsageError("simulate needs a mixture-truth generic scenario "
                             "(alpha_star + predictors); known-f setups are for verify")
        log = run_generic(rc.generic, atoms_at=[rc.generic.steps])
        zones = None
    log.write_csv(out / "run.csv")
    log.write_summary(out / "summary.json")
    log.write_ambiguity_jsonl(out / "ambiguity.jsonl")
    if make_plots:
        from .plots import plot_run
        plot_run(log, out, zones)
    print(f"simulate: wrote {log.rows} rows to {out / 'run.csv'}")
    return 0


def cmd_verify(rc: RunConfig, make_plots: bool = True) -> int:
    out = _out_dir(rc)
    _echo_config(rc, out)
    seeds = _seed_list(rc)
    if rc.scenario_kind == "generic":
        g = rc.generic
        if g.truth_predictor is None:
            raise UsageError("generic verification needs a known-f truth "
                             "(truth.predictor); adaptive verification uses the "
                             "unicycle scenario")
        if g.noise is None:
            raise UsageError("known-f verification needs a stochastic noise model")
        spec = KnownFTrialSpec(
            predictor_name=g.truth_predictor, predictor_params=dict(g.truth_params),
            noise_config=dict(g.noise), dim_state=g.dim_state, dim_input=g.dim_input,
            steps=g.steps, T0=g.T0, beta=g.beta, sigma=g.sigma,
            d_kind=g.d_kind, d_base=g.d_base, d_amp=g.d_amp, d_period=g.d_period,
            n_reference_atoms=rc.verify.n_reference_atoms or 10_000,
            radius_mode=rc.radius_mode)
        result = known_f_coverage(spec, seeds, rc.workers)
    else:
        spec = AdaptiveTrialSpec(cfg=rc.unicycle, zones=rc.zones,
                                 n_reference_atoms=rc.verify.n_reference_atoms)
        result = adaptive_coverage(spec, seeds, rc.workers)

    _write_trials_csv(out / "verify.csv", result["trials"])
    with open(out / "verify_summary.json", "w") as fh:
        json.dump({k: v for k, v in result.items() if k != "trials"}, fh,
                  indent=2, sort_keys=True)
        fh.write("\n")
    print(f"verify[{result['mode']}]: empirical coverage "
          f"{result['coverage']:.4f} over {len(seeds)} trials; "
          f"theoretical floor {result['floor']:.4f}")
    if not result["passed"]:
        print("verify: FAILED (coverage below floor)", file=sys.stderr)
        return 1
    return 0


def _write_trials_csv(path, trials) -> None:
    names = [k for k in trials[0] if k != "zone_switches"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for row in sorted(trials, key=lambda r: r["seed"]):
            writer.writerow([_fmt(row[k]) for k in names])


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    return str(v)


def cmd_sweep(rc: RunConfig, make_plots: bool = True) -> int:
    if rc.scenario_kind != "unicycle":
        raise UsageError("sweep runs the unicycle scenario")
    grid = rc.sweep.T0_grid
    if not grid:
        raise UsageError("sweep needs a nonempty sweep.T0_grid")
    out = _out_dir(rc)
    _echo_config(rc, out)

    # One reference run pins the data-driven constant c; the per-T0 curves are
    # then the composite bound evaluated along T = min(t, T0).
    log = run_scenario(rc.unicycle, rc.zones)
    cfg = rc.unicycle
    steady = log.steady_mask(2 * cfg.T0)
    gammas = log["gamma"]
    ok = steady & np.isfinite(gammas)
    if not ok.any():
        ok = np.isfinite(gammas)
    if not ok.any():
        raise UsageError("reference run never produced an identifiable window; "
                         "increase steps")
    n = log.meta["n"]
    c_ref = float(np.median((gammas[ok] - cfg.theta) / n))
    gamma_ref = n * c_ref + cfg.theta

    ts = log["t"]
    curves = {}
    for T0 in grid:
        vals = [composite_confidence(min(int(t), T0), gamma_ref, c_ref, n,
                                     cfg.beta).value for t in ts]
        curves[T0] = np.array(vals)

    with open(out / "sweep.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"conf_T0_{T0}" for T0 in grid] + ["online"])
        for i, t in enumerate(ts):
            writer.writerow([str(int(t))]
                            + [repr(float(curves[T0][i])) for T0 in grid]
                            + [repr(float(log["confidence"][i]))])
    if make_plots:
        from .plots import plot_sweep
        plot_sweep(ts, curves, log["confidence"], cfg.beta, out)
    print(f"sweep: wrote curves for T0 in {list(grid)} to {out / 'sweep.csv'} "
          f"(c_ref = {c_ref:.4f})")
    return 0


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        rc = load_config(args.config)
        rc = rc.with_overrides(mode=args.mode, seed=args.seed, seeds=args.seeds,
                               out_dir=args.out_dir, radius_mode=args.radius_mode)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        if rc.mode == "simulate":
            return cmd_simulate(rc, make_plots=not args.no_plots)
        if rc.mode == "verify":
            return cmd_verify(rc, make_plots=not args.no_plots)
        return cmd_sweep(rc, make_plots=not args.no_plots)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
