"""Acceptance criteria, one test per criterion, at the stated tolerances.

Each test prints a single PASS/FAIL line (visible with ``pytest -s`` or on
failure). The 100-seed adaptive batch is shared between the composite-coverage
and concentration criteria.
"""

import itertools
import math

import numpy as np
import pytest
from mpmath import mp, mpf

from ambilearn.ambiguity import drift_term_H, empirical_P_hat, empirical_Q, radius_epsilon
from ambilearn.cli import main as cli_main
from ambilearn.estimator import alpha_confidence
from ambilearn.noise import NoiseModel
from ambilearn.predictors import Predictor, evaluate_mixture
from ambilearn.robot_sim import ScenarioConfig, ZoneMap, default_zone_map, run_scenario
from ambilearn.transport import DiscreteMeasure, w1_distance
from ambilearn.verification import (
    AdaptiveTrialSpec,
    KnownFTrialSpec,
    adaptive_coverage,
    known_f_coverage,
)

from conftest import random_affine_set, random_alpha_star, rollout_window

mp.dps = 50


def report(num: int, ok: bool, detail: str) -> None:
    print(f"ACCEPTANCE {num:2d}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, detail


@pytest.fixture(scope="session")
def adaptive_batch():
    spec = AdaptiveTrialSpec(cfg=ScenarioConfig(steps=1900, T0=300, seed=0),
                             zones=default_zone_map())
    return adaptive_coverage(spec, seeds=range(100))


def test_01_closed_form_radius():
    got = radius_epsilon(T=100, beta=0.05, n=1, sigma=0.5)
    # Independent high-precision evaluation of the same closed form.
    sigma, beta = mpf("0.5"), mpf("0.05")
    first = mp.sqrt(2 * 1 * sigma**2 * mp.log(1 / beta) / 100)
    c = mpf(3) ** mpf("3.5") * 2**10 * sigma**3
    expected = float(first + c * mpf(100) ** mpf("-0.5"))
    ok = abs(got - expected) <= 1e-2 and abs(got - 598.72) <= 1e-2
    report(1, ok, f"radius = {got:.5f}, high-precision = {expected:.5f}")


def test_02_identity_collapse():
    rng = np.random.default_rng(202)
    worst = 0.0
    for _ in range(100):
        pset = random_affine_set(rng, n=3, p=3, m=2)
        alpha_star = random_alpha_star(rng, 3)
        window, d_next = rollout_window(rng, pset, alpha_star, T=20)
        f_true = Predictor("truth", lambda t, x, d: evaluate_mixture(
            pset, alpha_star, t, x, d))
        q = empirical_Q(window, f_true, d_next)
        p_hat = empirical_P_hat(window, pset, alpha_star, d_next)
        worst = max(worst, float(np.abs(q.atoms - p_hat.atoms).max()))
        worst = max(worst, w1_distance(q.to_measure(), p_hat.to_measure()))
    report(2, worst <= 1e-12, f"worst atom/transport gap = {worst:.3e}")


def test_03_thm1_bound():
    rng = np.random.default_rng(303)
    checked = 0
    worst_slack = np.inf
    while checked < 500:
        pset = random_affine_set(rng, n=3, p=3, m=2)
        alpha_star = random_alpha_star(rng, 3)   # alpha_star sums to one
        window, d_next = rollout_window(rng, pset, alpha_star, T=20)
        alpha = alpha_star + rng.normal(size=3) * rng.uniform(0.05, 1.0)
        if abs(alpha.sum()) < 1e-3:
            continue
        f_true = Predictor("truth", lambda t, x, d: evaluate_mixture(
            pset, alpha_star, t, x, d))
        q = empirical_Q(window, f_true, d_next)
        p_hat = empirical_P_hat(window, pset, alpha, d_next)
        dw = w1_distance(q.to_measure(), p_hat.to_measure())
        bound = float(np.abs(alpha_star - alpha).max()
                      * drift_term_H(window, pset, d_next))
        worst_slack = min(worst_slack, bound + 1e-9 - dw)
        assert dw <= bound + 1e-9, (dw, bound)
        checked += 1
    report(3, worst_slack >= 0.0,
           f"500 pairs, minimum slack = {worst_slack:.3e}")


def test_04_noiseless_recovery():
    targets = {
        "smooth": ((0.0, 0.0), np.array([1.0, 0.0, 0.0])),
        "slippery": ((4.0, 0.0), np.array([0.6, 0.4, 0.0])),
        "sandy": ((-6.0, 0.0), np.array([1.6, -0.6, 0.0])),
    }
    cfg = ScenarioConfig(steps=650, T0=300, sigma=0.0, noise_kind="none", seed=0)
    details = []
    ok = True
    for name, (e, alpha_star) in targets.items():
        log = run_scenario(cfg, ZoneMap(regions=(), default_e=e))
        settled = log.alpha_matrix()[log["t"] >= 2 * cfg.T0]
        err = float(np.abs(settled - alpha_star).max())
        details.append(f"{name}: {err:.2e}")
        ok &= err <= 1e-6
    report(4, ok, "; ".join(details))


def test_05_lemma1_coverage():
    spec = KnownFTrialSpec(
        predictor_name="scalar_linear", predictor_params={"a": 0.8, "b": 1.0},
        noise_config={"kind": "gaussian", "covariance": [[0.25]], "sigma": 0.5},
        dim_state=1, dim_input=1, steps=50, T0=50, beta=0.05, sigma=0.5,
        n_reference_atoms=10_000)
    out = known_f_coverage(spec, seeds=range(200))
    ok = out["coverage"] >= 0.95
    report(5, ok, f"coverage = {out['coverage']:.3f} >= 0.95 over 200 seeds")


def test_06_composite_coverage(adaptive_batch):
    out = adaptive_batch
    assert all(r["final_steady"] for r in out["trials"]), \
        "checkpoint fell inside a zone-switch exclusion window"
    ok = out["coverage"] >= out["floor"]
    report(6, ok, f"coverage = {out['coverage']:.3f} >= Eq.-style floor "
                  f"{out['floor']:.5f} over 100 seeds")


def test_07_thm2_concentration(adaptive_batch):
    trials = adaptive_batch["trials"]
    freq = float(np.mean([r["alpha_in_gamma"] for r in trials]))
    naive_floor = max(
        alpha_confidence(r["gamma"], r["c"], 3, 300, mode="naive").value
        for r in trials)
    ok = freq >= naive_floor - 0.05
    report(7, ok, f"freq(|alpha - alpha*|_inf <= gamma) = {freq:.3f} >= "
                  f"naive {naive_floor:.3f} - 0.05")


def test_08_subgaussian_lemmas():
    model = NoiseModel.mixture([
        (0.5, NoiseModel.gaussian(0.35**2 * np.eye(3), 0.35)),
        (0.5, NoiseModel.uniform_ball(radius=0.35, dim=3)),
    ], sigma=0.5)
    draws = model.sample_many(np.random.default_rng(808), 10**5)
    inf_norms = np.abs(draws).max(axis=1)
    ok = True
    for eta in 0.5 * np.arange(1, 9) * model.sigma:   # 8-point grid
        bound = model.tail_bound(float(eta))
        freq = float((inf_norms >= eta).mean())
        slack = 3.0 * math.sqrt(bound * (1.0 - bound) / 10**5)
        ok &= freq <= bound + slack
    moment_ok = all((inf_norms**l).mean() <= model.moment_bound(l) for l in (1, 2, 3))
    report(8, ok and moment_ok, "tail bounds on 8-point grid and moments l in {1,2,3}")


def test_09_transport_oracle():
    rng = np.random.default_rng(909)
    worst = 0.0
    for _ in range(200):
        m = int(rng.integers(1, 8))
        n = int(rng.integers(1, 4))
        a, b = rng.normal(size=(m, n)), rng.normal(size=(m, n))
        solver = w1_distance(DiscreteMeasure.uniform(a), DiscreteMeasure.uniform(b))
        brute = min(np.linalg.norm(a - b[list(perm)], axis=1).mean()
                    for perm in itertools.permutations(range(m)))
        worst = max(worst, abs(solver - brute))
    # Metric axioms and translation invariance on random triples.
    axiom_worst = 0.0
    for _ in range(60):
        m = int(rng.integers(1, 17))
        P, Q, R = (DiscreteMeasure.uniform(rng.normal(size=(m, 2)) * 5)
                   for _ in range(3))
        dpq, dqp = w1_distance(P, Q), w1_distance(Q, P)
        axiom_worst = max(axiom_worst, abs(dpq - dqp))
        axiom_worst = max(axiom_worst, dpq - (w1_distance(P, R) + w1_distance(R, Q)))
        axiom_worst = max(axiom_worst, w1_distance(P, P))
        v = rng.normal(size=2)
        axiom_worst = max(axiom_worst,
                          abs(w1_distance(P.translate(v), Q.translate(v)) - dpq))
    ok = worst <= 1e-12 and axiom_worst <= 1e-10
    report(9, ok, f"assignment vs permutations gap = {worst:.2e}; "
                  f"axiom violation = {axiom_worst:.2e}")


def test_10_determinism(tmp_path):
    import json
    cfg = {
        "mode": "simulate", "out_dir": "", "seed": 31,
        "scenario": {"kind": "unicycle", "steps": 400, "T0": 100, "sigma": 0.5},
    }
    outputs = []
    for name in ("first", "second"):
        out = tmp_path / name
        cfg["out_dir"] = str(out)
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(cfg))
        assert cli_main(["--config", str(path), "--no-plots"]) == 0
        outputs.append((out / "run.csv").read_bytes())
    ok = outputs[0] == outputs[1]
    report(10, ok, "identical seed + config give byte-identical CSV")
