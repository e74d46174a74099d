"""Shared builders for randomized windows and mixture environments."""

import numpy as np
import pytest

from ambilearn.ambiguity import HistoryWindow
from ambilearn.predictors import Predictor, PredictorSet, evaluate_mixture


def _spectral_normalize(A, target):
    rho = np.abs(np.linalg.eigvals(A)).max()
    return A * (target / max(rho, target))


def random_affine_set(rng, n=3, p=3, m=2):
    """PredictorSet of p random affine fields with mild time dependence.

    The linear parts share a contractive core with small per-predictor
    deviations, so unit-sum mixtures stay stable and rollouts remain O(1),
    keeping absolute atom tolerances meaningful.
    """
    core = _spectral_normalize(rng.normal(size=(n, n)), 0.35)
    preds = []
    for i in range(p):
        A = core + 0.15 * _spectral_normalize(rng.normal(size=(n, n)), 1.0)
        B = rng.normal(size=(n, m)) * 0.4
        c = rng.normal(size=n)
        g = rng.normal(size=n) * 0.05

        def fn(t, x, d, A=A, B=B, c=c, g=g):
            return x @ A.T + d @ B.T + c + g * np.sin(0.1 * t)

        preds.append(Predictor(f"affine_{i}", fn))
    return PredictorSet(preds, dim_state=n, dim_input=m)


def rollout_window(rng, pset, alpha_star, T, noise_scale=0.1, T0=None):
    """Simulate T steps of the mixture truth and return (window, d_next)."""
    n, m = pset.dim_state, pset.dim_input
    window = HistoryWindow(T0)
    x = rng.normal(size=n)
    window.start(x)
    for t in range(T):
        d = rng.normal(size=m)
        w = noise_scale * rng.normal(size=n)
        x = evaluate_mixture(pset, alpha_star, t, x, d) + w
        window.record(d, x)
    return window, rng.normal(size=m)


def random_alpha_star(rng, p, unit_sum=True):
    """Coefficients with moderate entries (|alpha|_1 <= ~2), sum 1 by default."""
    z = rng.normal(size=p)
    a = rng.dirichlet(np.ones(p)) + 0.3 * (z - z.mean())  # zero-sum perturbation
    if not unit_sum:
        a = a + rng.normal() * 0.2
    return a


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
