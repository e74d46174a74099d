"""SubGaussian noise models: sampling determinism, tail and moment bounds."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from mpmath import mp, mpf

from ambilearn.noise import NoiseModel, NoiseModelError, dirac_zero

mp.dps = 40


def std_gaussian(n=3, var=0.25, sigma=0.5):
    return NoiseModel.gaussian(var * np.eye(n), sigma)


class TestConstruction:
    def test_non_psd_covariance_rejected(self):
        with pytest.raises(NoiseModelError):
            NoiseModel.gaussian([[1.0, 2.0], [2.0, 1.0]], sigma=2.0)

    def test_covariance_eigenvalue_vs_sigma(self):
        with pytest.raises(NoiseModelError):
            NoiseModel.gaussian(np.eye(2), sigma=0.5)
        NoiseModel.gaussian(0.25 * np.eye(2), sigma=0.5)

    def test_ball_support_must_fit_sigma(self):
        with pytest.raises(NoiseModelError):
            NoiseModel.uniform_ball(radius=0.6, dim=2, sigma=0.5)

    def test_discrete_must_be_zero_mean(self):
        with pytest.raises(NoiseModelError):
            NoiseModel.discrete([[0.2], [0.3]], [0.5, 0.5], sigma=1.0)
        NoiseModel.discrete([[0.2], [-0.2]], [0.5, 0.5], sigma=1.0)

    def test_weights_must_sum_to_one(self):
        with pytest.raises(NoiseModelError):
            NoiseModel.discrete([[0.1], [-0.1]], [0.7, 0.2], sigma=1.0)

    def test_mixture_component_sigma_dominated(self):
        g = std_gaussian(2, 0.25, 0.5)
        with pytest.raises(NoiseModelError):
            NoiseModel.mixture([(1.0, g)], sigma=0.4)

    def test_from_config_rejects_unknown_keys(self):
        with pytest.raises(NoiseModelError):
            NoiseModel.from_config({"kind": "gaussian", "covariance": [[0.25]],
                                    "sigma": 0.5, "typo": 1})

    def test_from_config_round_trip_kinds(self):
        spec = {
            "kind": "mixture",
            "sigma": 0.5,
            "components": [
                {"weight": 0.5, "model": {"kind": "gaussian",
                                          "covariance": [[0.1, 0.0], [0.0, 0.1]],
                                          "sigma": 0.35}},
                {"weight": 0.5, "model": {"kind": "uniform_ball",
                                          "radius": 0.35, "dim": 2}},
            ],
        }
        model = NoiseModel.from_config(spec)
        assert model.kind == "mixture" and model.dim == 2 and model.sigma == 0.5


class TestSampling:
    def test_degenerate_dirac_always_zero(self):
        model = dirac_zero(3)
        rng = np.random.default_rng(0)
        for _ in range(5):
            assert np.array_equal(model.sample(rng), np.zeros(3))

    def test_gaussian_clt_mean(self):
        # 3 sigma / sqrt(N) = 0.0015 for sigma = 0.5, N = 1e6.
        model = std_gaussian()
        draws = model.sample_many(np.random.default_rng(123), 10**6)
        assert np.abs(draws.mean(axis=0)).max() < 0.002

    def test_uniform_ball_support(self):
        model = NoiseModel.uniform_ball(radius=0.5, dim=3)
        draws = model.sample_many(np.random.default_rng(5), 20000)
        assert np.linalg.norm(draws, axis=1).max() <= 0.5 + 1e-12

    def test_seeded_sampling_is_reproducible(self):
        model = std_gaussian()
        a = model.sample_many(np.random.default_rng(99), 64)
        b = model.sample_many(np.random.default_rng(99), 64)
        assert np.array_equal(a, b)

    def test_single_component_mixture_matches_component_stream(self):
        comp = NoiseModel.uniform_ball(radius=0.4, dim=2)
        mix = NoiseModel.mixture([(1.0, comp)])
        a = comp.sample_many(np.random.default_rng(31), 50)
        b = mix.sample_many(np.random.default_rng(31), 50)
        assert np.array_equal(a, b)

    def test_mixture_draws_respect_component_supports(self):
        mix = NoiseModel.mixture([
            (0.5, std_gaussian(3, 0.35**2, 0.35)),
            (0.5, NoiseModel.uniform_ball(radius=0.35, dim=3)),
        ], sigma=0.5)
        draws = mix.sample_many(np.random.default_rng(17), 10000)
        assert draws.shape == (10000, 3)
        assert np.all(np.isfinite(draws))


class TestTailBound:
    def test_zero_threshold_clamps_to_one(self):
        assert std_gaussian().tail_bound(0.0) == 1.0

    def test_closed_form_n1(self):
        # 2 exp(-8), checked at 40 digits.
        expected = float(2 * mp.e**mpf(-8))
        model = NoiseModel.gaussian([[0.25]], sigma=0.5)
        assert model.tail_bound(2.0) == pytest.approx(expected, rel=1e-12)
        assert model.tail_bound(2.0) == pytest.approx(6.709e-4, rel=1e-3)

    def test_closed_form_n3(self):
        expected = float(6 * mp.e**mpf(-18))
        assert std_gaussian().tail_bound(3.0) == pytest.approx(expected, rel=1e-12)

    def test_negative_eta_rejected(self):
        with pytest.raises(NoiseModelError):
            std_gaussian().tail_bound(-0.1)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(min_value=0, max_value=100, allow_nan=False))
    def test_is_probability_and_decreasing(self, eta):
        model = std_gaussian()
        b = model.tail_bound(eta)
        assert 0.0 <= b <= 1.0
        assert model.tail_bound(eta + 1.0) <= b


class TestMomentBound:
    def test_values(self):
        assert NoiseModel.gaussian([[1.0]], sigma=1.0).moment_bound(1) == pytest.approx(1.0)
        assert std_gaussian().moment_bound(2) == pytest.approx(3.0)
        # l = 1 gives n * sigma, the quantity used by the naive confidence option.
        assert std_gaussian().moment_bound(1) == pytest.approx(1.5)

    def test_zero_order_rejected(self):
        with pytest.raises(NoiseModelError):
            std_gaussian().moment_bound(0)


N_DOMINANCE = 10**5


@pytest.fixture(scope="module", params=["gaussian", "ball", "mixture"])
def model_and_draws(request):
    if request.param == "gaussian":
        model = std_gaussian()
    elif request.param == "ball":
        model = NoiseModel.uniform_ball(radius=0.5, dim=3)
    else:
        model = NoiseModel.mixture([
            (0.5, std_gaussian(3, 0.35**2, 0.35)),
            (0.5, NoiseModel.uniform_ball(radius=0.35, dim=3)),
        ], sigma=0.5)
    draws = model.sample_many(np.random.default_rng(2024), N_DOMINANCE)
    return model, np.abs(draws).max(axis=1)


class TestEmpiricalDominance:
    """Monte Carlo checks that the closed-form bounds dominate reality."""

    def test_tail_dominance(self, model_and_draws):
        model, inf_norms = model_and_draws
        for mult in np.arange(0.25, 4.25, 0.25):
            eta = mult * model.sigma
            bound = model.tail_bound(eta)
            freq = float((inf_norms >= eta).mean())
            slack = 3.0 * math.sqrt(bound * (1 - bound) / N_DOMINANCE)
            assert freq <= bound + slack, (eta, freq, bound)

    def test_moment_dominance(self, model_and_draws):
        model, inf_norms = model_and_draws
        for l in (1, 2, 3):
            assert (inf_norms**l).mean() <= model.moment_bound(l)
