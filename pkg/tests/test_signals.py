import math

import numpy as np
import pytest
from scipy.integrate import quad

from conftest import within_standard_errors
from nnlmf.signals import (
    PAPER_PSI0,
    PAPER_W_STAR,
    InputModel,
    NoiseModel,
    SystemModel,
    correlation_matrix,
    desired_response,
    generate_input_sequence,
    generate_noise_sequence,
    noise_moments,
    realization_seed,
    snr_db,
    stream_seeds,
)


def batch_mean_se(x, n_batches=100):
    """Mean and a standard error that tolerates serial correlation (batch means)."""
    batches = np.asarray(x).reshape(n_batches, -1).mean(axis=1)
    return float(batches.mean()), float(batches.std(ddof=1) / math.sqrt(n_batches))


class TestInputModel:
    def test_white_sample_variance_is_unit(self):
        u = generate_input_sequence(InputModel.white(), 100_000, seed=11)
        v = u**2
        assert within_standard_errors(v.mean(), 1.0, v.std(ddof=1) / math.sqrt(v.size))

    def test_ar1_process_variance_formula(self):
        m = InputModel.ar1(0.5, 0.75)
        assert m.process_variance == pytest.approx(0.75 / (1 - 0.25), rel=1e-15)
        assert m.process_variance == pytest.approx(1.0)

    def test_ar1_long_run_variance(self):
        u = generate_input_sequence(InputModel.ar1(0.5, 0.75), 1_000_000, seed=3)
        mean, se = batch_mean_se(u**2)
        assert within_standard_errors(mean, 1.0, se)

    def test_sample_mean_vanishes(self):
        for model in (InputModel.white(), InputModel.ar1(0.5, 0.75)):
            u = generate_input_sequence(model, 1_000_000, seed=5)
            mean, se = batch_mean_se(u)
            assert within_standard_errors(mean, 0.0, se)

    def test_ar1_autocorrelation_matches_toeplitz_row(self):
        model = InputModel.ar1(0.5, 0.75)
        M = 4
        u = generate_input_sequence(model, 1_000_000 + M, seed=21)
        R = correlation_matrix(model, M)
        for lag in range(M):
            products = u[M:] * u[M - lag:u.size - lag]
            mean, se = batch_mean_se(products)
            assert within_standard_errors(mean, R[0, lag], se), lag

    def test_ar1_first_sample_is_stationary(self):
        # across many seeds u(0) must already have the stationary variance
        model = InputModel.ar1(0.9, 1.0 - 0.81)
        first = np.array([generate_input_sequence(model, 1, seed=s)[0] for s in range(4000)])
        sq = first**2
        assert within_standard_errors(sq.mean(), 1.0, sq.std(ddof=1) / math.sqrt(sq.size))

    def test_single_sample_is_reproducible(self):
        a = generate_input_sequence(InputModel.white(), 1, seed=99)
        b = generate_input_sequence(InputModel.white(), 1, seed=99)
        assert a.shape == (1,) and a[0] == b[0]

    def test_different_seeds_differ(self):
        a = generate_input_sequence(InputModel.white(), 10, seed=1)
        b = generate_input_sequence(InputModel.white(), 10, seed=2)
        assert not np.array_equal(a, b)

    @pytest.mark.parametrize("bad", [dict(kind="ar1", ar_pole=1.0), dict(kind="ar1", ar_pole=0.5, innovation_variance=0.0),
                                     dict(kind="white", variance=-1.0), dict(kind="pink")])
    def test_invalid_models_rejected(self, bad):
        with pytest.raises(ValueError):
            InputModel(**bad)

    def test_negative_sample_count_rejected(self):
        with pytest.raises(ValueError):
            generate_input_sequence(InputModel.white(), -1, seed=0)


class TestNoise:
    def test_binary_support(self):
        z = generate_noise_sequence(NoiseModel.binary(2.0), 100_000, seed=4)
        assert set(np.unique(z)) == {-2.0, 2.0}

    def test_uniform_mean_and_variance(self):
        z = generate_noise_sequence(NoiseModel.uniform(5.0), 100_000, seed=8)
        assert np.all(np.abs(z) <= 5.0)
        n = z.size
        assert within_standard_errors(z.mean(), 0.0, z.std(ddof=1) / math.sqrt(n))
        assert within_standard_errors((z**2).mean(), 25 / 3, (z**2).std(ddof=1) / math.sqrt(n))

    def test_same_seed_same_sequence(self):
        for model in (NoiseModel.uniform(5.0), NoiseModel.binary(2.0), NoiseModel.gaussian(1.0)):
            a = generate_noise_sequence(model, 1000, seed=17)
            b = generate_noise_sequence(model, 1000, seed=17)
            assert np.array_equal(a, b)

    def test_moment_examples(self):
        assert noise_moments(NoiseModel.gaussian(1.0)) == pytest.approx((1.0, 3.0, 15.0), rel=1e-15)
        assert noise_moments(NoiseModel.binary(2.0)) == pytest.approx((4.0, 16.0, 64.0), rel=1e-15)
        assert noise_moments(NoiseModel.uniform(5.0)) == pytest.approx((25 / 3, 125.0, 15625 / 7), rel=1e-14)

    @pytest.mark.parametrize("a", [0.5, 1.0, 5.0])
    def test_uniform_moments_by_quadrature(self, a):
        expected = [quad(lambda z, p=p: z**p / (2 * a), -a, a)[0] for p in (2, 4, 6)]
        assert noise_moments(NoiseModel.uniform(a)) == pytest.approx(expected, rel=1e-10)

    @pytest.mark.parametrize("model", [NoiseModel.uniform(5.0), NoiseModel.binary(2.0), NoiseModel.gaussian(1.3)])
    def test_moments_match_empirical(self, model):
        z = generate_noise_sequence(model, 1_000_000, seed=23)
        n = z.size
        for p, target in zip((2, 4, 6), noise_moments(model)):
            x = z**p
            assert within_standard_errors(x.mean(), target, x.std(ddof=1) / math.sqrt(n)), p

    @pytest.mark.parametrize("model", [NoiseModel.uniform(5.0), NoiseModel.binary(2.0), NoiseModel.gaussian(1.3)])
    def test_odd_moments_vanish(self, model):
        z = generate_noise_sequence(model, 1_000_000, seed=29)
        for p in (1, 3):
            x = z**p
            assert within_standard_errors(x.mean(), 0.0, x.std(ddof=1) / math.sqrt(z.size)), p

    @pytest.mark.parametrize("model", [NoiseModel.uniform(2.0), NoiseModel.binary(0.7), NoiseModel.gaussian(3.0)])
    def test_moment_inequalities(self, model):
        s2, m4, m6 = noise_moments(model)
        assert m4 >= s2**2 * (1 - 1e-15)
        assert m6 >= s2 * m4 * (1 - 1e-15)

    def test_degenerate_gaussian_is_silent(self):
        z = generate_noise_sequence(NoiseModel.gaussian(0.0), 50, seed=0)
        assert np.all(z == 0.0)
        assert noise_moments(NoiseModel.gaussian(0.0)) == (0.0, 0.0, 0.0)

    @pytest.mark.parametrize("kind,scale", [("uniform", 0.0), ("binary", -1.0), ("gaussian", -0.1)])
    def test_invalid_scales_rejected(self, kind, scale):
        with pytest.raises(ValueError):
            NoiseModel(kind, scale)


class TestSnr:
    def test_uniform_five(self):
        assert snr_db(NoiseModel.uniform(5.0)) == pytest.approx(-9.21, abs=0.05)
        assert snr_db(NoiseModel.uniform(5.0)) == pytest.approx(-9.2, abs=0.05)

    def test_binary_two(self):
        assert snr_db(NoiseModel.binary(2.0)) == pytest.approx(-6.02, abs=0.05)
        assert snr_db(NoiseModel.binary(2.0)) == pytest.approx(-6.0, abs=0.05)


class TestCorrelationMatrix:
    def test_white_is_identity(self):
        assert np.array_equal(correlation_matrix(InputModel.white(), 3), np.eye(3))

    def test_ar1_toeplitz(self):
        R = correlation_matrix(InputModel.ar1(0.5, 0.75), 3)
        expected = np.array([[1, 0.5, 0.25], [0.5, 1, 0.5], [0.25, 0.5, 1]])
        np.testing.assert_allclose(R, expected, rtol=1e-15)

    @pytest.mark.parametrize("model", [InputModel.white(2.5), InputModel.ar1(-0.3, 0.4)])
    def test_scalar_is_process_variance(self, model):
        R = correlation_matrix(model, 1)
        assert R.shape == (1, 1) and R[0, 0] == pytest.approx(model.process_variance)


class TestDesiredResponse:
    def test_dot_product(self):
        system = SystemModel(np.array([1.0, -1.0]), InputModel.white(), NoiseModel.gaussian(0.0))
        assert desired_response(system, np.array([2.0, 3.0]), 0.0) == -1.0

    def test_zero_input_passes_noise(self):
        system = SystemModel(np.array([1.0, -1.0]), InputModel.white(), NoiseModel.gaussian(0.0))
        assert desired_response(system, np.zeros(2), 0.37) == 0.37

    def test_paper_response_power(self):
        w = np.array(PAPER_W_STAR)
        assert w @ w == pytest.approx(2.01)
        u = generate_input_sequence(InputModel.white(), 1_000_000 + 9, seed=31)
        d = np.convolve(u, w, mode="valid")
        mean, se = batch_mean_se(d[: 1_000_000] ** 2)
        assert within_standard_errors(mean, 2.01, se)


class TestConstantsAndSeeds:
    def test_paper_impulse_response(self):
        assert PAPER_W_STAR == (0.8, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1, -0.1, -0.3, -0.6)

    def test_default_psi0_is_documented_draw(self):
        assert np.array_equal(np.asarray(PAPER_PSI0), np.random.default_rng(2016).uniform(size=10))
        assert np.all((np.asarray(PAPER_PSI0) >= 0) & (np.asarray(PAPER_PSI0) < 1))

    def test_realization_streams_are_distinct_and_stable(self):
        a_in, a_noise = stream_seeds(realization_seed(0, 3))
        b_in, _ = stream_seeds(realization_seed(0, 3))
        c_in, _ = stream_seeds(realization_seed(0, 4))
        assert a_in.generate_state(4).tolist() == b_in.generate_state(4).tolist()
        assert a_in.generate_state(4).tolist() != c_in.generate_state(4).tolist()
        assert a_in.generate_state(4).tolist() != a_noise.generate_state(4).tolist()

    def test_system_order(self):
        assert SystemModel.paper().order == 10
