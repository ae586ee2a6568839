import math

import mpmath as mp
import numpy as np
import pytest

from micg.beliefs import GaussianBelief
from micg.phenotyping import AdjustedMatrix
from micg.surrogate import (
    FitnessSample,
    LikelihoodConfig,
    MLPSpec,
    NetParams,
    build_training_set,
    forward,
    forward_batch,
    gaussian_logpdf,
    init_params,
    mse_loss,
    params_from_json,
    params_to_json,
    true_log_fitness,
)


def zero_params(spec):
    return NetParams(
        spec,
        [np.zeros((i, o)) for i, o in spec.layer_dims()],
        [np.zeros(o) for _, o in spec.layer_dims()],
    )


def beliefs_for(ids, mean=1.0, var=0.5):
    return {i: GaussianBelief(i, mean, var) for i in ids}


def matrix(ids, values):
    values = np.asarray(values, dtype=float)
    return AdjustedMatrix(
        respondent_ids=tuple(f"r{i}" for i in range(values.shape[0])),
        indicator_ids=tuple(ids),
        values=values,
    )


class TestForward:
    def test_zero_network_outputs_zero(self):
        spec = MLPSpec(input_dim=3)
        psi = zero_params(spec)
        assert forward(psi, [1.0, -2.0, 0.5]) == 0.0

    def test_linear_network(self):
        # no hidden layers: output = w . x + b
        spec = MLPSpec(input_dim=2, hidden_layers=())
        psi = NetParams(spec, [np.array([[2.0], [-1.0]])], [np.array([0.5])])
        assert forward(psi, [3.0, 4.0]) == 2.0 * 3.0 - 1.0 * 4.0 + 0.5

    def test_2_3_1_hand_computation(self):
        spec = MLPSpec(input_dim=2, hidden_layers=(3,))
        W1 = np.array([[0.1, -0.2, 0.3], [0.4, 0.5, -0.6]])
        b1 = np.array([0.01, -0.02, 0.03])
        W2 = np.array([[0.7], [-0.8], [0.9]])
        b2 = np.array([0.05])
        psi = NetParams(spec, [W1, W2], [b1, b2])
        x = [0.25, -0.75]
        h = [
            math.tanh(0.1 * 0.25 + 0.4 * -0.75 + 0.01),
            math.tanh(-0.2 * 0.25 + 0.5 * -0.75 - 0.02),
            math.tanh(0.3 * 0.25 + -0.6 * -0.75 + 0.03),
        ]
        expected = 0.7 * h[0] - 0.8 * h[1] + 0.9 * h[2] + 0.05
        assert forward(psi, x) == pytest.approx(expected, abs=1e-12)

    def test_shape_mismatch(self):
        psi = zero_params(MLPSpec(input_dim=3))
        with pytest.raises(ValueError):
            forward(psi, [1.0, 2.0])

    def test_batch_matches_single(self):
        rng = np.random.default_rng(0)
        spec = MLPSpec(input_dim=4, hidden_layers=(5, 3))
        psi = init_params(spec, rng)
        batch = rng.normal(size=(6, 4))
        outs = forward_batch(psi, batch)
        for i in range(6):
            assert outs[i] == pytest.approx(forward(psi, batch[i]), abs=0)

    def test_param_shapes_validated(self):
        spec = MLPSpec(input_dim=2, hidden_layers=(3,))
        with pytest.raises(ValueError):
            NetParams(spec, [np.zeros((2, 2)), np.zeros((3, 1))], [np.zeros(3), np.zeros(1)])


class TestGaussianLogpdf:
    def test_at_mean_unit_variance(self):
        assert gaussian_logpdf(0.0, 0.0, 1.0) == pytest.approx(
            -0.5 * math.log(2 * math.pi), rel=1e-15
        )

    def test_one_standard_deviation(self):
        at_mean = gaussian_logpdf(2.0, 2.0, 4.0)
        at_sd = gaussian_logpdf(4.0, 2.0, 4.0)
        assert at_mean - at_sd == pytest.approx(0.5, rel=1e-12)

    def test_direct_formula(self):
        # (x=2, mean=0, var=4) -> -0.5*log(8*pi) - 0.5
        expected = -0.5 * math.log(8 * math.pi) - 0.5
        assert gaussian_logpdf(2.0, 0.0, 4.0) == pytest.approx(expected, rel=1e-15)

    def test_nonpositive_variance_rejected(self):
        with pytest.raises(ValueError):
            gaussian_logpdf(0.0, 0.0, 0.0)


class TestTrueLogFitness:
    def test_no_responses_prior_only(self):
        cfg = LikelihoodConfig(tau_sq=1.0, prior_beliefs=beliefs_for(["a", "b"]))
        omega = np.array([1.0, 2.0])
        expected = gaussian_logpdf(1.0, 1.0, 0.5) + gaussian_logpdf(2.0, 1.0, 0.5)
        assert true_log_fitness(omega, None, cfg) == pytest.approx(expected, rel=1e-15)

    def test_single_cell_at_peak(self):
        cfg = LikelihoodConfig(tau_sq=2.0, prior_beliefs=beliefs_for(["a"]))
        omega = np.array([1.5])
        m = matrix(["a"], [[1.5]])
        expected = gaussian_logpdf(1.5, 1.0, 0.5) - 0.5 * math.log(2 * math.pi * 2.0)
        assert true_log_fitness(omega, m, cfg) == pytest.approx(expected, rel=1e-14)

    def test_missing_cells_skipped(self):
        cfg = LikelihoodConfig(tau_sq=1.0, prior_beliefs=beliefs_for(["a", "b"]))
        omega = np.array([1.0, 1.0])
        full = matrix(["a", "b"], [[2.0, math.nan]])
        only_a = matrix(["a"], [[2.0]])
        assert true_log_fitness(omega, full, cfg) == true_log_fitness(omega, only_a, cfg)

    def test_matches_naive_density_product(self):
        rng = np.random.default_rng(9)
        ids = ["a", "b"]
        beliefs = {
            "a": GaussianBelief("a", 0.3, 0.8),
            "b": GaussianBelief("b", -0.2, 1.5),
        }
        cfg = LikelihoodConfig(tau_sq=0.7, prior_beliefs=beliefs)
        y = rng.uniform(0.5, 5.0, size=(3, 2))
        omega = rng.normal(size=2)
        with mp.workdps(60):
            def npdf(x, mean, var):
                return mp.exp(-((mp.mpf(x) - mean) ** 2) / (2 * var)) / mp.sqrt(
                    2 * mp.pi * var
                )

            product = mp.mpf(1)
            for i in range(3):
                for j in range(2):
                    product *= npdf(y[i, j], omega[j], 0.7)
            product *= npdf(omega[0], 0.3, 0.8) * npdf(omega[1], -0.2, 1.5)
            expected = float(mp.log(product))
        got = true_log_fitness(omega, matrix(ids, y), cfg)
        assert got == pytest.approx(expected, rel=1e-12)
        assert math.exp(got) == pytest.approx(float(math.exp(expected)), rel=1e-10)

    def test_maximized_at_prior_mean_without_data(self):
        cfg = LikelihoodConfig(tau_sq=1.0, prior_beliefs=beliefs_for(["a"], mean=1.3))
        best = true_log_fitness(np.array([1.3]), None, cfg)
        for w in np.linspace(-3, 5, 81):
            assert true_log_fitness(np.array([w]), None, cfg) <= best + 1e-12

    def test_unknown_indicator_rejected(self):
        cfg = LikelihoodConfig(tau_sq=1.0, prior_beliefs=beliefs_for(["a"]))
        with pytest.raises(ValueError):
            true_log_fitness(np.array([0.0]), matrix(["zz"], [[1.0]]), cfg)

    def test_tau_must_be_positive(self):
        with pytest.raises(ValueError):
            LikelihoodConfig(tau_sq=0.0, prior_beliefs=beliefs_for(["a"]))


class TestMseLoss:
    def test_exact_network_zero_loss(self):
        spec = MLPSpec(input_dim=1, hidden_layers=())
        psi = NetParams(spec, [np.array([[2.0]])], [np.array([1.0])])
        samples = [
            FitnessSample(np.array([x]), 2.0 * x + 1.0) for x in (-1.0, 0.0, 2.5)
        ]
        assert mse_loss(psi, samples) == 0.0

    def test_constant_zero_network(self):
        spec = MLPSpec(input_dim=1, hidden_layers=())
        psi = zero_params(spec)
        samples = [FitnessSample(np.array([0.0]), 1.0), FitnessSample(np.array([0.0]), -1.0)]
        assert mse_loss(psi, samples) == 1.0

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(4)
        spec = MLPSpec(input_dim=3, hidden_layers=(4,))
        psi = init_params(spec, rng)
        samples = [
            FitnessSample(rng.normal(size=3), float(rng.normal())) for _ in range(11)
        ]
        total = 0.0
        for s in samples:
            total += (forward(psi, s.omega) - s.log_true_fitness) ** 2
        assert mse_loss(psi, samples) == pytest.approx(total / 11, rel=1e-14)

    def test_empty_rejected(self):
        psi = zero_params(MLPSpec(input_dim=1, hidden_layers=()))
        with pytest.raises(ValueError):
            mse_loss(psi, [])


class TestBuildTrainingSet:
    def test_deterministic(self):
        cfg = LikelihoodConfig(tau_sq=1.0, prior_beliefs=beliefs_for(["a", "b"]))
        one = build_training_set(123, None, cfg, 5)
        two = build_training_set(123, None, cfg, 5)
        for s1, s2 in zip(one, two):
            assert np.array_equal(s1.omega, s2.omega)
            assert s1.log_true_fitness == s2.log_true_fitness

    def test_degenerate_prior_concentrates(self):
        beliefs = {"a": GaussianBelief("a", 2.5, 1e-12)}
        cfg = LikelihoodConfig(tau_sq=1.0, prior_beliefs=beliefs)
        samples = build_training_set(0, None, cfg, 20)
        for s in samples:
            assert abs(s.omega[0] - 2.5) < 1e-4

    def test_sample_mean_within_standard_error(self):
        beliefs = {
            "a": GaussianBelief("a", 1.0, 4.0),
            "b": GaussianBelief("b", -2.0, 0.25),
        }
        cfg = LikelihoodConfig(tau_sq=1.0, prior_beliefs=beliefs)
        samples = build_training_set(7, None, cfg, 100)
        omegas = np.stack([s.omega for s in samples])
        for j, ind in enumerate(cfg.ordered_ids):
            sd = math.sqrt(beliefs[ind].variance)
            bound = 3.0 * sd / math.sqrt(100)
            assert abs(omegas[:, j].mean() - beliefs[ind].mean) < bound


class TestSerialization:
    def test_round_trip_bit_exact(self):
        rng = np.random.default_rng(17)
        spec = MLPSpec(input_dim=5, hidden_layers=(7, 3))
        psi = init_params(spec, rng)
        again = params_from_json(params_to_json(psi))
        assert again.spec == spec
        for W1, W2 in zip(psi.weights, again.weights):
            assert np.array_equal(W1, W2)
        for b1, b2 in zip(psi.biases, again.biases):
            assert np.array_equal(b1, b2)

    def test_spec_invariants(self):
        with pytest.raises(ValueError):
            MLPSpec(input_dim=0)
        with pytest.raises(ValueError):
            MLPSpec(input_dim=2, hidden_layers=(0,))
