import numpy as np
import pytest
from numpy.testing import assert_allclose

from vqenoise.ansatz import Circuit, ProductLayer, SUNLayer, apply, build_sun
from vqenoise.core import (
    ValidationError,
    basis_state,
    expectation,
    ground_energy,
    pauli_string,
    random_hermitian,
)
from vqenoise.engine import (
    OptimizerConfig,
    TrainingDivergedError,
    VQEProblem,
    cost,
    fd_gradient,
    gradient,
    save_trace,
    train,
)
from vqenoise.experiments import make_random_vqe, make_single_qubit_cosine
from vqenoise.noise import (
    CoherentError,
    ControlErrorSpec,
    NoiseModel,
    amplitude_damping_channel,
    bit_flip_channel,
    depolarizing_channel,
)

X = pauli_string("X")
Y = pauli_string("Y")
Z = pauli_string("Z")


class TestVQEProblem:
    def test_default_shift_is_ground_energy(self):
        O = random_hermitian(1, seed=20)
        prob = VQEProblem(O, basis_state(1, 0), Circuit(1, [ProductLayer([Y])]))
        assert prob.cost_shift == pytest.approx(ground_energy(O))

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValidationError):
            VQEProblem(
                pauli_string("ZZ"), basis_state(1, 0), Circuit(1, [ProductLayer([Y])])
            )

    def test_explicit_shift_kept(self):
        prob = VQEProblem(Z, basis_state(1, 0), Circuit(1, [ProductLayer([Y])]), cost_shift=0.0)
        assert prob.cost_shift == 0.0


class TestCost:
    def test_cosine_closed_form(self):
        prob = make_single_qubit_cosine()
        for t in (0.0, 0.7, np.pi, 2.3):
            assert cost(prob, [t]) == pytest.approx(np.cos(t) + 1, abs=1e-12)

    def test_zero_theta_is_initial_expectation(self):
        O = random_hermitian(1, seed=21)
        rho0 = basis_state(1, 0)
        prob = VQEProblem(O, rho0, Circuit(1, [ProductLayer([Y])]), cost_shift=0.0)
        assert cost(prob, [0.0]) == pytest.approx(expectation(O, rho0), abs=1e-12)

    def test_depolarizing_mixes_toward_trace(self):
        O = random_hermitian(1, seed=22)
        c = Circuit(1, [ProductLayer([Y])])
        rho0 = basis_state(1, 0)
        p = 0.3
        noise = NoiseModel(channels={1: depolarizing_channel(p, 1)})
        noisy = VQEProblem(O, rho0, c, noise, cost_shift=0.0)
        clean = VQEProblem(O, rho0, c, cost_shift=0.0)
        th = [1.234]
        want = (1 - p) * cost(clean, th) + p * np.trace(O).real / 2
        assert cost(noisy, th) == pytest.approx(want, abs=1e-12)

    def test_control_error_evaluates_at_rescaled_theta(self):
        prob = make_single_qubit_cosine()
        eta = 0.1
        noisy = VQEProblem(
            prob.observable,
            prob.input_state,
            prob.circuit,
            NoiseModel(control=ControlErrorSpec(np.array([eta]))),
            prob.cost_shift,
        )
        for t in (0.2, 1.0, 2.5):
            assert cost(noisy, [t]) == pytest.approx(cost(prob, [(1 + eta) * t]), abs=1e-13)


class TestGradient:
    def test_cosine_gradient(self):
        prob = make_single_qubit_cosine()
        assert gradient(prob, [np.pi / 2])[0] == pytest.approx(-1.0, abs=1e-12)
        assert gradient(prob, [0.3])[0] == pytest.approx(-np.sin(0.3), abs=1e-12)

    def test_zero_at_critical_point(self):
        prob = make_single_qubit_cosine()
        assert abs(gradient(prob, [np.pi])[0]) < 1e-9

    def test_depolarizing_proportionality(self):
        prob = make_random_vqe(2, 2, seed=23)
        p = 0.4
        noisy = VQEProblem(
            prob.observable,
            prob.input_state,
            prob.circuit,
            NoiseModel(channels={1: depolarizing_channel(p, 2), 2: depolarizing_channel(0.0, 2)}),
            prob.cost_shift,
        )
        rng = np.random.default_rng(24)
        for _ in range(5):
            th = rng.uniform(-np.pi, np.pi, prob.circuit.total_params)
            g_noisy = gradient(noisy, th)
            g_clean = gradient(prob, th)
            assert np.max(np.abs(g_noisy - (1 - p) * g_clean)) <= 1e-10

    def test_matches_fd_on_clean_problem(self):
        prob = make_random_vqe(2, 1, seed=25)
        rng = np.random.default_rng(26)
        th = rng.uniform(-np.pi, np.pi, prob.circuit.total_params)
        g = gradient(prob, th)
        fd = fd_gradient(prob, th)
        assert np.max(np.abs(g - fd)) <= 1e-6 * max(1.0, np.max(np.abs(fd)))

    def test_matches_fd_with_mixed_noise(self):
        c = Circuit(1, [ProductLayer([random_hermitian(1, seed=27)]), SUNLayer([X, Z])])
        noise = NoiseModel(
            coherent=[CoherentError(1, Y, 0.2)],
            channels={2: amplitude_damping_channel(0.3)},
        )
        prob = VQEProblem(random_hermitian(1, seed=28), basis_state(1, 0), c, noise)
        rng = np.random.default_rng(29)
        th = rng.uniform(-np.pi, np.pi, c.total_params)
        assert np.max(np.abs(gradient(prob, th) - fd_gradient(prob, th))) <= 1e-6

    def test_matches_fd_with_control_error(self):
        c = build_sun(1, 2)
        eta = np.linspace(-0.1, 0.15, c.total_params)
        prob = VQEProblem(
            random_hermitian(1, seed=30),
            basis_state(1, 0),
            c,
            NoiseModel(control=ControlErrorSpec(eta)),
        )
        rng = np.random.default_rng(31)
        th = rng.uniform(-np.pi, np.pi, c.total_params)
        assert np.max(np.abs(gradient(prob, th) - fd_gradient(prob, th))) <= 1e-6


class TestFDGradient:
    def test_constant_observable_zero_gradient(self):
        prob = VQEProblem(
            np.eye(2, dtype=complex),
            basis_state(1, 0),
            Circuit(1, [ProductLayer([Y])]),
            cost_shift=0.0,
        )
        assert_allclose(fd_gradient(prob, [0.8]), [0.0], atol=1e-10)

    def test_cosine_at_half_pi(self):
        prob = make_single_qubit_cosine()
        assert fd_gradient(prob, [np.pi / 2], step=1e-5)[0] == pytest.approx(
            -1.0, abs=1e-9
        )


class TestOptimizerConfig:
    def test_rejects_nonpositive_step(self):
        with pytest.raises(ValidationError):
            OptimizerConfig(step_size=0.0)

    def test_rejects_negative_iters(self):
        with pytest.raises(ValidationError):
            OptimizerConfig(step_size=0.1, max_iters=-1)

    def test_zero_iters_evaluates_initial_point(self):
        prob = make_single_qubit_cosine()
        trace = train(prob, np.array([2.0]), OptimizerConfig(step_size=0.1, max_iters=0))
        assert trace.iterations_run == 0
        assert trace.final_cost == pytest.approx(np.cos(2.0) + 1)

    def test_rejects_negative_tolerance(self):
        with pytest.raises(ValidationError):
            OptimizerConfig(step_size=0.1, grad_tol=-1.0)


class TestTrain:
    def test_cosine_descends_to_pi(self):
        prob = make_single_qubit_cosine()
        trace = train(prob, np.array([3.0]), OptimizerConfig(step_size=0.1, max_iters=1000))
        assert trace.final_theta[0] == pytest.approx(np.pi, abs=1e-6)
        assert trace.final_cost <= 1e-10

    def test_stops_at_grad_tol(self):
        prob = make_single_qubit_cosine()
        trace = train(
            prob, np.array([np.pi]), OptimizerConfig(step_size=0.1, grad_tol=1e-9)
        )
        assert trace.iterations_run <= 1
        assert trace.stop_reason == "grad_tol"

    def test_max_iters_stop_reason(self):
        prob = make_single_qubit_cosine()
        trace = train(
            prob, np.array([2.0]), OptimizerConfig(step_size=0.01, max_iters=5, grad_tol=0.0)
        )
        assert trace.iterations_run == 5
        assert trace.stop_reason == "max_iters"

    def test_deterministic(self):
        prob = make_random_vqe(1, 1, seed=32)
        cfg = OptimizerConfig(step_size=0.05, max_iters=50, grad_tol=0.0)
        theta0 = np.array([0.3, -0.4, 0.9])
        a = train(prob, theta0, cfg)
        b = train(prob, theta0, cfg)
        assert np.array_equal(a.thetas, b.thetas)
        assert np.array_equal(a.costs, b.costs)

    def test_costs_recorded_every_iteration(self):
        prob = make_single_qubit_cosine()
        trace = train(prob, np.array([2.0]), OptimizerConfig(step_size=0.1, max_iters=8, grad_tol=0.0))
        assert trace.costs.shape == (9,)
        assert trace.thetas.shape == (9, 1)

    def test_monotone_descent_with_small_step(self):
        prob = make_random_vqe(2, 2, seed=5)
        rng = np.random.default_rng(34)
        theta0 = rng.uniform(-np.pi, np.pi, prob.circuit.total_params)
        trace = train(prob, theta0, OptimizerConfig(step_size=0.01, max_iters=300, grad_tol=0.0))
        diffs = np.diff(trace.costs)
        assert diffs.max() <= 1e-12

    def test_divergence_raises_with_iteration(self):
        prob = make_random_vqe(1, 1, seed=3)
        theta0 = np.array([0.5, 1.0, -0.7])
        with pytest.raises(TrainingDivergedError) as exc:
            train(prob, theta0, OptimizerConfig(step_size=1e308, max_iters=50, grad_tol=0.0))
        assert exc.value.iteration >= 1

    def test_noisy_training_uses_noisy_cost(self):
        prob = make_single_qubit_cosine()
        eta = 0.2
        noisy = VQEProblem(
            prob.observable,
            prob.input_state,
            prob.circuit,
            NoiseModel(control=ControlErrorSpec(np.array([eta]))),
            prob.cost_shift,
        )
        cfg = OptimizerConfig(step_size=0.2, max_iters=3000, grad_tol=1e-13)
        trace = train(noisy, np.array([2.0]), cfg)
        assert trace.final_theta[0] == pytest.approx(np.pi / (1 + eta), abs=1e-6)


class TestSaveTrace:
    def test_writes_header_and_rows(self, tmp_path):
        prob = make_single_qubit_cosine()
        trace = train(prob, np.array([2.0]), OptimizerConfig(step_size=0.1, max_iters=4, grad_tol=0.0))
        out = tmp_path / "trace.txt"
        save_trace(trace, out)
        lines = out.read_text().splitlines()
        assert lines[0].startswith("# iterations=4")
        assert len(lines) == 6  # header + 5 cost rows

    def test_theta_every_includes_parameters(self, tmp_path):
        prob = make_single_qubit_cosine()
        trace = train(prob, np.array([2.0]), OptimizerConfig(step_size=0.1, max_iters=4, grad_tol=0.0))
        out = tmp_path / "trace.txt"
        save_trace(trace, out, theta_every=2)
        rows = [l for l in out.read_text().splitlines() if not l.startswith("#")]
        assert len(rows[0].split()) == 3  # iteration, cost, theta
        assert len(rows[1].split()) == 2
