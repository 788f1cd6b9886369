import numpy as np
import pytest
from numpy.testing import assert_allclose

from vqenoise.ansatz import Circuit, ProductLayer, SUNLayer, apply, unitary
from vqenoise.core import (
    ValidationError,
    basis_state,
    expectation,
    hermitian_exp,
    pauli_string,
    random_hermitian,
)
from vqenoise.noise import (
    CoherentError,
    ControlErrorSpec,
    GeneralKrausChannel,
    KrausChannel,
    NoiseModel,
    amplitude_damping_channel,
    apply_channel,
    bit_flip_channel,
    bit_flip_prob_for_epsilon,
    check_noise_against_circuit,
    control_error_cost_map,
    depolarizing_channel,
    noisy_apply,
    phase_flip_channel,
    splice_coherent_errors,
)

X = pauli_string("X")
Y = pauli_string("Y")
Z = pauli_string("Z")


def random_density(rng, N):
    A = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    rho = A @ A.conj().T
    return rho / np.trace(rho).real


class TestChannelConstruction:
    def test_bit_flip_on_ground_state(self):
        p = 0.3
        out = apply_channel(bit_flip_channel(p), basis_state(1, 0))
        want = (1 - p) * basis_state(1, 0) + p * basis_state(1, 1)
        assert_allclose(out, want, atol=1e-14)

    def test_zero_probability_is_identity(self):
        rng = np.random.default_rng(1)
        rho = random_density(rng, 2)
        assert_allclose(apply_channel(bit_flip_channel(0.0), rho), rho, atol=1e-14)

    def test_depolarizing_closed_form(self):
        rng = np.random.default_rng(2)
        for n in (1, 2):
            N = 2**n
            rho = random_density(rng, N)
            p = 0.35
            out = apply_channel(depolarizing_channel(p, n), rho)
            want = (1 - p) * rho + p * np.trace(rho) * np.eye(N) / N
            assert_allclose(out, want, atol=1e-12)

    def test_phase_flip_kills_coherences(self):
        rho = np.full((2, 2), 0.5, dtype=complex)
        out = apply_channel(phase_flip_channel(0.5), rho)
        assert abs(out[0, 1]) < 1e-14
        assert out[0, 0] == pytest.approx(0.5)

    def test_amplitude_damping_decays_excited_state(self):
        gamma = 0.4
        out = apply_channel(amplitude_damping_channel(gamma), basis_state(1, 1))
        want = gamma * basis_state(1, 0) + (1 - gamma) * basis_state(1, 1)
        assert_allclose(out, want, atol=1e-14)

    def test_amplitude_damping_on_chosen_qubit(self):
        ch = amplitude_damping_channel(0.3, n=2, qubit=1)
        rho = basis_state(2, 0b01)  # qubit 1 excited
        out = apply_channel(ch, rho)
        assert out[0, 0].real == pytest.approx(0.3)
        assert out[1, 1].real == pytest.approx(0.7)


class TestChannelValidation:
    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValidationError, match="weights"):
            KrausChannel(0.2, [0.5, 0.4], [X, Z])

    def test_negative_weight_rejected(self):
        with pytest.raises(ValidationError):
            KrausChannel(0.2, [1.5, -0.5], [X, Z])

    def test_operator_norm_capped(self):
        with pytest.raises(ValidationError, match="norm"):
            KrausChannel(0.2, [1.0], [1.5 * X])

    def test_probability_strictly_below_one(self):
        with pytest.raises(ValidationError):
            KrausChannel(1.0, [1.0], [X])

    def test_negative_probability(self):
        with pytest.raises(ValidationError):
            KrausChannel(-0.1, [1.0], [X])

    def test_trace_preservation_enforced(self):
        # a lone lowering operator does not preserve trace
        lower = np.array([[0, 1], [0, 0]], dtype=complex)
        with pytest.raises(ValidationError, match="trace"):
            KrausChannel(0.3, [1.0], [lower])

    def test_general_channel_accepts_damping_pair(self):
        gamma = 0.25
        K0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]], dtype=complex)
        K1 = np.array([[0, np.sqrt(gamma)], [0, 0]], dtype=complex)
        GeneralKrausChannel([K0, K1])

    def test_general_channel_rejects_incomplete_set(self):
        K0 = np.array([[1, 0], [0, 0.5]], dtype=complex)
        with pytest.raises(ValidationError):
            GeneralKrausChannel([K0])

    def test_dimension_mismatch_between_operators(self):
        with pytest.raises(ValidationError):
            KrausChannel(0.2, [0.5, 0.5], [X, pauli_string("XX")])


class TestChannelStatePreservation:
    def test_trace_hermiticity_positivity(self):
        rng = np.random.default_rng(33)
        channels = [
            bit_flip_channel(0.3),
            phase_flip_channel(0.45),
            depolarizing_channel(0.6, 1),
            amplitude_damping_channel(0.5),
        ]
        for ch in channels:
            for _ in range(10):
                rho = random_density(rng, 2)
                out = apply_channel(ch, rho)
                assert np.trace(out).real == pytest.approx(1.0, abs=1e-10)
                assert_allclose(out, out.conj().T, atol=1e-10)
                assert np.linalg.eigvalsh(out).min() >= -1e-8


class TestCoherentError:
    def test_matrix_is_generator_exponential(self):
        e = CoherentError(1, Y, 0.37)
        assert_allclose(e.matrix, hermitian_exp(Y, 0.37), atol=1e-12)

    def test_rejects_non_hermitian_generator(self):
        with pytest.raises(ValidationError):
            CoherentError(1, np.array([[0, 1], [0, 0]], dtype=complex), 0.1)

    def test_rejects_bad_layer_index(self):
        with pytest.raises(ValidationError):
            CoherentError(0, Y, 0.1)


class TestNoisyApply:
    def setup_method(self):
        rng = np.random.default_rng(40)
        self.circuit = Circuit(
            1, [ProductLayer([random_hermitian(1, seed=41)]), SUNLayer([X, Z])]
        )
        self.theta = rng.uniform(-np.pi, np.pi, self.circuit.total_params)
        self.rho0 = basis_state(1, 0)

    def test_empty_noise_equals_clean(self):
        out = noisy_apply(self.circuit, self.theta, NoiseModel(), self.rho0)
        assert_allclose(out, apply(self.circuit, self.theta, self.rho0), atol=0)

    def test_zero_angle_coherent_error_is_noop(self):
        noise = NoiseModel(coherent=[CoherentError(1, Y, 0.0)])
        out = noisy_apply(self.circuit, self.theta, noise, self.rho0)
        assert_allclose(out, apply(self.circuit, self.theta, self.rho0), atol=1e-14)

    def test_final_bit_flip_scales_z_expectation(self):
        p = 0.2
        noise = NoiseModel(channels={2: bit_flip_channel(p)})
        noisy = noisy_apply(self.circuit, self.theta, noise, self.rho0)
        clean = apply(self.circuit, self.theta, self.rho0)
        assert expectation(Z, noisy) == pytest.approx(
            (1 - 2 * p) * expectation(Z, clean), abs=1e-12
        )

    def test_coherent_errors_match_spliced_circuit(self):
        """Interleaved coherent errors equal the same circuit with the
        error unitaries inserted as fixed extra layers."""
        noise = NoiseModel(
            coherent=[CoherentError(1, Y, 0.3), CoherentError(2, X, -0.2)]
        )
        spliced, th2 = splice_coherent_errors(self.circuit, self.theta, noise)
        a = noisy_apply(self.circuit, self.theta, noise, self.rho0)
        b = apply(spliced, th2, self.rho0)
        assert_allclose(a, b, atol=1e-12)

    def test_error_applied_after_its_layer(self):
        noise = NoiseModel(coherent=[CoherentError(1, Y, 0.8)])
        c = Circuit(1, [ProductLayer([Z])])
        th = np.array([0.6])
        out = noisy_apply(c, th, noise, self.rho0)
        E = hermitian_exp(Y, 0.8)
        U = unitary(c, th)
        want = E @ U @ self.rho0 @ U.conj().T @ E.conj().T
        assert_allclose(out, want, atol=1e-13)


class TestControlErrors:
    def test_zero_eta_identity(self):
        spec = ControlErrorSpec(np.zeros(3))
        th = np.array([0.1, -0.5, 2.0])
        assert_allclose(control_error_cost_map(th, spec), th, atol=0)

    def test_componentwise_scaling(self):
        spec = ControlErrorSpec(np.array([0.1]))
        assert_allclose(
            control_error_cost_map(np.array([np.pi]), spec), [1.1 * np.pi]
        )

    def test_entry_at_minus_one_rejected(self):
        with pytest.raises(ValidationError):
            ControlErrorSpec(np.array([-1.0]))

    def test_length_mismatch(self):
        spec = ControlErrorSpec(np.array([0.1, 0.2]))
        with pytest.raises(ValidationError):
            control_error_cost_map(np.array([1.0]), spec)

    def test_propagation_equals_rescaled_clean(self):
        rng = np.random.default_rng(50)
        c = Circuit(1, [ProductLayer([Y]), SUNLayer([X, Z])])
        th = rng.uniform(-np.pi, np.pi, 3)
        eta = rng.uniform(-0.2, 0.2, 3)
        noise = NoiseModel(control=ControlErrorSpec(eta))
        a = noisy_apply(c, th, noise, basis_state(1, 0))
        b = apply(c, (1 + eta) * th, basis_state(1, 0))
        assert_allclose(a, b, atol=1e-13)


class TestNoiseModel:
    def test_control_exclusive_by_default(self):
        with pytest.raises(ValidationError, match="control"):
            NoiseModel(
                channels={1: bit_flip_channel(0.1)},
                control=ControlErrorSpec(np.array([0.1])),
            )

    def test_allow_mixed_lifts_exclusivity(self):
        NoiseModel(
            channels={1: bit_flip_channel(0.1)},
            control=ControlErrorSpec(np.array([0.1])),
            allow_mixed=True,
        )

    def test_layer_index_beyond_depth(self):
        c = Circuit(1, [ProductLayer([Z])])
        noise = NoiseModel(channels={3: bit_flip_channel(0.1)})
        with pytest.raises(ValidationError, match="depth"):
            check_noise_against_circuit(noise, c)

    def test_coherent_dimension_mismatch(self):
        c = Circuit(2, [ProductLayer([pauli_string("XX")])])
        noise = NoiseModel(coherent=[CoherentError(1, Y, 0.1)])
        with pytest.raises(ValidationError):
            check_noise_against_circuit(noise, c)

    def test_control_param_count_mismatch(self):
        c = Circuit(1, [ProductLayer([Y, Z])])
        noise = NoiseModel(control=ControlErrorSpec(np.array([0.1])))
        with pytest.raises(ValidationError):
            check_noise_against_circuit(noise, c)


class TestBitFlipProbability:
    def test_zero_epsilon(self):
        assert bit_flip_prob_for_epsilon(0.0, 3) == 0.0

    def test_unit_epsilon_single_layer(self):
        assert bit_flip_prob_for_epsilon(1.0, 1) == pytest.approx(0.5)

    def test_two_layer_value(self):
        assert bit_flip_prob_for_epsilon(0.21, 2) == pytest.approx(
            1 - 1 / 1.1, abs=1e-12
        )

    def test_negative_epsilon_rejected(self):
        with pytest.raises(ValidationError):
            bit_flip_prob_for_epsilon(-0.5, 2)

    def test_monotone_in_epsilon(self):
        ps = [bit_flip_prob_for_epsilon(e, 4) for e in np.linspace(0, 5, 30)]
        assert all(b > a for a, b in zip(ps, ps[1:]))
