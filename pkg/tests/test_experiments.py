import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from vqenoise.ansatz import local_surjectivity_rank
from vqenoise.core import ValidationError, ground_energy, pauli_string
from vqenoise.engine import OptimizerConfig, VQEProblem, cost, gradient, train
from vqenoise.experiments import (
    CSV_HEADER,
    SlopeFit,
    SweepConfig,
    SweepRecord,
    acceptance_sweep_config,
    build_sweep_problem,
    epsilons_from_config,
    fit_loglog_slope,
    initial_theta,
    load_json_config,
    log_spaced_epsilons,
    make_qaoa_maxcut,
    make_random_vqe,
    make_single_qubit_cosine,
    optimizer_from_config,
    full_scale_sweep_config,
    problem_from_config,
    problem_id_for,
    run_sweep,
    sweep_config_from_dict,
    sweep_noise_model,
    write_sweep_csv,
)
from vqenoise.noise import NoiseModel, bit_flip_channel, bit_flip_prob_for_epsilon


def tiny_sweep_config(noise_kind="coherent_z", **overrides):
    """A sweep small enough for unit tests: 1 qubit, 3 epsilons, 60 iterations."""
    base = dict(
        problem_kind="random_vqe",
        problem_params={"n": 1, "L": 1, "seed": 3},
        noise_kind=noise_kind,
        epsilons=(1e-3, 1e-2, 1e-1),
        optimizer=OptimizerConfig(step_size=0.1, max_iters=60, grad_tol=0.0),
        shared_init_seed=2,
    )
    base.update(overrides)
    return SweepConfig(**base)


class TestProblemFactories:
    def test_random_vqe_small_instance(self):
        prob = make_random_vqe(1, 1, seed=3)
        assert prob.circuit.total_params == 3
        rng = np.random.default_rng(0)
        th = rng.uniform(-np.pi, np.pi, 3)
        assert local_surjectivity_rank(prob.circuit, th) == 3

    def test_random_vqe_deterministic(self):
        a = make_random_vqe(2, 2, seed=9)
        b = make_random_vqe(2, 2, seed=9)
        assert np.array_equal(a.observable, b.observable)
        assert a.cost_shift == b.cost_shift

    def test_random_vqe_cost_nonnegative_after_shift(self):
        prob = make_random_vqe(1, 1, seed=3)
        rng = np.random.default_rng(13)
        for _ in range(200):
            th = rng.uniform(-np.pi, np.pi, prob.circuit.total_params)
            assert cost(prob, th) >= -1e-10

    def test_random_vqe_size_cap(self):
        with pytest.raises(ValidationError):
            make_random_vqe(6, 1, seed=0)

    def test_qaoa_triangle_parameter_count(self):
        prob = make_qaoa_maxcut([(0, 1), (1, 2), (2, 0)], L=1)
        assert prob.circuit.total_params == 2

    def test_qaoa_single_edge_ground_energy(self):
        prob = make_qaoa_maxcut([(0, 1)], L=1)
        assert ground_energy(prob.observable) == pytest.approx(-1.0)

    def test_qaoa_empty_graph_flat_cost(self):
        prob = make_qaoa_maxcut([], L=1, n=2)
        rng = np.random.default_rng(14)
        for _ in range(5):
            th = rng.uniform(-np.pi, np.pi, 2)
            assert gradient(prob, th) == pytest.approx([0.0, 0.0], abs=1e-12)

    def test_cosine_problem_closed_form(self):
        prob = make_single_qubit_cosine()
        for t in (0.0, 1.0, np.pi):
            assert cost(prob, [t]) == pytest.approx(np.cos(t) + 1, abs=1e-12)


class TestEpsilonGrids:
    def test_log_spacing_endpoints(self):
        eps = log_spaced_epsilons(1e-4, 10**-0.5, 8)
        assert len(eps) == 8
        assert eps[0] == pytest.approx(1e-4)
        assert eps[-1] == pytest.approx(10**-0.5)
        assert all(b > a for a, b in zip(eps, eps[1:]))

    def test_ratio_constant(self):
        eps = log_spaced_epsilons(1e-3, 1e-1, 5)
        ratios = [b / a for a, b in zip(eps, eps[1:])]
        assert_allclose(ratios, ratios[0], rtol=1e-12)


class TestSweepConfig:
    def test_zero_epsilon_rejected(self):
        with pytest.raises(ValidationError):
            tiny_sweep_config(epsilons=(0.0, 0.1))

    def test_descending_epsilons_rejected(self):
        with pytest.raises(ValidationError):
            tiny_sweep_config(epsilons=(0.1, 0.01))

    def test_unknown_noise_kind_rejected(self):
        with pytest.raises(ValidationError):
            tiny_sweep_config(noise_kind="thermal")

    def test_unknown_problem_kind_rejected(self):
        with pytest.raises(ValidationError):
            tiny_sweep_config(problem_kind="ising_chain")


class TestSweepNoiseModels:
    def test_coherent_z_attaches_rotation_per_layer(self):
        cfg = tiny_sweep_config()
        prob = build_sweep_problem(cfg)
        noise = sweep_noise_model("coherent_z", 0.05, prob.circuit)
        assert len(noise.coherent) == prob.circuit.depth
        for e in noise.coherent:
            assert e.angle == pytest.approx(0.05)

    def test_bit_flip_uses_depth_scaled_probability(self):
        cfg = tiny_sweep_config(noise_kind="bit_flip")
        prob = build_sweep_problem(cfg)
        noise = sweep_noise_model("bit_flip", 0.3, prob.circuit)
        want = bit_flip_prob_for_epsilon(0.3, prob.circuit.depth)
        for ch in noise.channels.values():
            assert ch.error_prob == pytest.approx(want, abs=1e-14)

    def test_control_scales_every_parameter(self):
        cfg = tiny_sweep_config(noise_kind="control")
        prob = build_sweep_problem(cfg)
        noise = sweep_noise_model("control", 0.07, prob.circuit)
        assert_allclose(
            noise.control.relative_errors, np.full(prob.circuit.total_params, 0.07)
        )


class TestRunSweep:
    def test_records_one_row_per_epsilon(self):
        cfg = tiny_sweep_config()
        records = run_sweep(cfg)
        assert [r.epsilon for r in records] == list(cfg.epsilons)
        assert all(r.flag == "ok" for r in records)
        assert all(r.distance_l2 >= 0 for r in records)
        pid = problem_id_for(cfg)
        assert all(r.problem_id == pid for r in records)

    def test_distances_grow_with_epsilon(self):
        records = run_sweep(tiny_sweep_config())
        d = [r.distance_l2 for r in records]
        assert d[0] < d[-1]

    def test_deterministic(self):
        a = run_sweep(tiny_sweep_config())
        b = run_sweep(tiny_sweep_config())
        assert all(
            x.distance_l2 == y.distance_l2 and x.final_cost_noisy == y.final_cost_noisy
            for x, y in zip(a, b)
        )

    def test_bit_flip_commuting_case_keeps_argmin(self):
        """Bit flip conjugates the measured operator to its negative here,
        so the noisy landscape is a positive rescaling of the clean one and
        training lands on the same optimum."""
        prob = make_single_qubit_cosine()
        cfg = OptimizerConfig(step_size=0.2, max_iters=4000, grad_tol=1e-13)
        theta0 = np.array([2.0])
        clean = train(prob, theta0, cfg)
        for eps in (1e-3, 1e-1, 0.5):
            p = bit_flip_prob_for_epsilon(eps, 1)
            noisy_prob = VQEProblem(
                prob.observable,
                prob.input_state,
                prob.circuit,
                NoiseModel(channels={1: bit_flip_channel(p)}),
                prob.cost_shift,
            )
            noisy = train(noisy_prob, theta0, cfg)
            assert abs(noisy.final_theta[0] - clean.final_theta[0]) <= 1e-6


class TestSlopeFit:
    def synthetic(self, exponent, coeff=2.0):
        eps = log_spaced_epsilons(1e-4, 1e-1, 6)
        return [
            SweepRecord(
                problem_id="synthetic",
                noise_kind="coherent_z",
                epsilon=e,
                distance_l2=coeff * e**exponent,
                distance_linf=coeff * e**exponent,
                final_cost_noisy=0.0,
                final_cost_clean=0.0,
                iterations=1,
                flag="ok",
            )
            for e in eps
        ]

    def test_linear_data(self):
        fit = fit_loglog_slope(self.synthetic(1.0))
        assert fit.slope == pytest.approx(1.0, abs=1e-9)
        assert fit.r_squared == pytest.approx(1.0, abs=1e-9)
        assert fit.intercept == pytest.approx(np.log(2.0), abs=1e-9)

    def test_quadratic_data(self):
        fit = fit_loglog_slope(self.synthetic(2.0))
        assert fit.slope == pytest.approx(2.0, abs=1e-9)

    def test_degenerate_rows_excluded(self):
        records = self.synthetic(1.0)
        records.append(
            SweepRecord(
                problem_id="synthetic",
                noise_kind="coherent_z",
                epsilon=0.5,
                distance_l2=0.0,
                distance_linf=0.0,
                final_cost_noisy=0.0,
                final_cost_clean=0.0,
                iterations=1,
                flag="ok",
            )
        )
        fit = fit_loglog_slope(records)
        assert fit.n_points == 6
        assert fit.slope == pytest.approx(1.0, abs=1e-9)

    def test_flagged_rows_excluded(self):
        records = self.synthetic(1.0)
        bad = records[2]
        records[2] = SweepRecord(
            problem_id=bad.problem_id,
            noise_kind=bad.noise_kind,
            epsilon=bad.epsilon,
            distance_l2=float("nan"),
            distance_linf=float("nan"),
            final_cost_noisy=float("nan"),
            final_cost_clean=0.0,
            iterations=3,
            flag="diverged",
        )
        fit = fit_loglog_slope(records)
        assert fit.n_points == 5

    def test_too_few_points_rejected(self):
        with pytest.raises(ValidationError):
            fit_loglog_slope(self.synthetic(1.0)[:2])


class TestCSV:
    def test_header_exact(self):
        assert CSV_HEADER == (
            "problem_id,noise_kind,epsilon,distance_l2,distance_linf,"
            "final_cost_noisy,final_cost_clean,iterations,flag"
        )

    def test_roundtrip_values(self, tmp_path):
        records = run_sweep(tiny_sweep_config())
        path = tmp_path / "sweep.csv"
        write_sweep_csv(records, path)
        lines = path.read_text().splitlines()
        assert lines[0] == CSV_HEADER
        assert len(lines) == 1 + len(records)
        first = lines[1].split(",")
        assert float(first[2]) == records[0].epsilon
        assert float(first[3]) == records[0].distance_l2

    def test_byte_identical_for_same_config(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_sweep_csv(run_sweep(tiny_sweep_config()), a)
        write_sweep_csv(run_sweep(tiny_sweep_config()), b)
        assert a.read_bytes() == b.read_bytes()


class TestPresets:
    def test_acceptance_preset_shape(self):
        cfg = acceptance_sweep_config("coherent_z")
        assert cfg.problem_params["n"] == 2
        assert cfg.problem_params["L"] == 2
        assert len(cfg.epsilons) == 8
        assert cfg.epsilons[0] == pytest.approx(1e-4)
        assert cfg.epsilons[-1] == pytest.approx(10**-0.5)
        assert cfg.optimizer.max_iters == 1000

    def test_full_scale_preset_shape(self):
        cfg = full_scale_sweep_config("bit_flip")
        assert cfg.problem_kind == "qaoa_maxcut"
        assert cfg.problem_params["L"] == 30
        prob = build_sweep_problem(cfg)
        assert prob.circuit.dim == 32


class TestConfigParsing:
    def test_problem_roundtrip(self):
        prob, pid = problem_from_config(
            {"kind": "random_vqe", "n": 1, "L": 2, "seed": 4}
        )
        assert prob.circuit.total_params == 6
        assert "random_vqe" in pid

    def test_qaoa_config(self):
        prob, _ = problem_from_config(
            {"kind": "qaoa_maxcut", "edges": [[0, 1], [1, 2]], "L": 2}
        )
        assert prob.circuit.total_params == 4

    def test_unknown_kind(self):
        with pytest.raises(ValidationError):
            problem_from_config({"kind": "heisenberg"})

    def test_optimizer_defaults(self):
        cfg = optimizer_from_config({"step_size": 0.05})
        assert cfg.max_iters == 1000

    def test_epsilons_list_form(self):
        assert epsilons_from_config([0.001, 0.01]) == (0.001, 0.01)

    def test_epsilons_range_form(self):
        eps = epsilons_from_config({"min": 1e-4, "max": 1e-1, "count": 4})
        assert len(eps) == 4
        assert eps[0] == pytest.approx(1e-4)

    def test_sweep_config_from_dict(self):
        cfg = sweep_config_from_dict(
            {
                "problem": {"kind": "random_vqe", "n": 1, "L": 1, "seed": 3},
                "noise_kind": "bit_flip",
                "epsilons": [1e-3, 1e-2],
                "optimizer": {"step_size": 0.1, "max_iters": 40},
                "shared_init_seed": 5,
            }
        )
        assert cfg.noise_kind == "bit_flip"
        assert cfg.shared_init_seed == 5

    def test_load_json_config(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"problem": {"kind": "random_vqe", "n": 1, "L": 1}}))
        assert load_json_config(path)["problem"]["n"] == 1


class TestInitialTheta:
    def test_deterministic_and_bounded(self):
        prob = make_random_vqe(1, 1, seed=3)
        a = initial_theta(prob.circuit, 11)
        b = initial_theta(prob.circuit, 11)
        assert np.array_equal(a, b)
        assert np.all(np.abs(a) <= np.pi)

    def test_seed_changes_draw(self):
        prob = make_random_vqe(1, 1, seed=3)
        assert not np.array_equal(
            initial_theta(prob.circuit, 1), initial_theta(prob.circuit, 2)
        )
