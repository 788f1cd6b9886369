"""Release-gate checks: every structural identity the package promises.

Each check returns a CheckResult with the measured worst case, and
verify_all() bundles them into a report. The CLI ``verify`` subcommand
prints the report and exits nonzero when anything fails; the acceptance
test suite asserts the same checks at the same tolerances.

All randomness is seeded, so a given build either always passes or
always fails.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ansatz import (
    Circuit,
    ProductLayer,
    SUNLayer,
    apply,
    build_locally_surjective,
    build_z_only,
    local_surjectivity_rank,
    unitary,
)
from .core import (
    ValidationError,
    basis_state,
    expectation,
    hermitian_defect,
    pauli_on,
)
from .engine import (
    OptimizerConfig,
    TrainingDivergedError,
    VQEProblem,
    cost,
    fd_gradient,
    gradient,
    train,
)
from .equivalence import (
    apply_pushed_coherent,
    first_order_cost,
    first_order_observable,
    incoherent_to_observable,
    noise_to_observable_form,
    perturbation_level_for_depth,
    push_channel_to_last,
    push_coherent_to_last,
)
from .experiments import make_random_vqe, make_single_qubit_cosine
from .noise import (
    CoherentError,
    ControlErrorSpec,
    GeneralKrausChannel,
    KrausChannel,
    NoiseModel,
    amplitude_damping_channel,
    apply_channel,
    bit_flip_channel,
    bit_flip_prob_for_epsilon,
    depolarizing_channel,
    noisy_apply,
    splice_coherent_errors,
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class VerifyReport:
    checks: tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def format(self) -> str:
        lines = []
        for c in self.checks:
            mark = "PASS" if c.passed else "FAIL"
            lines.append(f"{mark}  {c.name}: {c.detail}")
        verdict = "all checks passed" if self.passed else "FAILURES PRESENT"
        lines.append(f"---- {verdict} ({sum(c.passed for c in self.checks)}/{len(self.checks)})")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# Seeded instance helpers
# ---------------------------------------------------------------------------


def _rand_hermitian(rng, N: int) -> np.ndarray:
    A = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    return 0.5 * (A + A.conj().T)


def _rand_traceless(rng, N: int) -> np.ndarray:
    H = _rand_hermitian(rng, N)
    return H - (np.trace(H) / N) * np.eye(N)


def _rand_density(rng, N: int) -> np.ndarray:
    A = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    rho = A @ A.conj().T
    return rho / float(np.trace(rho).real)


def random_test_circuit(rng, n: int, L: int) -> Circuit:
    """Random mixed-layer circuit for the seeded instance harness."""
    N = 2**n
    layers = []
    for _ in range(L):
        if rng.random() < 0.5:
            count = int(rng.integers(1, 3))
            layers.append(ProductLayer([_rand_hermitian(rng, N) for _ in range(count)]))
        else:
            count = int(rng.integers(2, 4))
            layers.append(SUNLayer([_rand_traceless(rng, N) for _ in range(count)]))
    return Circuit(n, layers)


def _instance_grid(count: int = 20):
    """(index, n, L, rng) for the standard 20-instance harness."""
    for i in range(count):
        yield i, 1 + (i % 2), 1 + (i % 3), np.random.default_rng(3000 + i)


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------


def check_coherent_push_exactness() -> CheckResult:
    """Interleaved coherent errors equal their pushed-to-last form exactly.

    Also checks that pushing preserves the generator spectrum and that a
    coherent-only noise model equals the error-spliced circuit.
    """
    worst = 0.0
    worst_spec = 0.0
    worst_splice = 0.0
    for i, n, L, rng in _instance_grid():
        N = 2**n
        circuit = random_test_circuit(rng, n, L)
        theta = rng.uniform(-np.pi, np.pi, circuit.total_params)
        rho0 = _rand_density(rng, N)
        errors = [
            CoherentError(j, _rand_hermitian(rng, N), float(rng.uniform(0.05, 0.5)))
            for j in range(1, L + 1)
        ]
        if i % 5 == 0:
            errors.append(CoherentError(1, _rand_hermitian(rng, N), 0.2))
        noise = NoiseModel(coherent=errors)
        interleaved = noisy_apply(circuit, theta, noise, rho0)
        pushed = push_coherent_to_last(circuit, theta, errors)
        via_push = apply_pushed_coherent(circuit, theta, pushed, rho0)
        worst = max(worst, float(np.max(np.abs(interleaved - via_push))))
        for e, pe in zip(sorted(errors, key=lambda x: x.layer_index), pushed):
            ev_a = np.linalg.eigvalsh(e.generator)
            ev_b = np.linalg.eigvalsh(pe.generator)
            worst_spec = max(worst_spec, float(np.max(np.abs(ev_a - ev_b))))
        circuit2, theta2 = splice_coherent_errors(circuit, theta, noise)
        spliced = apply(circuit2, theta2, rho0)
        worst_splice = max(worst_splice, float(np.max(np.abs(interleaved - spliced))))
    passed = worst <= 1e-10 and worst_spec <= 1e-10 and worst_splice <= 1e-12
    return CheckResult(
        "coherent_push_exactness",
        passed,
        f"max state deviation {worst:.3e} (tol 1e-10), spectrum drift {worst_spec:.3e}, "
        f"splice deviation {worst_splice:.3e} over 20 instances",
    )


def check_channel_push_exactness() -> CheckResult:
    """Per-layer mixture channels compose exactly into one pushed channel."""
    worst = 0.0
    worst_prob = 0.0
    for i, n, L, rng in _instance_grid():
        N = 2**n
        circuit = random_test_circuit(rng, n, L)
        theta = rng.uniform(-np.pi, np.pi, circuit.total_params)
        rho0 = _rand_density(rng, N)
        channels = {}
        for j in range(1, L + 1):
            p = float(rng.uniform(0.05, 0.4))
            if i % 2 == 0 and j == 1:
                channels[j] = depolarizing_channel(p, n)
            else:
                channels[j] = bit_flip_channel(p, n, qubit=int(rng.integers(0, n)))
        noise = NoiseModel(channels=channels)
        interleaved = noisy_apply(circuit, theta, noise, rho0)
        pushed = push_channel_to_last(circuit, theta, noise)
        via_push = pushed.apply(apply(circuit, theta, rho0))
        worst = max(worst, float(np.max(np.abs(interleaved - via_push))))
        expected_p = 1.0 - float(np.prod([1.0 - c.error_prob for c in channels.values()]))
        worst_prob = max(worst_prob, abs(pushed.error_prob - expected_p))
    passed = worst <= 1e-10 and worst_prob <= 1e-12
    return CheckResult(
        "channel_push_exactness",
        passed,
        f"max state deviation {worst:.3e} (tol 1e-10), composed-probability drift "
        f"{worst_prob:.3e} over 20 instances",
    )


def check_mixture_rewrite_exactness() -> CheckResult:
    """Tr[O N(rho)] = (1-p)(Tr[O rho] + eps Tr[Otilde rho]) exactly.

    Covers post-circuit channels at p in {0.05, 0.3}, the closed-form
    bit-flip identity (noisy Z-cost = (1-2p) clean), and the combined
    push-then-rewrite path for mid-circuit channels.
    """
    worst = 0.0
    worst_closed = 0.0
    worst_mid = 0.0
    for p in (0.05, 0.3):
        for i in range(6):
            n = 1 + (i % 2)
            N = 2**n
            rng = np.random.default_rng(4200 + i + int(p * 1000))
            circuit = random_test_circuit(rng, n, 2)
            theta = rng.uniform(-np.pi, np.pi, circuit.total_params)
            rho0 = _rand_density(rng, N)
            O = _rand_hermitian(rng, N)
            if i % 3 == 0:
                channel = depolarizing_channel(p, n)
            elif i % 3 == 1:
                channel = bit_flip_channel(p, n, 0)
            else:
                U = np.linalg.qr(rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N)))[0]
                channel = KrausChannel(p, (0.25, 0.75), (U, pauli_on(n, {0: "Z"})))
            rho_out = apply(circuit, theta, rho0)
            direct = expectation(O, np.asarray(apply_channel(channel, rho_out)))
            form = incoherent_to_observable(O, channel)
            rewritten = first_order_cost(form, circuit, theta, rho0)
            worst = max(worst, abs(direct - rewritten))
            # Mid-circuit: same channel after layer 1, rewritten via the push.
            noise = NoiseModel(channels={1: channel})
            mid_direct = expectation(O, noisy_apply(circuit, theta, noise, rho0))
            mid_form = noise_to_observable_form(O, circuit, noise)
            mid_rewritten = first_order_cost(mid_form, circuit, theta, rho0)
            worst_mid = max(worst_mid, abs(mid_direct - mid_rewritten))
    # Closed form: E = X, O = Z on one qubit gives Otilde = -Z.
    rng = np.random.default_rng(77)
    for p in (0.05, 0.3):
        chan = bit_flip_channel(p, 1, 0)
        rho = _rand_density(rng, 2)
        Z = pauli_on(1, {0: "Z"})
        noisy_val = expectation(Z, np.asarray(chan.apply(rho)))
        clean_val = expectation(Z, rho)
        worst_closed = max(worst_closed, abs(noisy_val - (1.0 - 2.0 * p) * clean_val))
    passed = worst <= 1e-10 and worst_closed <= 1e-10 and worst_mid <= 1e-10
    return CheckResult(
        "mixture_rewrite_exactness",
        passed,
        f"post-circuit deviation {worst:.3e}, closed-form deviation {worst_closed:.3e}, "
        f"mid-circuit deviation {worst_mid:.3e} (tol 1e-10)",
    )


def check_first_order_residual() -> CheckResult:
    """The first-order rewriting has a quadratic remainder.

    At error scale 1e-2 the residual against the exact noisy cost must
    shrink by a factor in [3.5, 4.5] when all angles are halved;
    residuals at or below 1e-12 count as degenerate and are reported,
    not failed.
    """
    scale = 1e-2
    ratios = []
    degenerate = 0
    for i, n, L, rng in _instance_grid():
        N = 2**n
        circuit = random_test_circuit(rng, n, L)
        theta = rng.uniform(-np.pi, np.pi, circuit.total_params)
        rho0 = _rand_density(rng, N)
        O = _rand_hermitian(rng, N)
        signs = rng.choice([-1.0, 1.0], size=L)
        mags = rng.uniform(0.5, 1.0, size=L)
        mags[int(rng.integers(0, L))] = 1.0  # pin the max to exactly `scale`
        errors = [
            CoherentError(j, _rand_traceless(rng, N), float(signs[j - 1] * mags[j - 1] * scale))
            for j in range(1, L + 1)
        ]
        halved = [CoherentError(e.layer_index, e.generator, 0.5 * e.angle) for e in errors]

        def residual(errs):
            noise = NoiseModel(coherent=errs)
            exact = expectation(O, noisy_apply(circuit, theta, noise, rho0))
            form = first_order_observable(O, circuit, theta, errs)
            return abs(exact - first_order_cost(form, circuit, theta, rho0))

        r1 = residual(errors)
        if r1 <= 1e-12:
            degenerate += 1
            continue
        ratios.append(r1 / residual(halved))
    in_band = [3.5 <= r <= 4.5 for r in ratios]
    passed = all(in_band) and len(ratios) > 0
    lo = min(ratios) if ratios else float("nan")
    hi = max(ratios) if ratios else float("nan")
    return CheckResult(
        "first_order_residual",
        passed,
        f"halving ratios in [{lo:.3f}, {hi:.3f}] over {len(ratios)} instances "
        f"(band [3.5, 4.5]), {degenerate} degenerate",
    )


def check_observable_boundedness() -> CheckResult:
    """Perturbed observables stay Hermitian and within their norm bounds.

    Coherent: ||Otilde|| <= 2 sum_j ||H_ej|| ||O||; incoherent:
    ||Otilde|| <= ||O||. Checked at 100 random parameter points.
    """
    rng = np.random.default_rng(5150)
    worst_excess = -np.inf
    worst_herm = 0.0
    for n, L in ((1, 2), (2, 3)):
        N = 2**n
        circuit = random_test_circuit(rng, n, L)
        O = _rand_hermitian(rng, N)
        norm_O = float(np.linalg.norm(O, 2))
        errors = [
            CoherentError(j, _rand_hermitian(rng, N), float(rng.uniform(0.01, 0.1)))
            for j in range(1, L + 1)
        ]
        form = first_order_observable(O, circuit, rng.uniform(-np.pi, np.pi, circuit.total_params), errors)
        bound = 2.0 * sum(float(np.linalg.norm(e.generator, 2)) for e in errors) * norm_O
        for _ in range(100):
            t = rng.uniform(-np.pi, np.pi, circuit.total_params)
            Ot = form.perturbation(t)
            worst_herm = max(worst_herm, hermitian_defect(Ot))
            worst_excess = max(worst_excess, float(np.linalg.norm(Ot, 2)) - bound)
        chan = depolarizing_channel(0.3, n)
        inc = incoherent_to_observable(O, chan)
        Ot = inc.perturbation(np.zeros(circuit.total_params))
        worst_herm = max(worst_herm, hermitian_defect(Ot))
        worst_excess = max(worst_excess, float(np.linalg.norm(Ot, 2)) - norm_O)
    passed = worst_excess <= 1e-9 and worst_herm <= 1e-10
    return CheckResult(
        "observable_boundedness",
        passed,
        f"max norm excess over bound {worst_excess:.3e} (tol 1e-9), "
        f"max Hermiticity defect {worst_herm:.3e}",
    )


def _gradient_check_problems():
    """20 seeded problems mixing clean and every noise family."""
    problems = []
    for i in range(20):
        rng = np.random.default_rng(6100 + i)
        n = 1 + (i % 2)
        N = 2**n
        L = 1 + (i % 3)
        flavor = i % 5
        circuit = random_test_circuit(rng, n, L)
        O = _rand_hermitian(rng, N)
        rho0 = _rand_density(rng, N)
        if flavor == 0:
            noise = None
        elif flavor == 1:
            errors = [
                CoherentError(j, _rand_hermitian(rng, N), float(rng.uniform(0.05, 0.3)))
                for j in range(1, L + 1)
            ]
            noise = NoiseModel(coherent=errors)
        elif flavor == 2:
            channels = {j: bit_flip_channel(float(rng.uniform(0.05, 0.3)), n, 0) for j in range(1, L + 1)}
            if L >= 2:
                channels[2] = depolarizing_channel(0.2, n)
            noise = NoiseModel(channels=channels)
        elif flavor == 3:
            eta = rng.uniform(-0.1, 0.2, circuit.total_params)
            noise = NoiseModel(control=ControlErrorSpec(eta))
        else:
            channels = {1: amplitude_damping_channel(float(rng.uniform(0.1, 0.5)), n, 0)}
            errors = [CoherentError(L, _rand_hermitian(rng, N), 0.1)]
            noise = NoiseModel(coherent=errors, channels=channels)
        theta = rng.uniform(-np.pi, np.pi, circuit.total_params)
        problems.append((VQEProblem(O, rho0, circuit, noise), theta))
    return problems


def check_gradient_matches_fd() -> CheckResult:
    """Analytic gradients match central finite differences (step 1e-5).

    Normwise: ||g - fd||_inf <= max(1e-6 ||fd||_inf, 1e-9), over 20
    seeded problems covering clean, coherent, channel, control and
    mixed noise.
    """
    worst_rel = 0.0
    for problem, theta in _gradient_check_problems():
        g = gradient(problem, theta)
        fd = fd_gradient(problem, theta, 1e-5)
        err = float(np.max(np.abs(g - fd)))
        allowed = max(1e-6 * float(np.max(np.abs(fd))), 1e-9)
        worst_rel = max(worst_rel, err / allowed)
    passed = worst_rel <= 1.0
    return CheckResult(
        "gradient_matches_fd",
        passed,
        f"worst error/tolerance ratio {worst_rel:.3f} over 20 problems "
        f"(tolerance max(1e-6 rel, 1e-9 abs))",
    )


def check_depolarization_proportionality() -> CheckResult:
    """Depolarization only rescales the gradient: grad_noisy = (1-p) grad_clean.

    Checked at 50 random points for p in {0.1, 0.3, 0.6} with the
    channel attached mid-circuit, then confirmed on whole training
    runs: step s on the clean problem and s/(1-p) on the noisy one give
    parameter traces identical within 1e-8.
    """
    clean = make_random_vqe(2, 2, seed=5)
    rng = np.random.default_rng(888)
    worst = 0.0
    for p in (0.1, 0.3, 0.6):
        noise = NoiseModel(channels={1: depolarizing_channel(p, 2)})
        noisy = VQEProblem(
            clean.observable, clean.input_state, clean.circuit, noise, clean.cost_shift
        )
        for _ in range(50):
            theta = rng.uniform(-np.pi, np.pi, clean.param_count)
            g_clean = gradient(clean, theta)
            g_noisy = gradient(noisy, theta)
            worst = max(worst, float(np.max(np.abs(g_noisy - (1.0 - p) * g_clean))))
    p = 0.3
    noise = NoiseModel(channels={2: depolarizing_channel(p, 2)})
    noisy = VQEProblem(clean.observable, clean.input_state, clean.circuit, noise, clean.cost_shift)
    theta0 = np.random.default_rng(4242).uniform(-np.pi, np.pi, clean.param_count)
    s = 0.05
    tr_clean = train(clean, theta0, OptimizerConfig(step_size=s, max_iters=200, grad_tol=0.0))
    tr_noisy = train(noisy, theta0, OptimizerConfig(step_size=s / (1.0 - p), max_iters=200, grad_tol=0.0))
    trace_dev = float(np.max(np.abs(tr_clean.thetas - tr_noisy.thetas)))
    passed = worst <= 1e-10 and trace_dev <= 1e-8
    return CheckResult(
        "depolarization_proportionality",
        passed,
        f"max |grad_noisy - (1-p) grad_clean| = {worst:.3e} (tol 1e-10), "
        f"rescaled-step trace deviation {trace_dev:.3e} (tol 1e-8)",
    )


def check_control_error_law() -> CheckResult:
    """Control errors rescale the optimum: theta_opt -> theta_opt / (1 + eta).

    On the closed-form cosine problem the trained noisy optimum must be
    pi/(1+eta) within 1e-6 for eta in {0.05, 0.1, 0.2}, and the
    displacement bound ||theta_noisy - theta_clean|| <=
    ||eta||_inf ||theta_noisy|| holds with equality within 1e-8.
    """
    problem = make_single_qubit_cosine()
    cfg = OptimizerConfig(step_size=0.3, max_iters=2000, grad_tol=1e-14)
    theta0 = np.array([2.5])
    clean = train(problem, theta0, cfg)
    worst_opt = 0.0
    worst_eq = 0.0
    for eta in (0.05, 0.1, 0.2):
        noise = NoiseModel(control=ControlErrorSpec(np.array([eta])))
        noisy_problem = VQEProblem(
            problem.observable, problem.input_state, problem.circuit, noise, problem.cost_shift
        )
        noisy = train(noisy_problem, theta0, cfg)
        target = np.pi / (1.0 + eta)
        worst_opt = max(worst_opt, abs(float(noisy.final_theta[0]) - target))
        lhs = float(np.linalg.norm(noisy.final_theta - clean.final_theta))
        rhs = eta * float(np.linalg.norm(noisy.final_theta))
        worst_eq = max(worst_eq, abs(lhs - rhs))
    passed = worst_opt <= 1e-6 and worst_eq <= 1e-8
    return CheckResult(
        "control_error_law",
        passed,
        f"max |trained - pi/(1+eta)| = {worst_opt:.3e} (tol 1e-6), "
        f"bound equality defect {worst_eq:.3e} (tol 1e-8)",
    )


def check_rank_saturation() -> CheckResult:
    """The locally surjective builder saturates the rank test; a
    Z-rotations-only circuit reports rank 1."""
    ok = True
    details = []
    for n in (1, 2):
        N = 2**n
        for L in (1, 2):
            circuit = build_locally_surjective(n, L)
            rng = np.random.default_rng(9000 + 10 * n + L)
            ranks = {
                local_surjectivity_rank(circuit, rng.uniform(-np.pi, np.pi, circuit.total_params))
                for _ in range(10 if L == 1 else 3)
            }
            ok = ok and ranks == {N * N - 1}
            details.append(f"n={n},L={L}: ranks {sorted(ranks)} (want {N * N - 1})")
    z_only = build_z_only(1, 2)
    rng = np.random.default_rng(123)
    z_ranks = {
        local_surjectivity_rank(z_only, rng.uniform(-np.pi, np.pi, 2)) for _ in range(5)
    }
    ok = ok and z_ranks == {1}
    details.append(f"z_only: ranks {sorted(z_ranks)} (want 1)")
    return CheckResult("rank_saturation", ok, "; ".join(details))


def check_depth_scaling_roundtrip() -> CheckResult:
    """perturbation_level_for_depth and bit_flip_prob_for_epsilon invert
    each other within 1e-12 over p in [0, 0.5], L in [1, 30]."""
    worst_p = 0.0
    worst_e = 0.0
    for L in range(1, 31):
        for p in np.linspace(0.0, 0.5, 26):
            eps = perturbation_level_for_depth(float(p), L)
            back = bit_flip_prob_for_epsilon(eps, L)
            worst_p = max(worst_p, abs(back - float(p)))
        for eps in np.linspace(0.0, 10.0, 21):
            p_of = bit_flip_prob_for_epsilon(float(eps), L)
            back_eps = perturbation_level_for_depth(p_of, L)
            worst_e = max(worst_e, abs(back_eps - float(eps)))
    passed = worst_p <= 1e-12 and worst_e <= 1e-12
    return CheckResult(
        "depth_scaling_roundtrip",
        passed,
        f"max p-roundtrip error {worst_p:.3e}, max epsilon-roundtrip error {worst_e:.3e} "
        f"(tol 1e-12)",
    )


def check_channel_state_preservation() -> CheckResult:
    """Channels keep states physical: unit trace, Hermitian, PSD."""
    rng = np.random.default_rng(31415)
    worst_trace = 0.0
    worst_herm = 0.0
    worst_eig = 0.0
    for i in range(50):
        n = 1 + (i % 2)
        N = 2**n
        rho = _rand_density(rng, N)
        for chan in (
            bit_flip_channel(0.3, n, 0),
            depolarizing_channel(0.25, n),
            amplitude_damping_channel(0.4, n, 0),
        ):
            out = np.asarray(apply_channel(chan, rho))
            worst_trace = max(worst_trace, abs(float(np.trace(out).real) - 1.0))
            worst_herm = max(worst_herm, hermitian_defect(out))
            worst_eig = max(
                worst_eig, max(0.0, -float(np.linalg.eigvalsh(0.5 * (out + out.conj().T))[0]))
            )
    passed = worst_trace <= 1e-10 and worst_herm <= 1e-10 and worst_eig <= 1e-8
    return CheckResult(
        "channel_state_preservation",
        passed,
        f"trace drift {worst_trace:.3e}, Hermiticity defect {worst_herm:.3e}, "
        f"negativity {worst_eig:.3e} over 50 states",
    )


def check_channel_validation() -> CheckResult:
    """Invalid channels are rejected at construction."""
    X = pauli_on(1, {0: "X"})
    cases = []

    def expect_raises(label, fn):
        try:
            fn()
        except ValidationError:
            cases.append((label, True))
        else:
            cases.append((label, False))

    expect_raises("weights sum 0.9", lambda: KrausChannel(0.2, (0.4, 0.5), (X, X)))
    expect_raises("negative weight", lambda: KrausChannel(0.2, (-0.1, 1.1), (X, X)))
    expect_raises("operator norm 1.5", lambda: KrausChannel(0.2, (1.0,), (1.5 * X,)))
    expect_raises("p out of range", lambda: KrausChannel(1.0, (1.0,), (X,)))
    expect_raises(
        "not trace preserving",
        lambda: KrausChannel(0.5, (1.0,), (np.diag([1.0, 0.0]).astype(complex),)),
    )
    expect_raises(
        "damping pair in mixture form",
        lambda: KrausChannel(
            0.5,
            (0.5, 0.5),
            (
                np.array([[1, 0], [0, np.sqrt(0.4)]], dtype=complex),
                np.array([[0, np.sqrt(0.6)], [0, 0]], dtype=complex),
            ),
        ),
    )
    expect_raises(
        "incomplete general Kraus",
        lambda: GeneralKrausChannel((np.array([[1, 0], [0, 0.5]], dtype=complex),)),
    )
    ok = all(flag for _, flag in cases)
    bad = [label for label, flag in cases if not flag]
    detail = "all invalid constructions rejected" if ok else f"accepted invalid: {bad}"
    return CheckResult("channel_validation", ok, detail)


def check_training_behaviour() -> CheckResult:
    """Closed-form convergence, bitwise determinism, divergence reporting."""
    problem = make_single_qubit_cosine()
    cfg = OptimizerConfig(step_size=0.1, max_iters=1000, grad_tol=1e-12)
    theta0 = np.array([3.0])
    t1 = train(problem, theta0, cfg)
    t2 = train(problem, theta0, cfg)
    converged = abs(float(t1.final_theta[0]) - np.pi) <= 1e-6 and t1.final_cost <= 1e-10
    identical = np.array_equal(t1.thetas, t2.thetas) and np.array_equal(t1.costs, t2.costs)
    diverged_ok = _divergence_raises()
    passed = converged and identical and diverged_ok
    return CheckResult(
        "training_behaviour",
        passed,
        f"final theta {float(t1.final_theta[0]):.9f} (want pi within 1e-6), "
        f"final cost {t1.final_cost:.3e}, bitwise deterministic: {identical}, "
        f"divergence raises with iteration index: {diverged_ok}",
    )


def _divergence_raises() -> bool:
    """An observable near the float ceiling overflows theta in one step."""
    big = np.diag([1.7e308, -1.7e308]).astype(np.complex128)
    circuit = Circuit(1, [ProductLayer([pauli_on(1, {0: "Y"}, 0.5)])])
    problem = VQEProblem(big, basis_state(1, 0), circuit, cost_shift=0.0)
    try:
        train(problem, np.array([1.0]), OptimizerConfig(step_size=10.0, max_iters=5))
    except TrainingDivergedError as err:
        return err.iteration >= 1
    except ValidationError:
        return False
    return False


def check_optimizer_distance_floor() -> CheckResult:
    """Tiny perturbations are not swamped by optimizer residue.

    A coherent Y/2 error of angle eps displaces the cosine problem's
    optimum by about eps; the measured trained distance must stay below
    10 eps even at eps = 1e-7.
    """
    problem = make_single_qubit_cosine()
    cfg = OptimizerConfig(step_size=0.3, max_iters=4000, grad_tol=1e-13)
    theta0 = np.array([2.5])
    clean = train(problem, theta0, cfg)
    worst_ratio = 0.0
    for eps in (1e-7, 3e-7, 1e-6):
        noise = NoiseModel(
            coherent=[CoherentError(1, pauli_on(1, {0: "Y"}, 0.5), eps)]
        )
        noisy_problem = VQEProblem(
            problem.observable, problem.input_state, problem.circuit, noise, problem.cost_shift
        )
        noisy = train(noisy_problem, theta0, cfg)
        dist = abs(float(noisy.final_theta[0] - clean.final_theta[0]))
        worst_ratio = max(worst_ratio, dist / eps)
    passed = worst_ratio <= 10.0
    return CheckResult(
        "optimizer_distance_floor",
        passed,
        f"max distance/eps ratio {worst_ratio:.3f} (tol 10) down to eps=1e-7",
    )


def check_control_consistency() -> CheckResult:
    """noisy_apply with a control error equals clean propagation at the
    rescaled parameters, and training from theta0/(1+eta) matches the
    nominal optimum rescaled."""
    rng = np.random.default_rng(2718)
    circuit = random_test_circuit(rng, 2, 2)
    theta = rng.uniform(-np.pi, np.pi, circuit.total_params)
    eta = rng.uniform(-0.1, 0.2, circuit.total_params)
    rho0 = _rand_density(rng, 4)
    noise = NoiseModel(control=ControlErrorSpec(eta))
    a = noisy_apply(circuit, theta, noise, rho0)
    b = unitary(circuit, (1.0 + eta) * theta) @ rho0 @ unitary(circuit, (1.0 + eta) * theta).conj().T
    dev = float(np.max(np.abs(a - b)))

    problem = make_single_qubit_cosine()
    cfg = OptimizerConfig(step_size=0.3, max_iters=3000, grad_tol=1e-14)
    eta1 = 0.1
    noisy_problem = VQEProblem(
        problem.observable,
        problem.input_state,
        problem.circuit,
        NoiseModel(control=ControlErrorSpec(np.array([eta1]))),
        problem.cost_shift,
    )
    clean = train(problem, np.array([2.5]), cfg)
    noisy = train(noisy_problem, np.array([2.5]) / (1.0 + eta1), cfg)
    rescale_dev = float(
        np.max(np.abs(noisy.final_theta - clean.final_theta / (1.0 + eta1)))
    )
    passed = dev <= 1e-12 and rescale_dev <= 1e-6
    return CheckResult(
        "control_consistency",
        passed,
        f"propagation deviation {dev:.3e} (tol 1e-12), rescaled-training deviation "
        f"{rescale_dev:.3e} (tol 1e-6)",
    )


def verify_all() -> VerifyReport:
    """Run every release-gate check; seeded and deterministic."""
    checks = (
        check_channel_validation(),
        check_coherent_push_exactness(),
        check_channel_push_exactness(),
        check_mixture_rewrite_exactness(),
        check_first_order_residual(),
        check_observable_boundedness(),
        check_gradient_matches_fd(),
        check_depolarization_proportionality(),
        check_control_error_law(),
        check_control_consistency(),
        check_rank_saturation(),
        check_depth_scaling_roundtrip(),
        check_channel_state_preservation(),
        check_training_behaviour(),
        check_optimizer_distance_floor(),
    )
    return VerifyReport(checks=checks)
