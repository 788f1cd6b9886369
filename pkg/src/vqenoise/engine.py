"""Cost, gradient and plain gradient-descent training for VQE problems.

The cost is the shifted expectation
l(theta) = Tr[O rho(theta)] - cost_shift,
where rho(theta) is the (possibly noisy) propagated state and the
default shift is the ground energy of O, making the clean optimum 0.

Gradients are exact, not sampled. Propagation is layered, so the
gradient is assembled by one forward pass (states entering each layer)
and one backward pass (the observable pulled back through layer
adjoints). Channels enter the backward pass through their Heisenberg
adjoint A -> (1-p) A + p sum_k w_k E_k^dag A E_k, i.e. exactly the
perturbed-observable rewriting of the channel; coherent errors enter as
fixed conjugations; control errors contribute the chain-rule factor
(1 + eta) after evaluating at the rescaled parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ansatz import (
    Circuit,
    check_theta,
    layer_unitary,
    layer_unitary_and_derivs,
    split_params,
)
from .core import (
    ValidationError,
    expectation,
    ground_energy,
    require_density_matrix,
    require_hermitian,
)
from .noise import (
    NoiseModel,
    check_noise_against_circuit,
    coherent_errors_by_layer,
    control_error_cost_map,
)


class TrainingDivergedError(RuntimeError):
    """Raised when a cost or gradient stops being finite during training."""

    def __init__(self, iteration: int, detail: str):
        super().__init__(f"training diverged at iteration {iteration}: {detail}")
        self.iteration = iteration


@dataclass(frozen=True, eq=False, repr=False)
class VQEProblem:
    """Observable, input state, ansatz and optional noise model.

    ``cost_shift`` defaults to the ground energy of the observable, so
    the clean cost is nonnegative with optimum 0. The shift is a fixed
    constant of the problem; noisy costs keep the clean shift (their
    floor is generally above 0).
    """

    observable: np.ndarray
    input_state: np.ndarray
    circuit: Circuit
    noise: NoiseModel | None
    cost_shift: float

    def __init__(self, observable, input_state, circuit, noise=None, cost_shift=None):
        O = require_hermitian(observable, "observable")
        rho0 = require_density_matrix(input_state, "input state")
        if not isinstance(circuit, Circuit):
            raise ValidationError(f"not a Circuit: {circuit!r}")
        if O.shape[0] != circuit.dim or rho0.shape[0] != circuit.dim:
            raise ValidationError(
                f"dimension mismatch: observable {O.shape[0]}, state {rho0.shape[0]}, "
                f"circuit {circuit.dim}"
            )
        if noise is not None:
            if not isinstance(noise, NoiseModel):
                raise ValidationError(f"not a NoiseModel: {noise!r}")
            check_noise_against_circuit(noise, circuit)
        shift = ground_energy(O) if cost_shift is None else float(cost_shift)
        if not np.isfinite(shift):
            raise ValidationError(f"cost shift must be finite, got {cost_shift!r}")
        object.__setattr__(self, "observable", O)
        object.__setattr__(self, "input_state", rho0)
        object.__setattr__(self, "circuit", circuit)
        object.__setattr__(self, "noise", noise)
        object.__setattr__(self, "cost_shift", shift)

    @property
    def param_count(self) -> int:
        return self.circuit.total_params

    def __repr__(self) -> str:
        return (
            f"VQEProblem(n={self.circuit.n}, depth={self.circuit.depth}, "
            f"params={self.param_count}, noisy={self.noise is not None})"
        )


@dataclass(frozen=True)
class OptimizerConfig:
    """Plain fixed-step gradient descent settings."""

    step_size: float
    max_iters: int = 1000
    grad_tol: float = 1e-9
    seed: int = 0

    def __post_init__(self):
        if not np.isfinite(self.step_size) or self.step_size <= 0.0:
            raise ValidationError(f"step size must be positive, got {self.step_size!r}")
        if self.max_iters < 0:
            raise ValidationError(f"max_iters must be >= 0, got {self.max_iters!r}")
        if self.grad_tol < 0.0:
            raise ValidationError(f"grad_tol must be >= 0, got {self.grad_tol!r}")


@dataclass(frozen=True, eq=False, repr=False)
class TrainingTrace:
    """Iterates and costs of one training run.

    ``thetas`` has shape (iterations_run + 1, p) including the initial
    point; ``costs`` matches it entry for entry. ``final_theta`` and
    ``final_cost`` duplicate the last entries for convenience.
    """

    thetas: np.ndarray
    costs: np.ndarray
    final_theta: np.ndarray = field(init=False)
    final_cost: float = field(init=False)
    iterations_run: int = field(init=False)
    stop_reason: str = "max_iters"

    def __init__(self, thetas, costs, stop_reason):
        th = np.asarray(thetas, dtype=np.float64)
        cs = np.asarray(costs, dtype=np.float64)
        if th.ndim != 2 or cs.ndim != 1 or th.shape[0] != cs.shape[0] or th.shape[0] < 1:
            raise ValidationError(
                f"trace needs matching nonempty sequences, got {th.shape} and {cs.shape}"
            )
        if stop_reason not in ("max_iters", "grad_tol"):
            raise ValidationError(f"unknown stop reason {stop_reason!r}")
        th = th.copy()
        cs = cs.copy()
        th.flags.writeable = False
        cs.flags.writeable = False
        object.__setattr__(self, "thetas", th)
        object.__setattr__(self, "costs", cs)
        object.__setattr__(self, "final_theta", th[-1])
        object.__setattr__(self, "final_cost", float(cs[-1]))
        object.__setattr__(self, "iterations_run", th.shape[0] - 1)
        object.__setattr__(self, "stop_reason", str(stop_reason))

    def __repr__(self) -> str:
        return (
            f"TrainingTrace(iterations={self.iterations_run}, final_cost={self.final_cost:.6g}, "
            f"stop={self.stop_reason})"
        )


# ---------------------------------------------------------------------------
# Cost and gradient
# ---------------------------------------------------------------------------


def _layer_noise_tables(problem: VQEProblem):
    """Per-layer coherent error unitaries and channels (1-based index)."""
    W: dict[int, np.ndarray] = {}
    channels = {}
    if problem.noise is not None:
        for j, errs in coherent_errors_by_layer(problem.noise).items():
            M = np.eye(problem.circuit.dim, dtype=np.complex128)
            for e in errs:
                M = e.matrix @ M
            W[j] = M
        channels = dict(problem.noise.channels)
    return W, channels


def _effective_theta(problem: VQEProblem, theta: np.ndarray):
    """Apply the control-error map; return (theta_eff, chain_factor)."""
    if problem.noise is not None and problem.noise.control is not None:
        factor = 1.0 + problem.noise.control.relative_errors
        return control_error_cost_map(theta, problem.noise.control), factor
    return theta, None


def cost(problem: VQEProblem, theta) -> float:
    """Shifted expectation Tr[O rho(theta)] - cost_shift."""
    t = check_theta(problem.circuit, theta)
    t_eff, _ = _effective_theta(problem, t)
    W, channels = _layer_noise_tables(problem)
    rho = np.array(problem.input_state)
    slices = split_params(problem.circuit, t_eff)
    for j, (layer, s) in enumerate(zip(problem.circuit.layers, slices), start=1):
        U = layer_unitary(layer, s)
        rho = U @ rho @ U.conj().T
        if j in W:
            rho = W[j] @ rho @ W[j].conj().T
        if j in channels:
            rho = channels[j].apply(rho)
    val = complex(np.trace(problem.observable @ rho))
    return float(val.real) - problem.cost_shift


def gradient(problem: VQEProblem, theta) -> np.ndarray:
    """Exact gradient of cost() by one forward and one backward pass.

    Forward: sigma_{j-1} is the state entering layer j (noise of the
    earlier layers applied). Backward: A_j is the observable pulled back
    through the adjoints of everything after layer j's unitary. Then
    d cost / d theta_{j,k} = 2 Re Tr[A_j (dU_j/dtheta_k) sigma_{j-1} U_j^dag].
    """
    t = check_theta(problem.circuit, theta)
    t_eff, chain = _effective_theta(problem, t)
    W, channels = _layer_noise_tables(problem)
    circuit = problem.circuit
    slices = split_params(circuit, t_eff)

    units = []
    derivs = []
    sigmas = [np.array(problem.input_state)]
    for j, (layer, s) in enumerate(zip(circuit.layers, slices), start=1):
        U, dUs = layer_unitary_and_derivs(layer, s)
        units.append(U)
        derivs.append(dUs)
        rho = U @ sigmas[-1] @ U.conj().T
        if j in W:
            rho = W[j] @ rho @ W[j].conj().T
        if j in channels:
            rho = channels[j].apply(rho)
        sigmas.append(rho)

    grad = np.zeros(circuit.total_params, dtype=np.float64)
    pos = circuit.total_params
    B = np.array(problem.observable)
    for j in range(circuit.depth, 0, -1):
        A = channels[j].adjoint(B) if j in channels else B
        if j in W:
            A = W[j].conj().T @ A @ W[j]
        U = units[j - 1]
        sigma_in = sigmas[j - 1]
        Uh = U.conj().T
        right = sigma_in @ Uh
        layer_grads = [
            2.0 * float(np.trace(A @ dU @ right).real) for dU in derivs[j - 1]
        ]
        pos -= len(layer_grads)
        grad[pos : pos + len(layer_grads)] = layer_grads
        B = Uh @ A @ U
    if chain is not None:
        grad = chain * grad
    return grad


def fd_gradient(problem: VQEProblem, theta, step: float = 1e-5) -> np.ndarray:
    """Central finite differences of cost(); the oracle gradient() is checked against."""
    t = check_theta(problem.circuit, theta)
    if step <= 0.0:
        raise ValidationError(f"finite-difference step must be positive, got {step!r}")
    g = np.zeros_like(t)
    for i in range(t.size):
        hi = t.copy()
        lo = t.copy()
        hi[i] += step
        lo[i] -= step
        g[i] = (cost(problem, hi) - cost(problem, lo)) / (2.0 * step)
    return g


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


def train(problem: VQEProblem, theta0, config: OptimizerConfig) -> TrainingTrace:
    """Plain gradient descent theta <- theta - step * grad.

    Deterministic: no randomness is consumed. Stops after max_iters
    steps, or earlier once the gradient infinity norm drops below
    grad_tol. Non-finite costs or gradients raise TrainingDivergedError
    with the iteration index.
    """
    t = check_theta(problem.circuit, theta0).copy()
    thetas = [t.copy()]
    c = cost(problem, t)
    if not np.isfinite(c):
        raise TrainingDivergedError(0, f"initial cost is {c!r}")
    costs = [c]
    stop_reason = "max_iters"
    for it in range(config.max_iters):
        g = gradient(problem, t)
        if not np.all(np.isfinite(g)):
            raise TrainingDivergedError(it, "gradient has non-finite entries")
        if float(np.max(np.abs(g), initial=0.0)) < config.grad_tol:
            stop_reason = "grad_tol"
            break
        with np.errstate(over="ignore", invalid="ignore"):
            t = t - config.step_size * g
        if not np.all(np.isfinite(t)):
            raise TrainingDivergedError(it + 1, "parameters became non-finite")
        c = cost(problem, t)
        if not np.isfinite(c):
            raise TrainingDivergedError(it + 1, f"cost is {c!r}")
        thetas.append(t.copy())
        costs.append(c)
    return TrainingTrace(np.array(thetas), np.array(costs), stop_reason)


def save_trace(trace: TrainingTrace, path, theta_every: int = 0) -> None:
    """Write a trace as text: one line per iteration, ``iter cost``.

    With theta_every = k > 0, every k-th line (and the last) also lists
    the parameter vector after the cost.
    """
    k = int(theta_every)
    if k < 0:
        raise ValidationError(f"theta_every must be >= 0, got {theta_every!r}")
    last = trace.iterations_run
    lines = [f"# iterations={last} stop={trace.stop_reason}"]
    for i in range(last + 1):
        parts = [str(i), format(trace.costs[i], ".17g")]
        if k > 0 and (i % k == 0 or i == last):
            parts.extend(format(x, ".17g") for x in trace.thetas[i])
        lines.append(" ".join(parts))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
