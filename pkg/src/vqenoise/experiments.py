"""Robustness experiments: optimum displacement under scaled noise.

The protocol: train a clean problem once from a shared seeded starting
point, then for each perturbation level epsilon build the noisy variant
of the same problem, train it from the same starting point with the
same optimizer settings, and record the parameter-space distance
between the two trained optima. For locally surjective ansatze the
distance scales linearly in epsilon; the log-log slope fit quantifies
that.

Noise kinds for sweeps:

* ``coherent_z``: a Z rotation on qubit 0 with angle epsilon after
  every layer (after every gate with ``per_gate``);
* ``bit_flip``: an X-flip channel on qubit 0 after every layer, with
  per-layer probability chosen so the composed perturbation level is
  exactly epsilon: p = 1 - (1 + epsilon)**(-1/L);
* ``control``: every parameter rescaled by (1 + epsilon).

Sweep results serialize to CSV with the fixed header
``problem_id,noise_kind,epsilon,distance_l2,distance_linf,final_cost_noisy,final_cost_clean,iterations,flag``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .ansatz import (
    Circuit,
    build_hardware_efficient,
    build_locally_surjective,
    build_qaoa,
    build_sun,
    build_z_only,
    ProductLayer,
    qaoa_cost_operator,
    split_product_layers,
)
from .core import (
    ValidationError,
    basis_state,
    pauli_on,
    plus_state,
    random_hermitian,
)
from .engine import (
    OptimizerConfig,
    TrainingDivergedError,
    TrainingTrace,
    VQEProblem,
    train,
)
from .noise import (
    CoherentError,
    ControlErrorSpec,
    NoiseModel,
    amplitude_damping_channel,
    bit_flip_channel,
    bit_flip_prob_for_epsilon,
    depolarizing_channel,
)

CSV_HEADER = (
    "problem_id,noise_kind,epsilon,distance_l2,distance_linf,"
    "final_cost_noisy,final_cost_clean,iterations,flag"
)

# Distances at or below this are treated as numerically zero (degenerate)
# and excluded from log-log fits.
DEGENERATE_DISTANCE = 1e-12

SWEEP_NOISE_KINDS = ("coherent_z", "bit_flip", "control")

MAX_SUPPORTED_QUBITS = 5

# Step sizes below were fixed by halving from 0.5 until the first
# training trace on the corresponding problem class descends
# monotonically; see the halving_search_step helper.
DEFAULT_STEP_RANDOM_VQE = 0.05
DEFAULT_STEP_QAOA = 0.01


# ---------------------------------------------------------------------------
# Problem factories
# ---------------------------------------------------------------------------


def make_random_vqe(n: int, L: int = 2, seed: int = 0) -> VQEProblem:
    """Seeded random observable, locally surjective ansatz, |0...0> input."""
    if not (1 <= n <= MAX_SUPPORTED_QUBITS):
        raise ValidationError(
            f"random VQE supports 1 <= n <= {MAX_SUPPORTED_QUBITS}, got n={n}"
        )
    observable = random_hermitian(n, seed)
    circuit = build_locally_surjective(n, L)
    return VQEProblem(observable, basis_state(n, 0), circuit)


def make_qaoa_maxcut(edges, L: int, n: int | None = None) -> VQEProblem:
    """MaxCut cost sum Z_a Z_b with the alternating ansatz and |+...+> input."""
    circuit = build_qaoa(edges, L, n)
    observable = qaoa_cost_operator(edges, circuit.n)
    return VQEProblem(observable, plus_state(circuit.n), circuit)


def make_single_qubit_cosine() -> VQEProblem:
    """One RY half-angle rotation measuring Z: cost(theta) = cos(theta) + 1.

    The optimum is theta = pi with cost 0; gradient -sin(theta). Used as
    the closed-form reference problem throughout the test suites.
    """
    circuit = Circuit(1, [ProductLayer([pauli_on(1, {0: "Y"}, 0.5)])])
    return VQEProblem(pauli_on(1, {0: "Z"}), basis_state(1, 0), circuit)


# ---------------------------------------------------------------------------
# Sweep configuration
# ---------------------------------------------------------------------------


def log_spaced_epsilons(lo: float, hi: float, count: int) -> tuple[float, ...]:
    """count log-spaced perturbation levels from lo to hi inclusive."""
    if not (0.0 < lo < hi):
        raise ValidationError(f"need 0 < lo < hi, got lo={lo!r}, hi={hi!r}")
    if count < 2:
        raise ValidationError(f"need at least 2 levels, got {count}")
    return tuple(float(x) for x in np.logspace(np.log10(lo), np.log10(hi), int(count)))


@dataclass(frozen=True)
class SweepConfig:
    """One robustness sweep: a problem, a noise kind, and epsilon levels."""

    problem_kind: str
    problem_params: dict
    noise_kind: str
    epsilons: tuple[float, ...]
    optimizer: OptimizerConfig
    shared_init_seed: int
    output_path: str | None = None
    per_gate: bool = False

    def __post_init__(self):
        if self.problem_kind not in ("random_vqe", "qaoa_maxcut"):
            raise ValidationError(f"unknown problem kind {self.problem_kind!r}")
        if self.noise_kind not in SWEEP_NOISE_KINDS:
            raise ValidationError(
                f"unknown sweep noise kind {self.noise_kind!r}; expected one of {SWEEP_NOISE_KINDS}"
            )
        eps = tuple(float(e) for e in self.epsilons)
        if len(eps) == 0:
            raise ValidationError("epsilons must be nonempty")
        if any(not np.isfinite(e) or e <= 0.0 for e in eps):
            raise ValidationError("every epsilon must be positive and finite")
        if any(b <= a for a, b in zip(eps, eps[1:])):
            raise ValidationError("epsilons must be strictly ascending")
        object.__setattr__(self, "epsilons", eps)
        object.__setattr__(self, "problem_params", dict(self.problem_params))


@dataclass(frozen=True)
class SweepRecord:
    """One noisy training outcome; maps one-to-one onto a CSV row."""

    problem_id: str
    noise_kind: str
    epsilon: float
    distance_l2: float
    distance_linf: float
    final_cost_noisy: float
    final_cost_clean: float
    iterations: int
    flag: str

    def __post_init__(self):
        if self.flag not in ("ok", "diverged"):
            raise ValidationError(f"unknown flag {self.flag!r}")


@dataclass(frozen=True)
class SlopeFit:
    """Least-squares line through (log eps, log distance)."""

    slope: float
    intercept: float
    r_squared: float
    n_points: int


def problem_id_for(config: SweepConfig) -> str:
    p = config.problem_params
    if config.problem_kind == "random_vqe":
        return f"random_vqe_n{p['n']}_L{p.get('L', 2)}_seed{p.get('seed', 0)}"
    edges = p["edges"]
    n = p.get("n") or max(max(e) for e in edges) + 1
    return f"qaoa_maxcut_n{n}_L{p['L']}"


def build_sweep_problem(config: SweepConfig) -> VQEProblem:
    p = config.problem_params
    if config.problem_kind == "random_vqe":
        problem = make_random_vqe(p["n"], p.get("L", 2), p.get("seed", 0))
    else:
        problem = make_qaoa_maxcut(p["edges"], p["L"], p.get("n"))
    if config.per_gate:
        problem = VQEProblem(
            problem.observable,
            problem.input_state,
            split_product_layers(problem.circuit),
            None,
            problem.cost_shift,
        )
    return problem


def sweep_noise_model(kind: str, epsilon: float, circuit: Circuit) -> NoiseModel:
    """Noise model for one sweep point on the given circuit."""
    e = float(epsilon)
    if not np.isfinite(e) or e <= 0.0:
        raise ValidationError(f"epsilon must be positive, got {epsilon!r}")
    L = circuit.depth
    if kind == "coherent_z":
        Z0 = pauli_on(circuit.n, {0: "Z"})
        errors = [CoherentError(j, Z0, e) for j in range(1, L + 1)]
        return NoiseModel(coherent=errors)
    if kind == "bit_flip":
        p = bit_flip_prob_for_epsilon(e, L)
        channels = {j: bit_flip_channel(p, circuit.n, 0) for j in range(1, L + 1)}
        return NoiseModel(channels=channels)
    if kind == "control":
        return NoiseModel(control=ControlErrorSpec(np.full(circuit.total_params, e)))
    raise ValidationError(f"unknown sweep noise kind {kind!r}")


def initial_theta(circuit: Circuit, seed: int) -> np.ndarray:
    """Shared starting point: componentwise uniform on (-pi, pi)."""
    rng = np.random.default_rng(int(seed))
    return rng.uniform(-np.pi, np.pi, circuit.total_params)


def run_sweep(config: SweepConfig) -> list[SweepRecord]:
    """Clean baseline plus one noisy training per epsilon, all from the
    same starting point. Deterministic for a fixed config. Rows come
    back ordered by epsilon; a diverged training flags its row and the
    sweep continues."""
    problem = build_sweep_problem(config)
    pid = problem_id_for(config)
    theta0 = initial_theta(problem.circuit, config.shared_init_seed)
    clean = train(problem, theta0, config.optimizer)
    records = []
    for eps in config.epsilons:
        noise = sweep_noise_model(config.noise_kind, eps, problem.circuit)
        noisy_problem = VQEProblem(
            problem.observable,
            problem.input_state,
            problem.circuit,
            noise,
            problem.cost_shift,
        )
        try:
            noisy = train(noisy_problem, theta0, config.optimizer)
        except TrainingDivergedError as err:
            records.append(
                SweepRecord(
                    problem_id=pid,
                    noise_kind=config.noise_kind,
                    epsilon=float(eps),
                    distance_l2=float("nan"),
                    distance_linf=float("nan"),
                    final_cost_noisy=float("nan"),
                    final_cost_clean=clean.final_cost,
                    iterations=err.iteration,
                    flag="diverged",
                )
            )
            continue
        delta = noisy.final_theta - clean.final_theta
        records.append(
            SweepRecord(
                problem_id=pid,
                noise_kind=config.noise_kind,
                epsilon=float(eps),
                distance_l2=float(np.linalg.norm(delta)),
                distance_linf=float(np.max(np.abs(delta))),
                final_cost_noisy=noisy.final_cost,
                final_cost_clean=clean.final_cost,
                iterations=noisy.iterations_run,
                flag="ok",
            )
        )
    return records


def write_sweep_csv(records, path) -> None:
    """Serialize records under the fixed header; floats at full precision."""
    lines = [CSV_HEADER]
    for r in records:
        lines.append(
            ",".join(
                [
                    r.problem_id,
                    r.noise_kind,
                    format(r.epsilon, ".17g"),
                    format(r.distance_l2, ".17g"),
                    format(r.distance_linf, ".17g"),
                    format(r.final_cost_noisy, ".17g"),
                    format(r.final_cost_clean, ".17g"),
                    str(r.iterations),
                    r.flag,
                ]
            )
        )
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def fit_loglog_slope(records) -> SlopeFit:
    """OLS line through (log eps, log distance_l2) over usable rows.

    Rows flagged as diverged or with distance <= 1e-12 (numerically
    zero, the log would be meaningless) are excluded; at least 3 rows
    must remain.
    """
    xs = []
    ys = []
    for r in records:
        if r.flag != "ok":
            continue
        if not np.isfinite(r.distance_l2) or r.distance_l2 <= DEGENERATE_DISTANCE:
            continue
        xs.append(np.log(r.epsilon))
        ys.append(np.log(r.distance_l2))
    if len(xs) < 3:
        raise ValidationError(
            f"need at least 3 usable rows for a slope fit, got {len(xs)}"
        )
    x = np.array(xs)
    y = np.array(ys)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res <= 1e-24 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return SlopeFit(
        slope=float(slope),
        intercept=float(intercept),
        r_squared=float(min(max(r2, 0.0), 1.0)),
        n_points=len(xs),
    )


def halving_search_step(problem: VQEProblem, theta0, start: float = 0.5, iters: int = 50) -> float:
    """Halve the step size until a short training descends monotonically.

    This is how the module's default step sizes were picked; it is kept
    public so new problem classes can be calibrated the same way.
    """
    step = float(start)
    for _ in range(30):
        trace = train(problem, theta0, OptimizerConfig(step_size=step, max_iters=iters))
        diffs = np.diff(trace.costs)
        if np.all(diffs <= 1e-12):
            return step
        step *= 0.5
    raise ValidationError("no monotone step size found after 30 halvings")


# ---------------------------------------------------------------------------
# Acceptance-scale and full-scale presets
# ---------------------------------------------------------------------------

ACCEPTANCE_EPSILONS = log_spaced_epsilons(1e-4, 10.0 ** (-0.5), 8)


def acceptance_sweep_config(noise_kind: str, output_path: str | None = None) -> SweepConfig:
    """Desk-scale sweep: 2-qubit depth-2 random VQE, 1000 iterations.

    grad_tol is zero so every training runs the full 1000 iterations.
    """
    return SweepConfig(
        problem_kind="random_vqe",
        problem_params={"n": 2, "L": 2, "seed": 5},
        noise_kind=noise_kind,
        epsilons=ACCEPTANCE_EPSILONS,
        optimizer=OptimizerConfig(
            step_size=DEFAULT_STEP_RANDOM_VQE, max_iters=1000, grad_tol=0.0
        ),
        shared_init_seed=11,
        output_path=output_path,
    )


FULL_SCALE_EDGES = ((0, 1), (1, 2), (2, 3), (3, 4), (4, 0))


def full_scale_sweep_config(noise_kind: str, output_path: str | None = None) -> SweepConfig:
    """Full-scale preset: 5-qubit depth-30 MaxCut on the 5-cycle.

    Same protocol as the desk-scale sweep but substantially slower; it
    is exposed behind the CLI ``--preset full_scale`` flag and not run
    by the test suite.
    """
    return SweepConfig(
        problem_kind="qaoa_maxcut",
        problem_params={"edges": [list(e) for e in FULL_SCALE_EDGES], "L": 30, "n": 5},
        noise_kind=noise_kind,
        epsilons=ACCEPTANCE_EPSILONS,
        optimizer=OptimizerConfig(step_size=DEFAULT_STEP_QAOA, max_iters=1000, grad_tol=0.0),
        shared_init_seed=11,
        output_path=output_path,
    )


# ---------------------------------------------------------------------------
# Config files
# ---------------------------------------------------------------------------


def _require_keys(cfg: dict, keys, where: str) -> None:
    missing = [k for k in keys if k not in cfg]
    if missing:
        raise ValidationError(f"{where} is missing required key(s) {missing}")


def circuit_from_config(cfg: dict) -> Circuit:
    """Build a circuit from its config description.

    Kinds: locally_surjective, sun, hardware_efficient (keys n, L),
    qaoa (keys edges, L, optional n), z_only (keys n, L).
    """
    if not isinstance(cfg, dict):
        raise ValidationError(f"circuit config must be an object, got {type(cfg).__name__}")
    _require_keys(cfg, ["kind"], "circuit config")
    kind = cfg["kind"]
    if kind == "qaoa":
        _require_keys(cfg, ["edges", "L"], "qaoa circuit config")
        return build_qaoa(cfg["edges"], int(cfg["L"]), cfg.get("n"))
    builders = {
        "locally_surjective": build_locally_surjective,
        "sun": build_sun,
        "hardware_efficient": build_hardware_efficient,
        "z_only": build_z_only,
    }
    if kind not in builders:
        raise ValidationError(
            f"unknown circuit kind {kind!r}; expected one of {sorted(builders) + ['qaoa']}"
        )
    _require_keys(cfg, ["n", "L"], f"{kind} circuit config")
    return builders[kind](int(cfg["n"]), int(cfg["L"]))


def problem_from_config(cfg: dict) -> tuple[VQEProblem, str]:
    """Build (problem, problem_id) from a problem config object."""
    if not isinstance(cfg, dict):
        raise ValidationError(f"problem config must be an object, got {type(cfg).__name__}")
    _require_keys(cfg, ["kind"], "problem config")
    kind = cfg["kind"]
    if kind == "random_vqe":
        _require_keys(cfg, ["n"], "random_vqe problem config")
        n = int(cfg["n"])
        L = int(cfg.get("L", 2))
        seed = int(cfg.get("seed", 0))
        return make_random_vqe(n, L, seed), f"random_vqe_n{n}_L{L}_seed{seed}"
    if kind == "qaoa_maxcut":
        _require_keys(cfg, ["edges", "L"], "qaoa_maxcut problem config")
        problem = make_qaoa_maxcut(cfg["edges"], int(cfg["L"]), cfg.get("n"))
        return problem, f"qaoa_maxcut_n{problem.circuit.n}_L{int(cfg['L'])}"
    if kind == "single_qubit_cosine":
        return make_single_qubit_cosine(), "single_qubit_cosine"
    raise ValidationError(f"unknown problem kind {kind!r}")


def optimizer_from_config(cfg: dict) -> OptimizerConfig:
    if not isinstance(cfg, dict):
        raise ValidationError(f"optimizer config must be an object, got {type(cfg).__name__}")
    _require_keys(cfg, ["step_size"], "optimizer config")
    return OptimizerConfig(
        step_size=float(cfg["step_size"]),
        max_iters=int(cfg.get("max_iters", 1000)),
        grad_tol=float(cfg.get("grad_tol", 1e-9)),
        seed=int(cfg.get("seed", 0)),
    )


def epsilons_from_config(cfg) -> tuple[float, ...]:
    if isinstance(cfg, dict):
        _require_keys(cfg, ["min", "max", "count"], "epsilon grid config")
        return log_spaced_epsilons(float(cfg["min"]), float(cfg["max"]), int(cfg["count"]))
    if isinstance(cfg, (list, tuple)):
        return tuple(float(e) for e in cfg)
    raise ValidationError("epsilons must be a list or a {min, max, count} object")


def train_noise_from_config(cfg: dict, circuit: Circuit) -> NoiseModel:
    """Noise model for single-problem training configs.

    Kinds: coherent_z / bit_flip / control (key epsilon);
    depolarizing (key p, optional layers); amplitude_damping (key
    gamma, optional qubit and layers). ``layers`` defaults to every
    layer.
    """
    _require_keys(cfg, ["kind"], "noise config")
    kind = cfg["kind"]
    if kind in SWEEP_NOISE_KINDS:
        _require_keys(cfg, ["epsilon"], f"{kind} noise config")
        return sweep_noise_model(kind, float(cfg["epsilon"]), circuit)
    layers = cfg.get("layers", "all")
    if layers == "all":
        layer_ids = list(range(1, circuit.depth + 1))
    else:
        layer_ids = [int(j) for j in layers]
    if kind == "depolarizing":
        _require_keys(cfg, ["p"], "depolarizing noise config")
        chan = depolarizing_channel(float(cfg["p"]), circuit.n)
        return NoiseModel(channels={j: chan for j in layer_ids})
    if kind == "amplitude_damping":
        _require_keys(cfg, ["gamma"], "amplitude_damping noise config")
        chan = amplitude_damping_channel(
            float(cfg["gamma"]), circuit.n, int(cfg.get("qubit", 0))
        )
        return NoiseModel(channels={j: chan for j in layer_ids})
    raise ValidationError(f"unknown noise kind {kind!r}")


def sweep_config_from_dict(cfg: dict) -> SweepConfig:
    _require_keys(
        cfg, ["problem", "noise_kind", "epsilons", "optimizer", "shared_init_seed"], "sweep config"
    )
    problem_cfg = cfg["problem"]
    _require_keys(problem_cfg, ["kind"], "sweep problem config")
    return SweepConfig(
        problem_kind=problem_cfg["kind"],
        problem_params={k: v for k, v in problem_cfg.items() if k != "kind"},
        noise_kind=cfg["noise_kind"],
        epsilons=epsilons_from_config(cfg["epsilons"]),
        optimizer=optimizer_from_config(cfg["optimizer"]),
        shared_init_seed=int(cfg["shared_init_seed"]),
        output_path=cfg.get("output_path"),
        per_gate=bool(cfg.get("per_gate", False)),
    )


def load_json_config(path) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as err:
        raise ValidationError(f"cannot read config {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise ValidationError(f"config {path} is not valid JSON: {err}") from err
    if not isinstance(cfg, dict):
        raise ValidationError(f"config {path} must hold a JSON object")
    return cfg
