"""Command-line entry points.

Subcommands:

* ``train``        train one problem from a JSON config, write the trace
* ``sweep``        run a robustness sweep, write the CSV
* ``verify``       run the release-gate checks
* ``surjectivity`` evaluate the rank test for a configured circuit

Exit codes: 0 success, 1 validation/config error, 2 verify-suite
failure, 3 training divergence.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .ansatz import local_surjectivity_rank
from .core import ValidationError
from .engine import TrainingDivergedError, train
from .experiments import (
    SweepConfig,
    acceptance_sweep_config,
    fit_loglog_slope,
    initial_theta,
    load_json_config,
    optimizer_from_config,
    full_scale_sweep_config,
    problem_from_config,
    run_sweep,
    sweep_config_from_dict,
    train_noise_from_config,
    write_sweep_csv,
)
from .engine import VQEProblem, save_trace
from .verify import verify_all

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_VERIFY_FAILED = 2
EXIT_DIVERGED = 3

PRESETS = {
    "acceptance": acceptance_sweep_config,
    "full_scale": full_scale_sweep_config,
}


def _cmd_train(args) -> int:
    cfg = load_json_config(args.config)
    for key in ("problem", "optimizer"):
        if key not in cfg:
            raise ValidationError(f"train config is missing key {key!r}")
    problem, pid = problem_from_config(cfg["problem"])
    optimizer = optimizer_from_config(cfg["optimizer"])
    if "noise" in cfg:
        noise = train_noise_from_config(cfg["noise"], problem.circuit)
        problem = VQEProblem(
            problem.observable, problem.input_state, problem.circuit, noise, problem.cost_shift
        )
    init_seed = args.seed if args.seed is not None else int(cfg.get("init_seed", 0))
    theta0 = initial_theta(problem.circuit, init_seed)
    trace = train(problem, theta0, optimizer)
    out = args.out or cfg.get("output_path")
    if out:
        save_trace(trace, out, theta_every=int(cfg.get("theta_every", 0)))
        print(f"trace written to {out}")
    print(
        f"{pid}: final cost {trace.final_cost:.12g} after {trace.iterations_run} "
        f"iterations (stop: {trace.stop_reason})"
    )
    return EXIT_OK


def _sweep_config_from_args(args) -> SweepConfig:
    if args.preset is not None:
        if args.config is not None:
            raise ValidationError("pass either --config or --preset, not both")
        builder = PRESETS[args.preset]
        config = builder(args.noise_kind)
    else:
        if args.config is None:
            raise ValidationError("sweep needs --config PATH or --preset NAME")
        config = sweep_config_from_dict(load_json_config(args.config))
    if args.seed is not None:
        config = SweepConfig(
            problem_kind=config.problem_kind,
            problem_params=config.problem_params,
            noise_kind=config.noise_kind,
            epsilons=config.epsilons,
            optimizer=config.optimizer,
            shared_init_seed=int(args.seed),
            output_path=config.output_path,
            per_gate=config.per_gate,
        )
    return config


def _cmd_sweep(args) -> int:
    config = _sweep_config_from_args(args)
    records = run_sweep(config)
    out = args.out or config.output_path
    if out:
        write_sweep_csv(records, out)
        print(f"sweep written to {out}")
    for r in records:
        print(
            f"eps={r.epsilon:.6g}  d2={r.distance_l2:.6g}  dinf={r.distance_linf:.6g}  "
            f"cost={r.final_cost_noisy:.6g}  [{r.flag}]"
        )
    usable = [r for r in records if r.flag == "ok" and r.distance_l2 > 1e-12]
    if len(usable) >= 3:
        fit = fit_loglog_slope(records)
        print(
            f"log-log fit: slope {fit.slope:.4f}, intercept {fit.intercept:.4f}, "
            f"r^2 {fit.r_squared:.4f} over {fit.n_points} points"
        )
    else:
        print("log-log fit skipped: fewer than 3 usable rows")
    return EXIT_OK


def _cmd_verify(_args) -> int:
    report = verify_all()
    print(report.format())
    return EXIT_OK if report.passed else EXIT_VERIFY_FAILED


def _cmd_surjectivity(args) -> int:
    cfg = load_json_config(args.config)
    if "circuit" not in cfg:
        raise ValidationError("surjectivity config is missing key 'circuit'")
    from .experiments import circuit_from_config

    circuit = circuit_from_config(cfg["circuit"])
    samples = int(cfg.get("samples", 10))
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    rng = np.random.default_rng(seed)
    N = circuit.dim
    target = N * N - 1
    ranks = []
    for _ in range(max(1, samples)):
        theta = rng.uniform(-np.pi, np.pi, circuit.total_params)
        ranks.append(local_surjectivity_rank(circuit, theta))
    for i, r in enumerate(ranks):
        print(f"sample {i}: rank {r} / {target}")
    verdict = "locally surjective" if all(r == target for r in ranks) else "NOT locally surjective"
    print(f"{circuit!r}: {verdict} at {len(ranks)} sampled parameter points")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vqenoise",
        description="Noisy VQE training, noise-equivalence transforms, robustness sweeps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train one problem from a JSON config")
    p_train.add_argument("--config", required=True, help="JSON config path")
    p_train.add_argument("--out", default=None, help="trace output path (overrides config)")
    p_train.add_argument("--seed", type=int, default=None, help="override the init seed")
    p_train.set_defaults(func=_cmd_train)

    p_sweep = sub.add_parser("sweep", help="run a robustness sweep")
    p_sweep.add_argument("--config", default=None, help="JSON config path")
    p_sweep.add_argument(
        "--preset",
        choices=sorted(PRESETS),
        default=None,
        help="built-in sweep configuration (full_scale is the slow full-size run)",
    )
    p_sweep.add_argument(
        "--noise-kind",
        choices=("coherent_z", "bit_flip", "control"),
        default="coherent_z",
        help="noise kind for --preset sweeps",
    )
    p_sweep.add_argument("--out", default=None, help="CSV output path (overrides config)")
    p_sweep.add_argument("--seed", type=int, default=None, help="override the shared init seed")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_verify = sub.add_parser("verify", help="run the release-gate checks")
    p_verify.set_defaults(func=_cmd_verify)

    p_surj = sub.add_parser("surjectivity", help="rank test for a configured circuit")
    p_surj.add_argument("--config", required=True, help="JSON config path")
    p_surj.add_argument("--seed", type=int, default=None, help="override the sampling seed")
    p_surj.set_defaults(func=_cmd_surjectivity)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TrainingDivergedError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DIVERGED
    except ValidationError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
