"""Robustness sweep: optimum displacement versus perturbation strength.

Trains the same problem from the same starting point once per noise
level, measures how far each noisy optimum moved from the clean one,
and fits a line through the points on log-log axes. For noise that the
observable rewriting turns into a linear perturbation, the distance
grows linearly in epsilon, so the fitted slope comes out near 1.

Writes the sweep to demos/out/ in the same CSV schema the command line
tool produces. If the plotviz package is installed the script also
renders the figure.
"""

import os

from vqenoise import (
    CSV_HEADER,
    OptimizerConfig,
    SweepConfig,
    fit_loglog_slope,
    log_spaced_epsilons,
    run_sweep,
    write_sweep_csv,
)

config = SweepConfig(
    problem_kind="random_vqe",
    problem_params={"n": 2, "L": 2, "seed": 5},
    noise_kind="coherent_z",
    epsilons=log_spaced_epsilons(1e-4, 10**-0.5, 8),
    optimizer=OptimizerConfig(step_size=0.05, max_iters=1000, grad_tol=0.0),
    shared_init_seed=11,
)

records = run_sweep(config)
print(f"{'epsilon':>12s} {'distance_l2':>14s} {'flag':>10s}")
for r in records:
    print(f"{r.epsilon:12.3e} {r.distance_l2:14.6e} {r.flag:>10s}")

fit = fit_loglog_slope(records)
print(f"\nlog-log fit: slope {fit.slope:.4f}, r^2 {fit.r_squared:.6f} over {fit.n_points} points")
print("linear scaling:", 0.8 <= fit.slope <= 1.2)

out_dir = os.path.join(os.path.dirname(os.path.abspath(__file__)), "out")
os.makedirs(out_dir, exist_ok=True)
csv_path = os.path.join(out_dir, "coherent_z_sweep.csv")
write_sweep_csv(records, csv_path)
print(f"\nwrote {csv_path}")
print("schema:", ",".join(CSV_HEADER) if not isinstance(CSV_HEADER, str) else CSV_HEADER)

# Optional hand-off to the plotting package. It reads only the CSV.
try:
    from plotviz import PlotSpec, render
except ImportError:
    print("plotviz not installed; skipping the figure")
else:
    png = os.path.join(out_dir, "coherent_z_sweep.png")
    render(PlotSpec((csv_path,), ("coherent Z",), png))
    print(f"rendered {png}")

# The same machinery at larger scale (6 qubits, depth 30) is available
# through full_scale_sweep_config; it runs for minutes, not seconds,
# so it is not exercised here.
