"""Noise channels and how strength accumulates with depth.

Kraus channels act on density matrices. The mixture channels used in
the sweeps (bit flip, phase flip, depolarizing) are convex
combinations of Pauli conjugations; amplitude damping is a genuinely
non-unital channel kept in a separate class. Composing a probability-p
mixture after every one of L layers is equivalent to a single channel
of probability 1 - (1-p)^L, and perturbation_level_for_depth maps that
to the epsilon used on the sweep axis.
"""

import numpy as np

from vqenoise import (
    amplitude_damping_channel,
    apply_channel,
    basis_state,
    bit_flip_channel,
    bit_flip_prob_for_epsilon,
    depolarizing_channel,
    expectation,
    pauli_string,
    perturbation_level_for_depth,
    phase_flip_channel,
    plus_state,
)

Z = pauli_string("Z")
X = pauli_string("X")

rho = basis_state(1, 0)
for p in (0.0, 0.1, 0.3):
    out = apply_channel(bit_flip_channel(p, 1, 0), rho)
    print(f"bit flip p={p}: <Z> = {expectation(Z, out):+.4f}  (expected {1 - 2 * p:+.4f})")

# Phase flip kills off-diagonals but leaves populations alone.
rho_plus = plus_state(1)
out = apply_channel(phase_flip_channel(0.25, 1, 0), rho_plus)
print("phase flip on |+>: <X> =", round(expectation(X, out), 4), " populations:", np.real(np.diag(out)))

# Depolarizing contracts toward the maximally mixed state.
out = apply_channel(depolarizing_channel(0.5, 1), rho)
print("depolarizing p=0.5 on |0>:", np.round(np.real(np.diag(out)), 4))

# Amplitude damping is non-unital: it has a preferred fixed point.
rho1 = basis_state(1, 1)
for g in (0.2, 0.6, 1.0):
    out = apply_channel(amplitude_damping_channel(g, 1, 0), rho1)
    print(f"amplitude damping gamma={g}: population of |1> -> {np.real(out[1, 1]):.4f}")

# Depth accounting. One channel per layer at probability p across L
# layers looks, pushed to the end, like survival (1-p)^L. The sweep
# epsilon is the relative cost inflation 1/(1-p)^L - 1, and
# bit_flip_prob_for_epsilon inverts that.
L = 10
p = 0.02
eps = perturbation_level_for_depth(p, L)
print(f"\nL={L}, per-layer p={p}: effective epsilon = {eps:.6f}")
print("inverse recovers p:", abs(bit_flip_prob_for_epsilon(eps, L) - p) < 1e-15)
print("shallow limit eps ~ p*L:", round(eps / (p * L), 4))
