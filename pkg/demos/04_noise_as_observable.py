"""Rewriting circuit noise as a perturbation of the measured observable.

Three transformations, in increasing generality:

  1. A coherent error inside the circuit is conjugated by the strict
     suffix of layers after it, which moves it to the very end without
     changing the output state. Exact.
  2. A mixture channel at the end becomes
     scale * (Tr[O rho] + level * Tr[Otilde rho]) with
     level = p/(1-p). Exact, for every state.
  3. Small coherent errors anywhere become a theta-dependent
     first-order perturbation Otilde(theta); the leftover error is
     O(angle^2), checked here by halving the angle.
"""

import numpy as np

from vqenoise import (
    CoherentError,
    NoiseModel,
    apply,
    apply_channel,
    apply_pushed_coherent,
    bit_flip_channel,
    build_hardware_efficient,
    expectation,
    first_order_cost,
    first_order_observable,
    incoherent_to_observable,
    initial_theta,
    noise_to_observable_form,
    noisy_apply,
    pauli_on,
    plus_state,
    push_coherent_to_last,
)

circ = build_hardware_efficient(2, 2)
theta = initial_theta(circ, seed=7)
rho0 = plus_state(2)
O = pauli_on(2, {0: "Z"}) + pauli_on(2, {1: "Z"}, 0.5)

# --- 1. pushing a coherent error through the circuit ----------------------
err = CoherentError(1, pauli_on(2, {0: "Z"}), 0.3)
noise = NoiseModel(coherent=[err])
direct = noisy_apply(circ, theta, noise, rho0)
pushed = push_coherent_to_last(circ, theta, [err])
moved = apply_pushed_coherent(circ, theta, pushed, rho0)
print("push-to-last max state error:", np.abs(direct - moved).max())

# --- 2. exact mixture rewriting -------------------------------------------
chan = bit_flip_channel(0.1, 2, 0)
form = incoherent_to_observable(O, chan)
rho = apply(circ, theta, rho0)
lhs = form.scale * (expectation(O, rho) + form.level * expectation(form.perturbation(theta), rho))
rhs = expectation(O, apply_channel(chan, rho))
print(f"mixture rewriting: {lhs:.12f} vs direct {rhs:.12f}  (level={form.level:.4f}, scale={form.scale:.4f})")

# Mid-circuit channels work too; noise_to_observable_form composes the
# push with the rewriting.
mid = NoiseModel(channels={1: bit_flip_channel(0.05, 2, 0)})
form_mid = noise_to_observable_form(O, circ, mid)
lhs = first_order_cost(form_mid, circ, theta, rho0)
rhs = expectation(O, noisy_apply(circ, theta, mid, rho0))
print("mid-circuit channel, rewritten vs direct:", abs(lhs - rhs))

# --- 3. first-order form for small coherent errors ------------------------
def residual(angle):
    errs = [CoherentError(j, pauli_on(2, {0: "X"}), angle) for j in (1, 2)]
    nm = NoiseModel(coherent=errs)
    exact = expectation(O, noisy_apply(circ, theta, nm, rho0))
    approx = first_order_cost(first_order_observable(O, circ, theta, errs), circ, theta, rho0)
    return abs(exact - approx)

r1, r2 = residual(2e-2), residual(1e-2)
print(f"first-order residuals: {r1:.3e} at eta, {r2:.3e} at eta/2, ratio {r1 / r2:.2f} (quadratic -> ~4)")
