# Parameterized circuits and the local-surjectivity rank test.
#
# A circuit is a stack of layers; layer 1 acts first. ProductLayer
# applies one exponential per parameter, SUNLayer exponentiates the
# joint sum. The rank test below asks whether the tangent directions
# Omega_j = U^dag dU/dtheta_j span the full traceless algebra, which
# is the precondition for the noise rewriting to admit a compensating
# parameter shift.

import numpy as np

from vqenoise import (
    Circuit,
    ProductLayer,
    build_hardware_efficient,
    build_locally_surjective,
    build_sun,
    build_z_only,
    hermitian_exp,
    local_surjectivity_rank,
    omega,
    pauli_string,
    unitary,
)

# Layer ordering: with theta = (a, b) and layers [Z-rot, X-rot],
# U = exp(-i b X) exp(-i a Z). Check against the factors directly.
circ = Circuit(1, [ProductLayer([pauli_string("Z")]), ProductLayer([pauli_string("X")])])
theta = np.array([0.4, -1.1])
U = unitary(circ, theta)
want = hermitian_exp(pauli_string("X"), -1.1) @ hermitian_exp(pauli_string("Z"), 0.4)
print("layer 1 applied first:", np.allclose(U, want))

# Omega_j for a product layer is -i times the conjugated generator;
# for the first parameter of the first layer it is just -i Z.
print("Omega_0 = -iZ at theta=0:", np.allclose(omega(circ, np.zeros(2), 0), -1j * pauli_string("Z")))

rng = np.random.default_rng(42)

for name, builder, args in [
    ("z_only(2, L=3)", build_z_only, (2, 3)),
    ("hardware_efficient(2, L=2)", build_hardware_efficient, (2, 2)),
    ("locally_surjective(2, L=2)", build_locally_surjective, (2, 2)),
    ("sun(2, L=1)", build_sun, (2, 1)),
]:
    c = builder(*args)
    th = rng.uniform(-np.pi, np.pi, c.total_params)
    r = local_surjectivity_rank(c, th)
    full = c.dim**2 - 1
    tag = "locally surjective" if r == full else "rank deficient"
    print(f"{name:30s} params={c.total_params:3d}  rank {r:2d}/{full}  {tag}")

# Commuting-generator circuits can never reach full rank: every Omega
# lives in the span of the generators themselves.
c = build_z_only(2, 5)
print("z_only rank ceiling:", local_surjectivity_rank(c, rng.uniform(-1, 1, c.total_params)))
