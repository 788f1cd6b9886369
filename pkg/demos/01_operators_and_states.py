"""Operators, states and the exact matrix exponential.

Everything downstream (circuits, noise, training) is built from three
ingredients: Hermitian operators assembled from Pauli strings, density
matrices as states, and exp(-i * scale * H) computed through an
eigendecomposition. This script exercises each against closed forms.
"""

import numpy as np

from vqenoise import (
    basis_state,
    expectation,
    ground_energy,
    hermitian_exp,
    pauli_on,
    pauli_string,
    plus_state,
)

# Pauli strings: "ZZ" is Z (x) Z, qubit 0 is the leftmost factor.
ZZ = pauli_string("ZZ")
print("Z(x)Z diagonal:", np.real(np.diag(ZZ)))

# pauli_on places letters on chosen qubits and pads with identity.
X1 = pauli_on(2, {1: "X"})
print("X on qubit 1 equals pauli_string('IX'):", np.allclose(X1, pauli_string("IX")))

# exp(-i pi Z) = -I and exp(-i pi/2 X) = -i X, both exact up to
# floating point since the exponential goes through eigh.
Z = pauli_string("Z")
X = pauli_string("X")
print("exp(-i pi Z) = -I:", np.allclose(hermitian_exp(Z, np.pi), -np.eye(2)))
print("exp(-i pi/2 X) = -iX:", np.allclose(hermitian_exp(X, np.pi / 2), -1j * X))

# The group law holds for commuting generators.
a, b = 0.37, 1.21
lhs = hermitian_exp(Z, a) @ hermitian_exp(Z, b)
print("group law error:", np.abs(lhs - hermitian_exp(Z, a + b)).max())

# States: |00><00| and the uniform-superposition projector.
rho00 = basis_state(2, 0)
print("<ZZ> in |00>:", expectation(ZZ, rho00))
print("<ZZ> in |++>:", expectation(ZZ, plus_state(2)))

# Expectations are bounded by the spectrum; ground_energy is the floor.
H = pauli_string("ZZ") + 0.5 * pauli_string("XI")
e0 = ground_energy(H)
rng = np.random.default_rng(0)
vals = []
for _ in range(200):
    v = rng.normal(size=4) + 1j * rng.normal(size=4)
    rho = np.outer(v, v.conj())
    rho /= np.trace(rho).real
    vals.append(expectation(H, rho))
print(f"ground energy {e0:.6f}, min over 200 random pure states {min(vals):.6f}")
