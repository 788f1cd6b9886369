"""Parameterized circuit layers acting on density matrices.

A circuit is an ordered sequence of layers; layer 1 is applied to the
state first, so the total unitary is U(theta) = U_L ... U_2 U_1.

Two layer kinds are supported:

* ``ProductLayer``: U_j = prod_k exp(-i theta_{j,k} H_{j,k}), one
  parameter per generator, gate k = 1 applied first (rightmost factor);
* ``SUNLayer``: U_j = exp(-i sum_k theta_{j,k} H_{j,k}) with traceless
  generators, all parameters inside one exponential.

Derivatives are exact. For a ProductLayer the derivative inserts
(-i H_k) at the gate position; for an SUNLayer the directional
derivative of the exponential uses the eigendecomposition divided
difference (Daleckii-Krein) table, evaluated in the numerically stable
form -i exp(-i mu) sinc(delta / 2) with mu, delta the eigenvalue mean
and gap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    ValidationError,
    as_square_matrix,
    hermitian_exp,
    hilbert_dim,
    pauli_basis,
    pauli_on,
    require_density_matrix,
    require_hermitian,
)

# Relative singular-value cutoff for the local-surjectivity rank test.
RANK_RTOL = 1e-8


def _validated_generators(generators, traceless: bool) -> tuple[np.ndarray, ...]:
    gens = tuple(generators)
    if len(gens) == 0:
        raise ValidationError("a layer needs at least one generator")
    out = []
    dim = None
    for k, G in enumerate(gens):
        H = require_hermitian(G, f"generator {k}")
        if dim is None:
            dim = H.shape[0]
        elif H.shape[0] != dim:
            raise ValidationError(
                f"generator {k} has dimension {H.shape[0]}, expected {dim}"
            )
        if traceless and abs(complex(np.trace(H))) > 1e-10:
            raise ValidationError(
                f"generator {k} must be traceless, got trace {complex(np.trace(H)):.3e}"
            )
        out.append(H)
    return tuple(out)


@dataclass(frozen=True, eq=False, repr=False)
class ProductLayer:
    """Ordered product of single-parameter exponentials."""

    generators: tuple[np.ndarray, ...]

    def __init__(self, generators):
        object.__setattr__(self, "generators", _validated_generators(generators, traceless=False))

    @property
    def param_count(self) -> int:
        return len(self.generators)

    @property
    def dim(self) -> int:
        return self.generators[0].shape[0]

    def __repr__(self) -> str:
        return f"ProductLayer(dim={self.dim}, params={self.param_count})"


@dataclass(frozen=True, eq=False, repr=False)
class SUNLayer:
    """Single exponential of a parameter-weighted sum of traceless generators."""

    generators: tuple[np.ndarray, ...]

    def __init__(self, generators):
        object.__setattr__(self, "generators", _validated_generators(generators, traceless=True))

    @property
    def param_count(self) -> int:
        return len(self.generators)

    @property
    def dim(self) -> int:
        return self.generators[0].shape[0]

    def __repr__(self) -> str:
        return f"SUNLayer(dim={self.dim}, params={self.param_count})"


Layer = ProductLayer | SUNLayer


@dataclass(frozen=True, eq=False, repr=False)
class Circuit:
    """Layered ansatz on n qubits; parameters are concatenated layer by layer."""

    n: int
    layers: tuple[Layer, ...]

    def __init__(self, n: int, layers):
        N = hilbert_dim(n)
        layers = tuple(layers)
        for j, layer in enumerate(layers):
            if not isinstance(layer, (ProductLayer, SUNLayer)):
                raise ValidationError(f"layer {j + 1} is not a ProductLayer or SUNLayer")
            if layer.dim != N:
                raise ValidationError(
                    f"layer {j + 1} acts on dimension {layer.dim}, expected {N} for n={n}"
                )
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "layers", layers)

    @property
    def dim(self) -> int:
        return hilbert_dim(self.n)

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def total_params(self) -> int:
        return sum(layer.param_count for layer in self.layers)

    def __repr__(self) -> str:
        return f"Circuit(n={self.n}, depth={self.depth}, params={self.total_params})"


def check_theta(circuit: Circuit, theta) -> np.ndarray:
    """Coerce theta to a finite float vector of length total_params."""
    t = np.asarray(theta, dtype=np.float64)
    if t.ndim != 1 or t.size != circuit.total_params:
        raise ValidationError(
            f"theta must have length {circuit.total_params}, got shape {t.shape}"
        )
    if not np.all(np.isfinite(t)):
        raise ValidationError("theta contains non-finite entries")
    return t


def split_params(circuit: Circuit, theta) -> list[np.ndarray]:
    """Slice a flat parameter vector into per-layer pieces."""
    t = check_theta(circuit, theta)
    out = []
    pos = 0
    for layer in circuit.layers:
        out.append(t[pos : pos + layer.param_count])
        pos += layer.param_count
    return out


# ---------------------------------------------------------------------------
# Layer unitaries and derivatives
# ---------------------------------------------------------------------------


def _sun_exp_and_derivs(A: np.ndarray, generators, want_derivs: bool):
    """exp(-iA) and, optionally, its directional derivatives along generators.

    With A = V diag(lam) V^dag the derivative along H is
    V (Phi * (V^dag H V)) V^dag where
    Phi_ab = (e^{-i lam_a} - e^{-i lam_b}) / (lam_a - lam_b)
           = -i e^{-i (lam_a+lam_b)/2} sinc((lam_a - lam_b)/2),
    which is exact and stable for coinciding eigenvalues.
    """
    lam, V = np.linalg.eigh(A)
    U = (V * np.exp(-1j * lam)) @ V.conj().T
    if not want_derivs:
        return U, None
    delta = lam[:, None] - lam[None, :]
    mean = 0.5 * (lam[:, None] + lam[None, :])
    # np.sinc(x) = sin(pi x)/(pi x), so sin(d/2)/(d/2) = np.sinc(d / (2 pi)).
    phi = -1j * np.exp(-1j * mean) * np.sinc(delta / (2.0 * np.pi))
    Vh = V.conj().T
    derivs = [V @ (phi * (Vh @ H @ V)) @ Vh for H in generators]
    return U, derivs


def layer_unitary(layer: Layer, theta_j) -> np.ndarray:
    """Unitary of one layer for its parameter slice."""
    t = np.asarray(theta_j, dtype=np.float64)
    if t.shape != (layer.param_count,):
        raise ValidationError(
            f"layer expects {layer.param_count} parameters, got shape {t.shape}"
        )
    if isinstance(layer, SUNLayer):
        A = sum(tk * H for tk, H in zip(t, layer.generators))
        U, _ = _sun_exp_and_derivs(np.asarray(A), layer.generators, want_derivs=False)
        return U
    U = np.eye(layer.dim, dtype=np.complex128)
    for tk, H in zip(t, layer.generators):
        U = hermitian_exp(H, tk) @ U
    return U


def layer_unitary_and_derivs(layer: Layer, theta_j) -> tuple[np.ndarray, list[np.ndarray]]:
    """One layer's unitary and the exact partials dU/dtheta_k."""
    t = np.asarray(theta_j, dtype=np.float64)
    if t.shape != (layer.param_count,):
        raise ValidationError(
            f"layer expects {layer.param_count} parameters, got shape {t.shape}"
        )
    if isinstance(layer, SUNLayer):
        A = sum(tk * H for tk, H in zip(t, layer.generators))
        U, derivs = _sun_exp_and_derivs(np.asarray(A), layer.generators, want_derivs=True)
        return U, derivs
    gates = [hermitian_exp(H, tk) for tk, H in zip(t, layer.generators)]
    p = len(gates)
    # prefix[k] = G_k ... G_1 (prefix[0] = I); suffix[k] = G_p ... G_{k+1}.
    prefix = [np.eye(layer.dim, dtype=np.complex128)]
    for G in gates:
        prefix.append(G @ prefix[-1])
    suffix = [np.eye(layer.dim, dtype=np.complex128)] * (p + 1)
    acc = np.eye(layer.dim, dtype=np.complex128)
    for k in range(p, 0, -1):
        suffix[k] = acc
        acc = acc @ gates[k - 1]
    U = prefix[-1]
    derivs = [
        suffix[k + 1] @ (-1j * layer.generators[k]) @ prefix[k + 1]
        for k in range(p)
    ]
    return U, derivs


def layer_unitaries(circuit: Circuit, theta) -> list[np.ndarray]:
    """Per-layer unitaries [U_1, ..., U_L]."""
    slices = split_params(circuit, theta)
    return [layer_unitary(layer, s) for layer, s in zip(circuit.layers, slices)]


def unitary(circuit: Circuit, theta) -> np.ndarray:
    """Total circuit unitary U_L ... U_1."""
    U = np.eye(circuit.dim, dtype=np.complex128)
    for Uj in layer_unitaries(circuit, theta):
        U = Uj @ U
    return U


def apply(circuit: Circuit, theta, rho0) -> np.ndarray:
    """Propagate a density matrix through the clean circuit."""
    rho = require_density_matrix(rho0, "input state")
    if rho.shape[0] != circuit.dim:
        raise ValidationError(
            f"input state dimension {rho.shape[0]} does not match circuit dimension {circuit.dim}"
        )
    U = unitary(circuit, theta)
    return U @ rho @ U.conj().T


def omegas(circuit: Circuit, theta) -> list[np.ndarray]:
    """Effective generators Omega_j = U^dag dU/dtheta_j for all parameters.

    Each Omega_j is anti-Hermitian. With P_{m-1} the product of layers
    below layer m, Omega for a parameter of layer m reduces to
    P_{m-1}^dag (U_m^dag dU_m) P_{m-1}.
    """
    slices = split_params(circuit, theta)
    out: list[np.ndarray] = []
    P = np.eye(circuit.dim, dtype=np.complex128)
    for layer, s in zip(circuit.layers, slices):
        U_m, derivs = layer_unitary_and_derivs(layer, s)
        Ph = P.conj().T
        Umh = U_m.conj().T
        for dU in derivs:
            out.append(Ph @ (Umh @ dU) @ P)
        P = U_m @ P
    return out


def omega(circuit: Circuit, theta, j: int) -> np.ndarray:
    """Omega_j for one flat parameter index (0-based)."""
    check_theta(circuit, theta)
    if not (0 <= j < circuit.total_params):
        raise ValidationError(
            f"parameter index {j} out of range for {circuit.total_params} parameters"
        )
    return omegas(circuit, theta)[j]


def local_surjectivity_rank(circuit: Circuit, theta) -> int:
    """Rank of the real span of the traceless parts of {Omega_j}.

    The tangent map of theta -> U(theta) rho U(theta)^dag is surjective
    onto traceless directions iff this rank equals N^2 - 1. Computed by
    SVD of the stacked real embeddings [Re vec(Omega), Im vec(Omega)]
    with a relative cutoff of 1e-8 on singular values.
    """
    oms = omegas(circuit, theta)
    if len(oms) == 0:
        return 0
    N = circuit.dim
    eye = np.eye(N)
    rows = []
    for Om in oms:
        traceless = Om - (np.trace(Om) / N) * eye
        v = traceless.reshape(-1)
        rows.append(np.concatenate([v.real, v.imag]))
    M = np.array(rows)
    sv = np.linalg.svd(M, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.sum(sv > RANK_RTOL * sv[0]))


def is_locally_surjective_at(circuit: Circuit, theta) -> bool:
    """True iff the rank test saturates N^2 - 1 at this theta."""
    N = circuit.dim
    return local_surjectivity_rank(circuit, theta) == N * N - 1


def split_product_layers(circuit: Circuit) -> Circuit:
    """Rewrite every multi-generator ProductLayer as single-gate layers.

    The total unitary is unchanged for any theta; SUNLayers are kept
    whole. Useful for attaching per-gate (rather than per-layer) noise.
    """
    layers: list[Layer] = []
    for layer in circuit.layers:
        if isinstance(layer, ProductLayer) and layer.param_count > 1:
            layers.extend(ProductLayer([H]) for H in layer.generators)
        else:
            layers.append(layer)
    return Circuit(circuit.n, layers)


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------


def gell_mann_basis(N: int) -> list[np.ndarray]:
    """Generalized Gell-Mann basis of traceless Hermitian matrices, N^2 - 1 elements."""
    if N < 2:
        raise ValidationError(f"Gell-Mann basis needs N >= 2, got {N}")
    basis: list[np.ndarray] = []
    for a in range(N):
        for b in range(a + 1, N):
            S = np.zeros((N, N), dtype=np.complex128)
            S[a, b] = 1.0
            S[b, a] = 1.0
            basis.append(S)
            A = np.zeros((N, N), dtype=np.complex128)
            A[a, b] = -1.0j
            A[b, a] = 1.0j
            basis.append(A)
    for l in range(1, N):
        D = np.zeros((N, N), dtype=np.complex128)
        for k in range(l):
            D[k, k] = 1.0
        D[l, l] = -float(l)
        basis.append(np.sqrt(2.0 / (l * (l + 1))) * D)
    return basis


def traceless_pauli_basis(n: int) -> list[np.ndarray]:
    """All 4**n - 1 non-identity Pauli strings on n qubits."""
    return [P for _, P in pauli_basis(n, include_identity=False)]


def build_locally_surjective(n: int, L: int) -> Circuit:
    """L SUNLayers over the full Gell-Mann basis; locally surjective for L >= 1."""
    if L < 1:
        raise ValidationError(f"depth must be >= 1, got {L}")
    N = hilbert_dim(n)
    basis = gell_mann_basis(N)
    return Circuit(n, [SUNLayer(basis) for _ in range(L)])


def build_sun(n: int, L: int) -> Circuit:
    """L SUNLayers over the traceless Pauli-string basis."""
    if L < 1:
        raise ValidationError(f"depth must be >= 1, got {L}")
    basis = traceless_pauli_basis(n)
    return Circuit(n, [SUNLayer(basis) for _ in range(L)])


def build_hardware_efficient(n: int, L: int) -> Circuit:
    """L ProductLayers of RY and RZ rotations plus a nearest-neighbour ZZ entangler.

    Generators use the half-angle convention (H = P/2), so each parameter
    is a standard rotation angle. Parameters per layer: 2n, plus 1 for
    the entangler when n >= 2.
    """
    if L < 1:
        raise ValidationError(f"depth must be >= 1, got {L}")
    hilbert_dim(n)
    gens = [pauli_on(n, {q: "Y"}, 0.5) for q in range(n)]
    gens += [pauli_on(n, {q: "Z"}, 0.5) for q in range(n)]
    if n >= 2:
        zz = sum(pauli_on(n, {q: "Z", q + 1: "Z"}, 0.5) for q in range(n - 1))
        gens.append(np.asarray(zz))
    return Circuit(n, [ProductLayer(gens) for _ in range(L)])


def build_qaoa(edges, L: int, n: int | None = None) -> Circuit:
    """Alternating cost/mixer circuit for a simple undirected graph.

    Cost generator sum_{(a,b)} Z_a Z_b, mixer sum_q X_q; 2L parameters,
    cost layer first in each round.
    """
    if L < 1:
        raise ValidationError(f"depth must be >= 1, got {L}")
    edge_list = [tuple(e) for e in edges]
    seen = set()
    max_vertex = -1
    for e in edge_list:
        if len(e) != 2:
            raise ValidationError(f"edge {e!r} is not a pair")
        a, b = int(e[0]), int(e[1])
        if a < 0 or b < 0:
            raise ValidationError(f"edge {e!r} has a negative vertex")
        if a == b:
            raise ValidationError(f"self-loop {e!r} not allowed in a simple graph")
        key = (min(a, b), max(a, b))
        if key in seen:
            raise ValidationError(f"duplicate edge {e!r}")
        seen.add(key)
        max_vertex = max(max_vertex, a, b)
    if n is None:
        if max_vertex < 0:
            raise ValidationError("cannot infer qubit count from an empty edge set")
        n = max_vertex + 1
    if max_vertex >= n:
        raise ValidationError(f"edge vertex {max_vertex} out of range for n={n}")
    N = hilbert_dim(n)
    cost = np.zeros((N, N), dtype=np.complex128)
    for a, b in edge_list:
        cost += pauli_on(n, {a: "Z", b: "Z"})
    mixer = np.zeros((N, N), dtype=np.complex128)
    for q in range(n):
        mixer += pauli_on(n, {q: "X"})
    layers: list[Layer] = []
    for _ in range(L):
        layers.append(ProductLayer([cost]))
        layers.append(ProductLayer([mixer]))
    return Circuit(n, layers)


def qaoa_cost_operator(edges, n: int) -> np.ndarray:
    """sum_{(a,b)} Z_a Z_b on n qubits (the MaxCut cost observable)."""
    N = hilbert_dim(n)
    out = np.zeros((N, N), dtype=np.complex128)
    for a, b in edges:
        out += pauli_on(n, {int(a): "Z", int(b): "Z"})
    return out


def build_z_only(n: int, L: int) -> Circuit:
    """L single-parameter Z-rotation layers on qubit 0 (a deliberately
    non-surjective ansatz; its rank test reports 1)."""
    if L < 1:
        raise ValidationError(f"depth must be >= 1, got {L}")
    return Circuit(n, [ProductLayer([pauli_on(n, {0: "Z"}, 0.5)]) for _ in range(L)])


def as_square_generator(M) -> np.ndarray:
    """Validate an externally supplied generator matrix."""
    return as_square_matrix(M, "generator")
