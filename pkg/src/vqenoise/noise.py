"""Noise models for layered circuits.

Three error families are supported, all attached to layers of a circuit:

* coherent errors: an extra unitary exp(-i eta H_e) applied AFTER the
  layer it is attached to;
* incoherent errors: a mixture-form Kraus channel
  rho -> (1 - p) rho + p sum_k w_k E_k rho E_k^dag
  with probability weights w_k and spectrally bounded operators E_k,
  applied after the layer (and after any coherent error on that layer);
* control errors: a componentwise rescaling of the parameter vector,
  theta -> (1 + eta) * theta, modelling miscalibrated rotation angles.

``GeneralKrausChannel`` covers trace-preserving maps that do not fit
the mixture form (amplitude damping is the canonical case: its Kraus
pair cannot be scaled into probability-weighted contractions). It can
be used in propagation but is rejected by the observable-rewriting
transforms, which rely on the mixture structure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .ansatz import Circuit, ProductLayer, check_theta, layer_unitaries
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

WEIGHT_ATOL = 1e-10
OPERATOR_NORM_ATOL = 1e-10
TRACE_PRESERVATION_ATOL = 1e-8


@dataclass(frozen=True, eq=False, repr=False)
class CoherentError:
    """Unitary error exp(-i angle H) applied after layer ``layer_index`` (1-based)."""

    layer_index: int
    generator: np.ndarray
    angle: float

    def __init__(self, layer_index: int, generator, angle: float):
        j = int(layer_index)
        if j < 1:
            raise ValidationError(f"layer_index must be >= 1, got {layer_index}")
        a = float(angle)
        if not np.isfinite(a):
            raise ValidationError(f"angle must be finite, got {angle!r}")
        object.__setattr__(self, "layer_index", j)
        object.__setattr__(self, "generator", require_hermitian(generator, "error generator"))
        object.__setattr__(self, "angle", a)

    @property
    def matrix(self) -> np.ndarray:
        return hermitian_exp(self.generator, self.angle)

    def __repr__(self) -> str:
        return f"CoherentError(layer={self.layer_index}, angle={self.angle:.6g})"


@dataclass(frozen=True, eq=False, repr=False)
class KrausChannel:
    """Mixture-form channel rho -> (1-p) rho + p sum_k w_k E_k rho E_k^dag.

    Invariants checked at construction: p in [0, 1); weights nonnegative
    and summing to 1 within 1e-10; each operator with spectral norm
    <= 1 + 1e-10; and the induced map trace preserving, which for this
    form is the operator identity (1-p) I + p sum_k w_k E_k^dag E_k = I
    checked entrywise within 1e-8.
    """

    error_prob: float
    weights: tuple[float, ...]
    operators: tuple[np.ndarray, ...]

    def __init__(self, error_prob: float, weights, operators):
        p = float(error_prob)
        if not np.isfinite(p) or not (0.0 <= p < 1.0):
            raise ValidationError(f"error probability must be in [0, 1), got {error_prob!r}")
        w = tuple(float(x) for x in weights)
        ops = tuple(as_square_matrix(E, f"Kraus operator {k}") for k, E in enumerate(operators))
        if len(w) == 0 or len(w) != len(ops):
            raise ValidationError(
                f"need matching nonempty weights and operators, got {len(w)} and {len(ops)}"
            )
        if any(x < -WEIGHT_ATOL for x in w):
            raise ValidationError(f"weights must be nonnegative, got {min(w):.3e}")
        total = sum(w)
        if abs(total - 1.0) > WEIGHT_ATOL:
            raise ValidationError(f"weights must sum to 1 within {WEIGHT_ATOL:.1e}, got {total!r}")
        dim = ops[0].shape[0]
        for k, E in enumerate(ops):
            if E.shape[0] != dim:
                raise ValidationError(f"operator {k} has dimension {E.shape[0]}, expected {dim}")
            norm = float(np.linalg.norm(E, 2))
            if norm > 1.0 + OPERATOR_NORM_ATOL:
                raise ValidationError(
                    f"operator {k} has spectral norm {norm:.12g} > 1 (tolerance {OPERATOR_NORM_ATOL:.1e})"
                )
        gram = (1.0 - p) * np.eye(dim, dtype=np.complex128)
        for wk, E in zip(w, ops):
            gram += p * wk * (E.conj().T @ E)
        defect = float(np.max(np.abs(gram - np.eye(dim))))
        if defect > TRACE_PRESERVATION_ATOL:
            raise ValidationError(
                f"channel is not trace preserving: max |(1-p)I + p sum w E^dag E - I| = {defect:.3e}"
            )
        object.__setattr__(self, "error_prob", p)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "operators", ops)

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]

    def apply(self, rho: np.ndarray) -> np.ndarray:
        out = (1.0 - self.error_prob) * rho
        for wk, E in zip(self.weights, self.operators):
            out = out + (self.error_prob * wk) * (E @ rho @ E.conj().T)
        return out

    def adjoint(self, obs: np.ndarray) -> np.ndarray:
        """Heisenberg-picture action A -> (1-p) A + p sum_k w_k E_k^dag A E_k."""
        out = (1.0 - self.error_prob) * obs
        for wk, E in zip(self.weights, self.operators):
            out = out + (self.error_prob * wk) * (E.conj().T @ obs @ E)
        return out

    def __repr__(self) -> str:
        return f"{type(self).__name__}(p={self.error_prob:.6g}, operators={len(self.operators)})"


@dataclass(frozen=True, eq=False, repr=False)
class GeneralKrausChannel:
    """Trace-preserving channel rho -> sum_k K_k rho K_k^dag.

    No mixture structure is assumed; the completeness relation
    sum_k K_k^dag K_k = I is checked entrywise within 1e-8.
    """

    operators: tuple[np.ndarray, ...]

    def __init__(self, operators):
        ops = tuple(as_square_matrix(K, f"Kraus operator {k}") for k, K in enumerate(operators))
        if len(ops) == 0:
            raise ValidationError("need at least one Kraus operator")
        dim = ops[0].shape[0]
        for k, K in enumerate(ops):
            if K.shape[0] != dim:
                raise ValidationError(f"operator {k} has dimension {K.shape[0]}, expected {dim}")
        gram = sum(K.conj().T @ K for K in ops)
        defect = float(np.max(np.abs(gram - np.eye(dim))))
        if defect > TRACE_PRESERVATION_ATOL:
            raise ValidationError(
                f"Kraus operators do not satisfy sum K^dag K = I: max defect {defect:.3e}"
            )
        object.__setattr__(self, "operators", ops)

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]

    def apply(self, rho: np.ndarray) -> np.ndarray:
        out = np.zeros_like(rho)
        for K in self.operators:
            out = out + K @ rho @ K.conj().T
        return out

    def adjoint(self, obs: np.ndarray) -> np.ndarray:
        out = np.zeros_like(obs)
        for K in self.operators:
            out = out + K.conj().T @ obs @ K
        return out

    def __repr__(self) -> str:
        return f"GeneralKrausChannel(dim={self.dim}, operators={len(self.operators)})"


Channel = KrausChannel | GeneralKrausChannel


def apply_channel(channel: Channel, rho) -> np.ndarray:
    """Apply a validated channel to a density matrix."""
    if not isinstance(channel, (KrausChannel, GeneralKrausChannel)):
        raise ValidationError(f"not a channel: {channel!r}")
    r = require_density_matrix(rho)
    if r.shape[0] != channel.dim:
        raise ValidationError(
            f"state dimension {r.shape[0]} does not match channel dimension {channel.dim}"
        )
    return channel.apply(r)


# ---------------------------------------------------------------------------
# Standard channels
# ---------------------------------------------------------------------------


def bit_flip_channel(p: float, n: int = 1, qubit: int = 0) -> KrausChannel:
    """Bit flip: X applied on one qubit with probability p."""
    X = pauli_on(n, {qubit: "X"})
    return KrausChannel(p, (1.0,), (X,))


def phase_flip_channel(p: float, n: int = 1, qubit: int = 0) -> KrausChannel:
    """Phase flip: Z applied on one qubit with probability p."""
    Z = pauli_on(n, {qubit: "Z"})
    return KrausChannel(p, (1.0,), (Z,))


def depolarizing_channel(p: float, n: int = 1) -> KrausChannel:
    """Depolarizing channel rho -> (1-p) rho + p I/N, in mixture form.

    Realized as the uniform mixture of all 4**n Pauli strings, whose
    twirl satisfies sum_P P rho P / 4**n = Tr[rho] I / 2**n exactly.
    """
    hilbert_dim(n)
    ops = tuple(P for _, P in pauli_basis(n, include_identity=True))
    w = tuple([1.0 / len(ops)] * len(ops))
    return KrausChannel(p, w, ops)


def amplitude_damping_channel(gamma: float, n: int = 1, qubit: int = 0) -> GeneralKrausChannel:
    """Amplitude damping of strength gamma on one qubit.

    Built on the general Kraus form because the damping pair cannot be
    expressed as probability-weighted contractions.
    """
    g = float(gamma)
    if not (0.0 <= g <= 1.0):
        raise ValidationError(f"damping strength must be in [0, 1], got {gamma!r}")
    K0 = np.array([[1.0, 0.0], [0.0, np.sqrt(1.0 - g)]], dtype=np.complex128)
    K1 = np.array([[0.0, np.sqrt(g)], [0.0, 0.0]], dtype=np.complex128)
    if n == 1:
        return GeneralKrausChannel((K0, K1))
    hilbert_dim(n)
    if not (0 <= qubit < n):
        raise ValidationError(f"qubit index {qubit} out of range for n={n}")
    left = np.eye(2 ** qubit, dtype=np.complex128)
    right = np.eye(2 ** (n - qubit - 1), dtype=np.complex128)

    def embed(K):
        return np.kron(np.kron(left, K), right)

    return GeneralKrausChannel((embed(K0), embed(K1)))


# ---------------------------------------------------------------------------
# Control errors and noise models
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False, repr=False)
class ControlErrorSpec:
    """Relative parameter miscalibration theta -> (1 + eta) * theta."""

    relative_errors: np.ndarray

    def __init__(self, relative_errors):
        eta = np.asarray(relative_errors, dtype=np.float64)
        if eta.ndim != 1 or eta.size == 0:
            raise ValidationError(f"relative errors must be a nonempty vector, got shape {eta.shape}")
        if not np.all(np.isfinite(eta)):
            raise ValidationError("relative errors contain non-finite entries")
        if np.any(eta <= -1.0):
            raise ValidationError(
                f"relative errors must be > -1 (smallest is {float(eta.min()):.6g})"
            )
        frozen = eta.copy()
        frozen.flags.writeable = False
        object.__setattr__(self, "relative_errors", frozen)

    @property
    def param_count(self) -> int:
        return int(self.relative_errors.size)

    def __repr__(self) -> str:
        return f"ControlErrorSpec(params={self.param_count}, max|eta|={float(np.abs(self.relative_errors).max()):.6g})"


def control_error_cost_map(theta, spec: ControlErrorSpec) -> np.ndarray:
    """Componentwise map theta -> (1 + eta) * theta."""
    t = np.asarray(theta, dtype=np.float64)
    if t.shape != (spec.param_count,):
        raise ValidationError(
            f"theta has shape {t.shape}, expected ({spec.param_count},)"
        )
    return (1.0 + spec.relative_errors) * t


@dataclass(frozen=True, eq=False, repr=False)
class NoiseModel:
    """Coherent errors, per-layer channels, and an optional control error.

    ``channels`` maps 1-based layer indices to a channel applied after
    that layer. Control errors rescale every parameter before the
    unitaries are formed and are exclusive with the other families
    unless ``allow_mixed`` is set.
    """

    coherent: tuple[CoherentError, ...]
    channels: Mapping[int, Channel]
    control: ControlErrorSpec | None
    allow_mixed: bool

    def __init__(self, coherent=(), channels=None, control=None, allow_mixed=False):
        coh = tuple(coherent)
        for e in coh:
            if not isinstance(e, CoherentError):
                raise ValidationError(f"not a CoherentError: {e!r}")
        chan: dict[int, Channel] = {}
        for j, c in (channels or {}).items():
            idx = int(j)
            if idx < 1:
                raise ValidationError(f"channel layer index must be >= 1, got {j}")
            if not isinstance(c, (KrausChannel, GeneralKrausChannel)):
                raise ValidationError(f"not a channel at layer {j}: {c!r}")
            chan[idx] = c
        if control is not None and not isinstance(control, ControlErrorSpec):
            raise ValidationError(f"not a ControlErrorSpec: {control!r}")
        if control is not None and (coh or chan) and not allow_mixed:
            raise ValidationError(
                "control errors are exclusive with layer errors; pass allow_mixed=True to combine"
            )
        object.__setattr__(self, "coherent", coh)
        object.__setattr__(self, "channels", chan)
        object.__setattr__(self, "control", control)
        object.__setattr__(self, "allow_mixed", bool(allow_mixed))

    @property
    def is_trivial(self) -> bool:
        return not self.coherent and not self.channels and self.control is None

    def __repr__(self) -> str:
        return (
            f"NoiseModel(coherent={len(self.coherent)}, channels={sorted(self.channels)}, "
            f"control={self.control is not None})"
        )


def check_noise_against_circuit(noise: NoiseModel, circuit: Circuit) -> None:
    """Validate layer indices, dimensions and the control-error restriction."""
    L = circuit.depth
    for e in noise.coherent:
        if e.layer_index > L:
            raise ValidationError(
                f"coherent error attached to layer {e.layer_index}, circuit has depth {L}"
            )
        if e.generator.shape[0] != circuit.dim:
            raise ValidationError(
                f"coherent error at layer {e.layer_index} has dimension "
                f"{e.generator.shape[0]}, circuit dimension is {circuit.dim}"
            )
    for j, c in noise.channels.items():
        if j > L:
            raise ValidationError(f"channel attached to layer {j}, circuit has depth {L}")
        if c.dim != circuit.dim:
            raise ValidationError(
                f"channel at layer {j} has dimension {c.dim}, circuit dimension is {circuit.dim}"
            )
    if noise.control is not None:
        if noise.control.param_count != circuit.total_params:
            raise ValidationError(
                f"control error covers {noise.control.param_count} parameters, "
                f"circuit has {circuit.total_params}"
            )


def coherent_errors_by_layer(noise: NoiseModel) -> dict[int, list[CoherentError]]:
    """Group coherent errors by layer, preserving their listed order."""
    grouped: dict[int, list[CoherentError]] = {}
    for e in noise.coherent:
        grouped.setdefault(e.layer_index, []).append(e)
    return grouped


def noisy_apply(circuit: Circuit, theta, noise: NoiseModel, rho0) -> np.ndarray:
    """Propagate rho0 through the circuit with the noise model interleaved.

    Per layer j: apply U_j, then any coherent errors attached to j (in
    their listed order), then the channel attached to j. Control errors
    rescale theta before propagation.
    """
    check_noise_against_circuit(noise, circuit)
    t = check_theta(circuit, theta)
    if noise.control is not None:
        t = control_error_cost_map(t, noise.control)
    rho = require_density_matrix(rho0, "input state")
    if rho.shape[0] != circuit.dim:
        raise ValidationError(
            f"input state dimension {rho.shape[0]} does not match circuit dimension {circuit.dim}"
        )
    grouped = coherent_errors_by_layer(noise)
    rho = np.array(rho)
    for j, U in enumerate(layer_unitaries(circuit, t), start=1):
        rho = U @ rho @ U.conj().T
        for e in grouped.get(j, ()):
            W = e.matrix
            rho = W @ rho @ W.conj().T
        channel = noise.channels.get(j)
        if channel is not None:
            rho = channel.apply(rho)
    return rho


def splice_coherent_errors(circuit: Circuit, theta, noise: NoiseModel):
    """Rewrite coherent errors as fixed extra layers.

    Returns (circuit2, theta2) such that propagating theta2 through
    circuit2 cleanly equals noisy_apply with only the coherent part of
    the noise model. Each error becomes a single-generator ProductLayer
    whose parameter is pinned to the error angle.
    """
    if noise.channels or noise.control is not None:
        raise ValidationError("splice_coherent_errors handles coherent-only noise models")
    check_noise_against_circuit(noise, circuit)
    t = check_theta(circuit, theta)
    grouped = coherent_errors_by_layer(noise)
    layers = []
    theta2: list[float] = []
    pos = 0
    for j, layer in enumerate(circuit.layers, start=1):
        layers.append(layer)
        theta2.extend(t[pos : pos + layer.param_count])
        pos += layer.param_count
        for e in grouped.get(j, ()):
            layers.append(ProductLayer([e.generator]))
            theta2.append(e.angle)
    return Circuit(circuit.n, layers), np.array(theta2)


def bit_flip_prob_for_epsilon(epsilon: float, L: int) -> float:
    """Per-layer bit-flip probability whose depth-L composition has
    perturbation level epsilon: p = 1 - (1 / (1 + epsilon))**(1/L)."""
    e = float(epsilon)
    if not np.isfinite(e) or e < 0.0:
        raise ValidationError(f"epsilon must be >= 0, got {epsilon!r}")
    if int(L) < 1:
        raise ValidationError(f"depth must be >= 1, got {L}")
    return 1.0 - (1.0 / (1.0 + e)) ** (1.0 / int(L))
