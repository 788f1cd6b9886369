"""Rewriting circuit noise as perturbations of the measured observable.

Errors interleaved with circuit layers can be moved past the remaining
layers by conjugation: an error at layer j commutes through the strict
suffix C_j = U_L ... U_{j+1} (identity for j = L) without changing the
output state. From there:

* a coherent error exp(-i eta H_e) becomes exp(-i eta C_j H_e C_j^dag)
  applied after the full circuit (exact, any eta);
* to first order in eta the post-circuit errors are equivalent to
  measuring O + epsilon * Otilde with epsilon = max_j |eta_j| and
  Otilde = i sum_j (eta_j / epsilon) [C_j H_{e,j} C_j^dag, O];
* mixture-form channels compose into a single post-circuit mixture
  channel with error probability p = 1 - prod_j (1 - p_j) (exact);
* a post-circuit mixture channel is exactly a rescaled measurement of
  a perturbed observable:
  Tr[O N(rho)] = (1 - p) (Tr[O rho] + eps Tr[Otilde rho]),
  eps = p / (1 - p), Otilde = sum_k w_k E_k^dag O E_k.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .ansatz import Circuit, apply, check_theta, layer_unitaries
from .core import (
    ValidationError,
    commutator,
    expectation,
    hermitian_exp,
    require_hermitian,
)
from .noise import (
    CoherentError,
    GeneralKrausChannel,
    KrausChannel,
    NoiseModel,
    check_noise_against_circuit,
)

# Composed pushed channels beyond this many operators are refused rather
# than silently truncated.
MAX_PUSHED_OPERATORS = 4096


def suffix_unitary(circuit: Circuit, theta, j: int) -> np.ndarray:
    """Product U_L ... U_j of layers j..L (1-based); identity for j = L + 1."""
    check_theta(circuit, theta)
    L = circuit.depth
    if not (1 <= j <= L + 1):
        raise ValidationError(f"suffix start {j} out of range for depth {L}")
    Us = layer_unitaries(circuit, theta)
    V = np.eye(circuit.dim, dtype=np.complex128)
    for U in Us[j - 1 :]:
        V = U @ V
    return V


@dataclass(frozen=True, eq=False, repr=False)
class PushedCoherentError:
    """A coherent error conjugated to the end of the circuit."""

    angle: float
    generator: np.ndarray
    source_layer: int

    @property
    def matrix(self) -> np.ndarray:
        return hermitian_exp(self.generator, self.angle)

    def __repr__(self) -> str:
        return f"PushedCoherentError(source_layer={self.source_layer}, angle={self.angle:.6g})"


def push_coherent_to_last(circuit: Circuit, theta, errors) -> list[PushedCoherentError]:
    """Move coherent errors past the layers above them.

    An error at layer j (applied after U_j) is conjugated by the strict
    suffix C_j = U_L ... U_{j+1}; its generator becomes C_j H_e C_j^dag
    with the same spectrum and the same angle. The returned list is in
    application order after the clean circuit: ascending source layer,
    original order within a layer. Applying them in that order to the
    clean output reproduces the interleaved propagation exactly.
    """
    errs = list(errors)
    if not errs:
        return []
    for e in errs:
        if not isinstance(e, CoherentError):
            raise ValidationError(f"not a CoherentError: {e!r}")
    check_noise_against_circuit(NoiseModel(coherent=errs), circuit)
    check_theta(circuit, theta)
    Us = layer_unitaries(circuit, theta)
    L = circuit.depth
    # Strict suffixes: C[j] = U_L ... U_{j+1}, so C[L] = I.
    C: dict[int, np.ndarray] = {L: np.eye(circuit.dim, dtype=np.complex128)}
    for j in range(L - 1, 0, -1):
        C[j] = C[j + 1] @ Us[j]
    order = sorted(range(len(errs)), key=lambda i: (errs[i].layer_index, i))
    pushed = []
    for i in order:
        e = errs[i]
        Cj = C[e.layer_index]
        Hhat = Cj @ e.generator @ Cj.conj().T
        pushed.append(
            PushedCoherentError(angle=e.angle, generator=Hhat, source_layer=e.layer_index)
        )
    return pushed


def apply_pushed_coherent(circuit: Circuit, theta, pushed, rho0) -> np.ndarray:
    """Clean propagation followed by the pushed error unitaries in order."""
    rho = apply(circuit, theta, rho0)
    for err in pushed:
        W = err.matrix
        rho = W @ rho @ W.conj().T
    return rho


# ---------------------------------------------------------------------------
# Observable rewriting
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False, repr=False)
class PerturbedObservableForm:
    """Noisy cost written as scale * (Tr[O rho] + level * Tr[Otilde(theta) rho]).

    ``perturbation`` maps a parameter vector to the Hermitian Otilde at
    that point; ``constant`` records whether it is actually
    theta-independent (needed by consumers that assume a fixed
    perturbed observable).
    """

    base: np.ndarray
    perturbation: Callable[[np.ndarray], np.ndarray]
    level: float
    scale: float
    constant: bool

    def __post_init__(self):
        if not np.isfinite(self.level) or self.level < 0.0:
            raise ValidationError(
                f"perturbation level must be finite and >= 0, got {self.level}"
            )
        if not np.isfinite(self.scale):
            raise ValidationError(f"cost scale must be finite, got {self.scale}")

    def observable_at(self, theta) -> np.ndarray:
        """O + level * Otilde(theta)."""
        return self.base + self.level * self.perturbation(theta)

    def __repr__(self) -> str:
        return (
            f"PerturbedObservableForm(level={self.level:.6g}, scale={self.scale:.6g}, "
            f"constant={self.constant})"
        )


def first_order_observable(O, circuit: Circuit, theta, errors) -> PerturbedObservableForm:
    """First-order rewriting of coherent errors as an observable shift.

    With pushed generators Hhat_j and epsilon = max_j |eta_j|,
    Otilde(theta) = i sum_j (eta_j / epsilon) [Hhat_j(theta), O], which
    is Hermitian. The rewriting satisfies
    noisy cost = clean cost + epsilon Tr[Otilde rho] + O(epsilon^2);
    the quadratic remainder is the caller's to bound.
    """
    base = require_hermitian(O, "observable")
    if base.shape[0] != circuit.dim:
        raise ValidationError(
            f"observable dimension {base.shape[0]} does not match circuit dimension {circuit.dim}"
        )
    errs = list(errors)
    for e in errs:
        if not isinstance(e, CoherentError):
            raise ValidationError(f"not a CoherentError: {e!r}")
    check_noise_against_circuit(NoiseModel(coherent=errs), circuit)
    check_theta(circuit, theta)
    level = max((abs(e.angle) for e in errs), default=0.0)
    if level == 0.0:
        zero = np.zeros_like(base)

        def no_perturbation(_theta) -> np.ndarray:
            return zero

        return PerturbedObservableForm(
            base=base, perturbation=no_perturbation, level=0.0, scale=1.0, constant=True
        )

    weights = [e.angle / level for e in errs]
    # The perturbation is theta-independent only when every error sits on
    # the last layer (trivial conjugation).
    const = all(e.layer_index == circuit.depth for e in errs)

    def perturbation(theta_eval) -> np.ndarray:
        Us = layer_unitaries(circuit, theta_eval)
        L = circuit.depth
        C: dict[int, np.ndarray] = {L: np.eye(circuit.dim, dtype=np.complex128)}
        for j in range(L - 1, 0, -1):
            C[j] = C[j + 1] @ Us[j]
        acc = np.zeros_like(base)
        for w, e in zip(weights, errs):
            Cj = C[e.layer_index]
            Hhat = Cj @ e.generator @ Cj.conj().T
            acc = acc + w * (1j * commutator(Hhat, base))
        return 0.5 * (acc + acc.conj().T)

    return PerturbedObservableForm(
        base=base, perturbation=perturbation, level=level, scale=1.0, constant=const
    )


def incoherent_to_observable(O, channel: KrausChannel) -> PerturbedObservableForm:
    """Exact rewriting of a post-circuit mixture channel.

    Tr[O N(rho)] = (1-p) (Tr[O rho] + eps Tr[Otilde rho]) with
    eps = p / (1-p) and Otilde = sum_k w_k E_k^dag O E_k. Exact for
    every state, not only to first order.
    """
    base = require_hermitian(O, "observable")
    if isinstance(channel, GeneralKrausChannel):
        raise ValidationError(
            "observable rewriting requires the mixture form; general Kraus channels "
            "carry no error probability to factor out"
        )
    if not isinstance(channel, KrausChannel):
        raise ValidationError(f"not a KrausChannel: {channel!r}")
    if channel.dim != base.shape[0]:
        raise ValidationError(
            f"channel dimension {channel.dim} does not match observable dimension {base.shape[0]}"
        )
    p = channel.error_prob
    if p >= 1.0:
        raise ValidationError(f"perturbation level diverges as p -> 1 (got p={p})")
    level = p / (1.0 - p)
    acc = np.zeros_like(base)
    for wk, E in zip(channel.weights, channel.operators):
        acc = acc + wk * (E.conj().T @ base @ E)
    otilde = 0.5 * (acc + acc.conj().T)

    def perturbation(_theta) -> np.ndarray:
        return otilde

    return PerturbedObservableForm(
        base=base, perturbation=perturbation, level=level, scale=1.0 - p, constant=True
    )


def first_order_cost(form: PerturbedObservableForm, circuit: Circuit, theta, rho0) -> float:
    """scale * (Tr[O rho(theta)] + level * Tr[Otilde(theta) rho(theta)])."""
    rho = apply(circuit, theta, rho0)
    t = check_theta(circuit, theta)
    val = expectation(form.base, rho)
    if form.level != 0.0:
        val += form.level * expectation(form.perturbation(t), rho)
    return form.scale * val


# ---------------------------------------------------------------------------
# Channel pushing
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False, repr=False)
class PushedChannel(KrausChannel):
    """Composition of per-layer mixture channels pushed past the circuit.

    Satisfies every KrausChannel invariant; additionally records the
    per-layer error probabilities, with
    error_prob = 1 - prod_j (1 - p_j).
    """

    layer_probs: tuple[float, ...]

    def __init__(self, error_prob, weights, operators, layer_probs):
        KrausChannel.__init__(self, error_prob, weights, operators)
        probs = tuple(float(p) for p in layer_probs)
        expected = 1.0 - float(np.prod([1.0 - p for p in probs])) if probs else 0.0
        if abs(expected - self.error_prob) > 1e-12:
            raise ValidationError(
                f"composed error probability {self.error_prob!r} does not match "
                f"1 - prod(1 - p_j) = {expected!r}"
            )
        object.__setattr__(self, "layer_probs", probs)


def push_channel_to_last(circuit: Circuit, theta, noise: NoiseModel) -> PushedChannel:
    """Compose the noise model's mixture channels into one post-circuit channel.

    Each channel at layer j is conjugated by the strict suffix
    C_j = U_L ... U_{j+1} (operator spectra and weights unchanged) and
    the conjugated channels are composed in layer order. The result is
    a single mixture channel applied after the clean circuit, equal to
    the interleaved propagation exactly.
    """
    check_noise_against_circuit(noise, circuit)
    check_theta(circuit, theta)
    if noise.coherent or noise.control is not None:
        raise ValidationError("push_channel_to_last handles channel-only noise models")
    for j, c in noise.channels.items():
        if isinstance(c, GeneralKrausChannel):
            raise ValidationError(
                f"channel at layer {j} is not in mixture form; it cannot be pushed"
            )
    N = circuit.dim
    eye = np.eye(N, dtype=np.complex128)
    if not noise.channels:
        return PushedChannel(0.0, (1.0,), (eye,), ())

    Us = layer_unitaries(circuit, theta)
    L = circuit.depth
    C: dict[int, np.ndarray] = {L: eye}
    for j in range(L - 1, 0, -1):
        C[j] = C[j + 1] @ Us[j]

    # Running mixture: survival probability q = prod (1 - p_j) plus terms
    # (mass, operator) with total mass 1 - q.
    q = 1.0
    terms: list[tuple[float, np.ndarray]] = []
    layer_probs: list[float] = []
    for j in sorted(noise.channels):
        channel = noise.channels[j]
        p = channel.error_prob
        layer_probs.append(p)
        Cj = C[j]
        ops = [Cj @ E @ Cj.conj().T for E in channel.operators]
        new_terms: list[tuple[float, np.ndarray]] = []
        # Existing error terms survive this layer's channel with prob 1 - p.
        for mass, T in terms:
            new_terms.append(((1.0 - p) * mass, T))
        for wk, Fk in zip(channel.weights, ops):
            # This layer fires on the so-far-unperturbed branch ...
            new_terms.append((p * wk * q, Fk))
            # ... or on top of an earlier error term.
            for mass, T in terms:
                new_terms.append((p * wk * mass, Fk @ T))
        terms = [(m, T) for m, T in new_terms if m > 0.0]
        q *= 1.0 - p
        if len(terms) > MAX_PUSHED_OPERATORS:
            raise ValidationError(
                f"pushed channel would need {len(terms)} operators "
                f"(cap {MAX_PUSHED_OPERATORS})"
            )
    p_total = 1.0 - q
    if p_total <= 0.0 or not terms:
        return PushedChannel(0.0, (1.0,), (eye,), tuple(layer_probs))
    weights = tuple(m / p_total for m, _ in terms)
    operators = tuple(T for _, T in terms)
    return PushedChannel(p_total, weights, operators, tuple(layer_probs))


def noise_to_observable_form(O, circuit: Circuit, noise: NoiseModel) -> PerturbedObservableForm:
    """Channel noise as a perturbed observable, composing the pushes.

    Combines push_channel_to_last (exact composition past the circuit)
    with the mixture rewriting, so
    noisy cost(theta) = scale * (Tr[O rho(theta)] + level * Tr[Otilde(theta) rho(theta)])
    exactly. The perturbation depends on theta whenever some channel
    sits below the last layer.
    """
    base = require_hermitian(O, "observable")
    check_noise_against_circuit(noise, circuit)
    if noise.coherent or noise.control is not None:
        raise ValidationError("noise_to_observable_form handles channel-only noise models")
    probs = [noise.channels[j].error_prob for j in sorted(noise.channels)]
    p_total = 1.0 - float(np.prod([1.0 - p for p in probs])) if probs else 0.0
    if p_total == 0.0:
        zero = np.zeros_like(base)

        def no_perturbation(_theta) -> np.ndarray:
            return zero

        return PerturbedObservableForm(
            base=base, perturbation=no_perturbation, level=0.0, scale=1.0, constant=True
        )
    level = p_total / (1.0 - p_total)
    const = all(j == circuit.depth for j in noise.channels)

    def perturbation(theta_eval) -> np.ndarray:
        pushed = push_channel_to_last(circuit, theta_eval, noise)
        acc = np.zeros_like(base)
        for wk, E in zip(pushed.weights, pushed.operators):
            acc = acc + wk * (E.conj().T @ base @ E)
        return 0.5 * (acc + acc.conj().T)

    return PerturbedObservableForm(
        base=base, perturbation=perturbation, level=level, scale=1.0 - p_total, constant=const
    )


def perturbation_level_for_depth(p: float, L: int) -> float:
    """Perturbation level of depth-L per-layer noise: (1-p)**(-L) - 1.

    Exact inverse of bit_flip_prob_for_epsilon: feeding the returned
    epsilon back gives p again.
    """
    prob = float(p)
    if not np.isfinite(prob) or not (0.0 <= prob < 1.0):
        raise ValidationError(f"probability must be in [0, 1), got {p!r}")
    depth = int(L)
    if depth < 0:
        raise ValidationError(f"depth must be >= 0, got {L}")
    return (1.0 - prob) ** (-depth) - 1.0
