"""Dense complex linear algebra for small n-qubit systems.

Conventions used throughout the package:

* operators and states are plain numpy ``complex128`` arrays of shape
  ``(N, N)`` with ``N = 2**n`` for ``n`` qubits;
* qubit 0 is the leftmost tensor factor, i.e. the most significant bit
  of the computational-basis index;
* validation is absolute, on the largest offending entry, with the
  module-level tolerances below. Validators return a read-only
  ``complex128`` copy so validated objects behave as immutable values.

Everything is dense and eigendecomposition-based; the intended regime is
n <= 5 (N <= 32), where exact linear algebra is cheap.
"""

from __future__ import annotations

import numpy as np

HERMITIAN_ATOL = 1e-10
UNITARY_ATOL = 1e-10
TRACE_ATOL = 1e-10
EIGENVALUE_ATOL = 1e-8

MAX_QUBITS_TESTED = 5


class ValidationError(ValueError):
    """An operator, state or configuration failed a structural invariant."""


def hilbert_dim(n: int) -> int:
    """Hilbert-space dimension 2**n for an n-qubit register, n >= 1."""
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
        raise ValidationError(f"qubit count must be an integer, got {n!r}")
    if n < 1:
        raise ValidationError(f"qubit count must be >= 1, got {n}")
    return 2 ** int(n)


def _frozen(M: np.ndarray) -> np.ndarray:
    out = np.array(M, dtype=np.complex128, copy=True)
    out.flags.writeable = False
    return out


def as_square_matrix(M, name: str = "matrix") -> np.ndarray:
    """Coerce to a square complex128 array; raise ValidationError otherwise."""
    A = np.asarray(M)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {A.shape}")
    if A.shape[0] == 0:
        raise ValidationError(f"{name} must be non-empty")
    if not np.all(np.isfinite(A.real)) or not np.all(np.isfinite(A.imag)):
        raise ValidationError(f"{name} contains non-finite entries")
    return A.astype(np.complex128, copy=False)


def _max_entry(M: np.ndarray) -> tuple[float, tuple[int, int]]:
    """Largest-magnitude entry of M and its index."""
    flat = int(np.argmax(np.abs(M)))
    idx = np.unravel_index(flat, M.shape)
    return float(np.abs(M[idx])), (int(idx[0]), int(idx[1]))


def hermitian_defect(M: np.ndarray) -> float:
    """max |M - M^dag| over entries."""
    A = as_square_matrix(M)
    return _max_entry(A - A.conj().T)[0]


def is_hermitian(M, atol: float = HERMITIAN_ATOL) -> bool:
    try:
        A = as_square_matrix(M)
    except ValidationError:
        return False
    return hermitian_defect(A) <= atol


def require_hermitian(M, name: str = "operator", atol: float = HERMITIAN_ATOL) -> np.ndarray:
    """Validate Hermiticity entrywise; return a read-only complex copy."""
    A = as_square_matrix(M, name)
    defect = A - A.conj().T
    worst, idx = _max_entry(defect)
    if worst > atol:
        raise ValidationError(
            f"{name} is not Hermitian: max asymmetry {worst:.3e} at entry {idx} "
            f"(tolerance {atol:.1e})"
        )
    return _frozen(A)


def require_unitary(U, name: str = "unitary", atol: float = UNITARY_ATOL) -> np.ndarray:
    """Validate U^dag U = I entrywise; return a read-only complex copy."""
    A = as_square_matrix(U, name)
    gram = A.conj().T @ A
    worst, idx = _max_entry(gram - np.eye(A.shape[0]))
    if worst > atol:
        raise ValidationError(
            f"{name} is not unitary: max |U^dag U - I| = {worst:.3e} at entry {idx} "
            f"(tolerance {atol:.1e})"
        )
    return _frozen(A)


def require_density_matrix(rho, name: str = "density matrix") -> np.ndarray:
    """Validate Hermiticity, unit trace and positivity; return read-only copy."""
    A = as_square_matrix(rho, name)
    defect, idx = _max_entry(A - A.conj().T)
    if defect > HERMITIAN_ATOL:
        raise ValidationError(
            f"{name} is not Hermitian: max asymmetry {defect:.3e} at entry {idx}"
        )
    tr = complex(np.trace(A))
    if abs(tr - 1.0) > TRACE_ATOL:
        raise ValidationError(f"{name} has trace {tr:.12g}, expected 1 within {TRACE_ATOL:.1e}")
    lo = float(np.linalg.eigvalsh(0.5 * (A + A.conj().T))[0])
    if lo < -EIGENVALUE_ATOL:
        raise ValidationError(
            f"{name} is not positive semidefinite: smallest eigenvalue {lo:.3e} "
            f"(tolerance {-EIGENVALUE_ATOL:.1e})"
        )
    return _frozen(A)


# ---------------------------------------------------------------------------
# Pauli strings and standard states
# ---------------------------------------------------------------------------

PAULIS: dict[str, np.ndarray] = {
    "I": _frozen(np.eye(2)),
    "X": _frozen(np.array([[0.0, 1.0], [1.0, 0.0]])),
    "Y": _frozen(np.array([[0.0, -1.0j], [1.0j, 0.0]])),
    "Z": _frozen(np.array([[1.0, 0.0], [0.0, -1.0]])),
}


def pauli_string(letters: str, coeff: float = 1.0) -> np.ndarray:
    """coeff * P_1 x ... x P_n for a string over {I, X, Y, Z}.

    Letter 0 acts on qubit 0 (the leftmost tensor factor).
    """
    if not isinstance(letters, str) or len(letters) == 0:
        raise ValidationError(f"Pauli string must be a non-empty str, got {letters!r}")
    bad = [c for c in letters if c not in PAULIS]
    if bad:
        raise ValidationError(f"unknown Pauli letter {bad[0]!r} in {letters!r}")
    c = complex(coeff)
    if abs(c.imag) > HERMITIAN_ATOL:
        raise ValidationError(f"Pauli coefficient must be real, got {coeff!r}")
    out = np.array([[c.real]], dtype=np.complex128)
    for letter in letters:
        out = np.kron(out, PAULIS[letter])
    return out


def pauli_on(n: int, ops: dict[int, str], coeff: float = 1.0) -> np.ndarray:
    """Pauli string on n qubits acting as ops[q] on qubit q and I elsewhere."""
    hilbert_dim(n)
    letters = ["I"] * n
    for q, letter in ops.items():
        if not (0 <= q < n):
            raise ValidationError(f"qubit index {q} out of range for n={n}")
        letters[q] = letter
    return pauli_string("".join(letters), coeff)


def pauli_basis(n: int, include_identity: bool = True) -> list[tuple[str, np.ndarray]]:
    """All 4**n Pauli strings on n qubits as (label, matrix) pairs."""
    hilbert_dim(n)
    labels = [""]
    for _ in range(n):
        labels = [s + c for s in labels for c in "IXYZ"]
    pairs = [(s, pauli_string(s)) for s in labels]
    if not include_identity:
        pairs = [(s, P) for s, P in pairs if s != "I" * n]
    return pairs


def basis_state(n: int, index: int = 0) -> np.ndarray:
    """Computational-basis density matrix |index><index| on n qubits."""
    N = hilbert_dim(n)
    if not (0 <= index < N):
        raise ValidationError(f"basis index {index} out of range for n={n}")
    rho = np.zeros((N, N), dtype=np.complex128)
    rho[index, index] = 1.0
    return rho


def plus_state(n: int) -> np.ndarray:
    """|+...+><+...+| on n qubits."""
    N = hilbert_dim(n)
    v = np.full(N, 1.0 / np.sqrt(N), dtype=np.complex128)
    return np.outer(v, v.conj())


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def hermitian_exp(H, scale: float = 1.0) -> np.ndarray:
    """exp(-i * scale * H) for Hermitian H, via eigendecomposition.

    Unitary to machine precision for any real scale; no Pade scaling
    issues for large ||scale * H||.
    """
    A = require_hermitian(H, "exponent generator")
    s = float(scale)
    if not np.isfinite(s):
        raise ValidationError(f"scale must be finite, got {scale!r}")
    lam, V = np.linalg.eigh(A)
    phases = np.exp(-1j * s * lam)
    return (V * phases) @ V.conj().T


def expectation(O, rho) -> float:
    """Re Tr[O rho] for Hermitian O and density matrix rho.

    The imaginary part is a numerical artifact; it is checked to be
    below 1e-10 (relative to the operator scale) and discarded.
    """
    A = require_hermitian(O, "observable")
    r = require_density_matrix(rho)
    if A.shape != r.shape:
        raise ValidationError(f"dimension mismatch: O is {A.shape}, rho is {r.shape}")
    val = complex(np.trace(A @ r))
    scale = max(1.0, float(np.abs(A).max()))
    if abs(val.imag) > 1e-10 * scale:
        raise ValidationError(f"expectation has imaginary part {val.imag:.3e}")
    return float(val.real)


def commutator(A, B) -> np.ndarray:
    """[A, B] = AB - BA."""
    X = as_square_matrix(A, "A")
    Y = as_square_matrix(B, "B")
    if X.shape != Y.shape:
        raise ValidationError(f"dimension mismatch: {X.shape} vs {Y.shape}")
    return X @ Y - Y @ X


def hs_inner(A, B) -> complex:
    """Hilbert-Schmidt inner product <A, B> = Tr[A^dag B]."""
    X = as_square_matrix(A, "A")
    Y = as_square_matrix(B, "B")
    if X.shape != Y.shape:
        raise ValidationError(f"dimension mismatch: {X.shape} vs {Y.shape}")
    return complex(np.sum(X.conj() * Y))


def random_hermitian(n: int, seed: int) -> np.ndarray:
    """Seeded random Hermitian operator (A + A^dag)/2, A standard complex Gaussian.

    Bit-for-bit reproducible for a given (n, seed).
    """
    N = hilbert_dim(n)
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    return 0.5 * (A + A.conj().T)


def ground_energy(O) -> float:
    """Smallest eigenvalue of a Hermitian operator."""
    A = require_hermitian(O, "observable")
    return float(np.linalg.eigvalsh(A)[0])
