"""Target isometries and their logical bases.

A target operation is an isometric map from an ``L``-dimensional input space
to an ``L``-dimensional output space inside the truncated Fock space, stored
as orthonormal basis stacks together with the matrix ``V = Y @ Xdag``.

Builders cover unitaries on a set of Fock levels (inversions, permutations,
seeded random unitaries), preparation of binomial-code states, amplitude-decay
recovery maps with closed-form decayed input states, and logical single-qubit
operations on the binomial or trivial code.
"""

from dataclasses import dataclass, field

import numpy as np

from .linalg import fock_state

__all__ = [
    "TargetOperation",
    "fock_subspace_unitary",
    "random_unitary",
    "random_permutation",
    "binomial_codewords",
    "trivial_codewords",
    "decayed_syndrome_state",
    "state_prep_target",
    "recovery_target",
    "logical_op_target",
    "HADAMARD",
    "PAULI_X",
    "PAULI_Y",
    "SQRT_PAULI_X",
    "ODD_SUPERPOSITION",
    "inversion_matrix",
    "block_inversion_matrix",
]

_ORTHO_TOL = 1e-10

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SQRT_PAULI_X = np.array([[1 - 1j, 1 + 1j], [1 + 1j, 1 - 1j]], dtype=complex) / 2.0

# State-prep coefficients for the "odd superposition" benchmark point.
ODD_SUPERPOSITION = (
    complex(np.sqrt((1.0 + np.sin(0.72104)) / 2.0)),
    complex(np.sqrt((1.0 - np.sin(0.72104)) / 2.0) * np.exp(-1.27275j)),
)


@dataclass(frozen=True, eq=False)
class TargetOperation:
    """Isometry ``V = sum_l |y_l><x_l|`` with orthonormal basis stacks.

    ``input_basis`` and ``output_basis`` are ``(dim, L)`` arrays whose columns
    are the basis kets.  ``matrix`` is the dense ``dim x dim`` representation.
    """

    dim: int
    input_basis: np.ndarray
    output_basis: np.ndarray
    matrix: np.ndarray = field(init=False)

    def __post_init__(self):
        x = np.asarray(self.input_basis, dtype=complex)
        y = np.asarray(self.output_basis, dtype=complex)
        if x.ndim == 1:
            x = x[:, None]
        if y.ndim == 1:
            y = y[:, None]
        if x.shape != y.shape or x.shape[0] != self.dim:
            raise ValueError(
                f"basis stacks must both be (dim, L) = ({self.dim}, L); got {x.shape} and {y.shape}"
            )
        if x.shape[1] < 1:
            raise ValueError("logical dimension must be at least 1")
        for name, basis in (("input", x), ("output", y)):
            gram = basis.conj().T @ basis
            if not np.allclose(gram, np.eye(basis.shape[1]), atol=_ORTHO_TOL):
                raise ValueError(f"{name} basis is not orthonormal within {_ORTHO_TOL}")
        x = x.copy()
        y = y.copy()
        v = y @ x.conj().T
        for arr in (x, y, v):
            arr.flags.writeable = False
        object.__setattr__(self, "input_basis", x)
        object.__setattr__(self, "output_basis", y)
        object.__setattr__(self, "matrix", v)

    @property
    def logical_dim(self) -> int:
        return self.input_basis.shape[1]

    def inverse(self) -> "TargetOperation":
        """The reverse mapping (input and output bases swapped)."""
        return TargetOperation(self.dim, self.output_basis.copy(), self.input_basis.copy())


def _check_unitary(v: np.ndarray, tol: float = _ORTHO_TOL) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    if v.ndim != 2 or v.shape[0] != v.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {v.shape}")
    if not np.allclose(v.conj().T @ v, np.eye(v.shape[0]), atol=tol):
        raise ValueError(f"matrix is not unitary within {tol}")
    return v


def fock_subspace_unitary(v: np.ndarray, levels, dim: int) -> TargetOperation:
    """Target acting as the unitary ``v`` on the listed Fock levels.

    The input basis consists of the Fock kets at ``levels`` (in order); the
    output basis is their image under ``v``.  Covers inversion, block
    inversion, permutations and random unitaries as special cases of ``v``.
    """
    v = _check_unitary(v)
    levels = [int(m) for m in levels]
    if len(set(levels)) != len(levels):
        raise ValueError("Fock levels must be distinct")
    if any(m < 0 or m >= dim for m in levels):
        raise ValueError(f"Fock levels must lie in [0, {dim})")
    if v.shape[0] != len(levels):
        raise ValueError(f"matrix size {v.shape[0]} does not match {len(levels)} levels")
    x = np.stack([fock_state(m, dim) for m in levels], axis=1)
    y = x @ v
    return TargetOperation(dim, x, y)


def random_unitary(n: int, seed: int) -> np.ndarray:
    """Deterministic Haar-like random unitary from a seeded PCG64 stream.

    Diagonalizes a Hermitian matrix with symmetrized standard-normal entries
    and returns its eigenvector matrix.  Each eigenvector is rephased so its
    largest-magnitude entry is real positive, which pins down the otherwise
    solver-dependent phases.
    """
    if n < 1:
        raise ValueError("matrix size must be at least 1")
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    herm = (raw + raw.conj().T) / 2.0
    _, vecs = np.linalg.eigh(herm)
    anchor = np.argmax(np.abs(vecs), axis=0)
    phases = vecs[anchor, np.arange(n)]
    vecs = vecs * (np.abs(phases) / phases)[None, :]
    return vecs


def random_permutation(n: int, seed: int) -> np.ndarray:
    """Deterministic random permutation matrix ``sum_n |p(n)><n|``."""
    if n < 1:
        raise ValueError("matrix size must be at least 1")
    perm = np.random.default_rng(seed).permutation(n)
    mat = np.zeros((n, n), dtype=complex)
    mat[perm, np.arange(n)] = 1.0
    return mat


def inversion_matrix(n: int) -> np.ndarray:
    """Antidiagonal permutation ``|n-1-k><k|`` (level inversion)."""
    return np.eye(n, dtype=complex)[::-1].copy()


def block_inversion_matrix(n: int) -> np.ndarray:
    """Cyclic shift by ``n//2``: ``|mod(k + n//2, n)><k|``."""
    mat = np.zeros((n, n), dtype=complex)
    cols = np.arange(n)
    mat[(cols + n // 2) % n, cols] = 1.0
    return mat


def binomial_codewords(dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Codewords ``(|0> + sqrt(3)|6>)/2`` and ``(sqrt(3)|3> + |9>)/2``."""
    if dim < 10:
        raise ValueError("binomial code needs at least 10 Fock levels")
    b0 = (fock_state(0, dim) + np.sqrt(3.0) * fock_state(6, dim)) / 2.0
    b1 = (np.sqrt(3.0) * fock_state(3, dim) + fock_state(9, dim)) / 2.0
    return b0, b1


def trivial_codewords(dim: int) -> tuple[np.ndarray, np.ndarray]:
    """The two lowest Fock states as a qubit encoding."""
    return fock_state(0, dim), fock_state(1, dim)


def state_prep_target(alpha: complex, beta: complex, dim: int) -> TargetOperation:
    """Preparation of ``alpha|b0> + beta|b1>`` from the vacuum (L = 1)."""
    alpha = complex(alpha)
    beta = complex(beta)
    total = abs(alpha) ** 2 + abs(beta) ** 2
    if abs(total - 1.0) > _ORTHO_TOL:
        raise ValueError(f"|alpha|^2 + |beta|^2 must be 1, got {total:.12g}")
    b0, b1 = binomial_codewords(dim)
    return TargetOperation(dim, fock_state(0, dim), alpha * b0 + beta * b1)


_SYNDROMES = ("identity", "a", "a2")


def decayed_syndrome_state(
    syndrome: str, alpha: complex, beta: complex, gamma_t: float, dim: int
) -> np.ndarray:
    """Normalized post-syndrome state of ``alpha|b0> + beta|b1>`` after
    amplitude decay ``gamma_t`` and 0, 1 or 2 detected photon losses.

    Closed-form amplitudes (no master-equation integration):

    - ``identity``: ``alpha (|0> + sqrt3 e^{-6g}|6>) + beta (sqrt3 e^{-3g}|3> + e^{-9g}|9>)``
    - ``a``:        ``alpha sqrt2 e^{-3g}|5> + beta (|2> + e^{-6g}|8>)``
    - ``a2``:       ``alpha sqrt5 e^{-3g}|4> + beta (|1> + 2 e^{-6g}|7>)``

    each normalized.
    """
    if syndrome not in _SYNDROMES:
        raise ValueError(f"unknown syndrome {syndrome!r}; expected one of {_SYNDROMES}")
    g = float(gamma_t)
    if not np.isfinite(g) or g < 0:
        raise ValueError("decay parameter must be finite and non-negative")
    if dim < 10:
        raise ValueError("decayed code states need at least 10 Fock levels")
    vec = np.zeros(dim, dtype=complex)
    if syndrome == "identity":
        vec[0] = alpha
        vec[6] = alpha * np.sqrt(3.0) * np.exp(-6.0 * g)
        vec[3] = beta * np.sqrt(3.0) * np.exp(-3.0 * g)
        vec[9] = beta * np.exp(-9.0 * g)
    elif syndrome == "a":
        vec[5] = alpha * np.sqrt(2.0) * np.exp(-3.0 * g)
        vec[2] = beta
        vec[8] = beta * np.exp(-6.0 * g)
    else:
        vec[4] = alpha * np.sqrt(5.0) * np.exp(-3.0 * g)
        vec[1] = beta
        vec[7] = beta * 2.0 * np.exp(-6.0 * g)
    return vec / np.linalg.norm(vec)


def recovery_target(syndrome: str, gamma_t: float, dim: int) -> TargetOperation:
    """Error-recovery map for the binomial code (L = 2).

    Sends the two decayed syndrome states back to the undecayed codewords.
    For the ``identity`` syndrome at ``gamma_t = 0`` this is the code-space
    projector.
    """
    x0 = decayed_syndrome_state(syndrome, 1.0, 0.0, gamma_t, dim)
    x1 = decayed_syndrome_state(syndrome, 0.0, 1.0, gamma_t, dim)
    b0, b1 = binomial_codewords(dim)
    return TargetOperation(dim, np.stack([x0, x1], axis=1), np.stack([b0, b1], axis=1))


def logical_op_target(v: np.ndarray, code: str, dim: int) -> TargetOperation:
    """Logical single-qubit unitary ``v`` acting on a cavity code (L = 2)."""
    v = _check_unitary(v)
    if v.shape != (2, 2):
        raise ValueError(f"logical operations are 2x2, got {v.shape}")
    if code == "binomial":
        c0, c1 = binomial_codewords(dim)
    elif code == "trivial":
        c0, c1 = trivial_codewords(dim)
    else:
        raise ValueError(f"unknown code {code!r}; expected 'binomial' or 'trivial'")
    x = np.stack([c0, c1], axis=1)
    return TargetOperation(dim, x, x @ v)
