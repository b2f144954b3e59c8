"""Operators and states on a truncated Fock space.

Everything in this module works with dense numpy arrays: states are complex
vectors of length ``dim`` (Fock levels ``|0> ... |dim-1>``), operators are
``dim x dim`` complex matrices.  All constructors return freshly allocated
arrays; cached eigenbases are marked read-only.

The displacement gate is the unitary ``D(alpha) = exp(alpha*(adag - a))``
for real ``alpha``.  Because the generator is a fixed matrix scaled by
``alpha``, its eigendecomposition is computed once per dimension and every
displacement (matrix or matrix-vector application) reuses it.
"""

import warnings
from functools import lru_cache

import numpy as np

__all__ = [
    "destroy",
    "create",
    "number_diag",
    "parity_diag",
    "fock_state",
    "coherent_amplitudes",
    "wrap_phases",
    "reliable_dim",
    "displacement_safety_bound",
    "build_displacement",
    "apply_displacement",
    "build_snap",
    "apply_snap",
    "build_block",
    "apply_block",
    "apply_block_dagger",
    "apply_displacement_generator",
    "hs_inner",
    "trace_norm",
    "wigner_grid",
]


def destroy(dim: int) -> np.ndarray:
    """Annihilation operator ``a`` truncated to ``dim`` Fock levels."""
    _check_dim(dim)
    return np.diag(np.sqrt(np.arange(1, dim)), k=1).astype(complex)


def create(dim: int) -> np.ndarray:
    """Creation operator ``adag`` truncated to ``dim`` Fock levels."""
    _check_dim(dim)
    return np.diag(np.sqrt(np.arange(1, dim)), k=-1).astype(complex)


def number_diag(dim: int) -> np.ndarray:
    """Diagonal of the photon-number operator, i.e. ``0, 1, ..., dim-1``."""
    _check_dim(dim)
    return np.arange(dim, dtype=float)


def parity_diag(dim: int) -> np.ndarray:
    """Diagonal of the photon-number parity operator: ``(-1)**n``."""
    _check_dim(dim)
    return (-1.0) ** np.arange(dim)


def fock_state(n: int, dim: int) -> np.ndarray:
    """Fock basis ket ``|n>`` as a complex vector."""
    _check_dim(dim)
    if not 0 <= n < dim:
        raise ValueError(f"Fock level {n} outside truncated space of dim {dim}")
    psi = np.zeros(dim, dtype=complex)
    psi[n] = 1.0
    return psi


def coherent_amplitudes(alpha: complex, dim: int) -> np.ndarray:
    """Closed-form coherent-state amplitudes ``exp(-|a|^2/2) a^n / sqrt(n!)``.

    Independent of the matrix-exponential displacement constructor; mainly
    useful as a cross-check.
    """
    _check_dim(dim)
    if alpha == 0:
        return fock_state(0, dim)
    n = np.arange(dim)
    log_fact = np.concatenate(([0.0], np.cumsum(np.log(np.arange(1, dim)))))
    log_mag = -0.5 * abs(alpha) ** 2 + n * np.log(abs(alpha)) - 0.5 * log_fact
    return np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))


def wrap_phases(theta: np.ndarray) -> np.ndarray:
    """Wrap phase angles into the canonical interval ``(-pi, pi]``."""
    theta = np.asarray(theta, dtype=float)
    wrapped = np.mod(-theta + np.pi, 2.0 * np.pi)
    return np.pi - wrapped


def reliable_dim(dim: int, alpha: float) -> int:
    """Number of low Fock levels on which a displacement by ``alpha`` is
    trustworthy despite truncation: ``dim - 8*ceil(alpha^2) - 8``.
    """
    return max(0, dim - 8 * int(np.ceil(float(alpha) ** 2)) - 8)


def displacement_safety_bound(dim: int) -> float:
    """Largest ``|alpha|`` for which truncation error stays negligible on the
    low-Fock sector (0.6*sqrt(dim); 6.0 at the default dim of 100)."""
    return 0.6 * np.sqrt(dim)


@lru_cache(maxsize=None)
def _displacement_basis(dim: int):
    """Eigendecomposition ``(w, u, udag)`` of the Hermitian generator
    ``-i*(adag - a)``, so that ``D(alpha) = u @ diag(exp(i*alpha*w)) @ udag``."""
    a = destroy(dim)
    h = -1j * (a.conj().T - a)
    w, u = np.linalg.eigh(h)
    udag = np.ascontiguousarray(u.conj().T)
    for arr in (w, u, udag):
        arr.flags.writeable = False
    return w, u, udag


def build_displacement(alpha: float, dim: int, *, on_unsafe: str = "warn") -> np.ndarray:
    """Displacement unitary ``exp(alpha*(adag - a))`` for real ``alpha``.

    Parameters
    ----------
    alpha : float
        Real displacement amplitude.
    dim : int
        Fock-space truncation.
    on_unsafe : {"warn", "raise", "ignore"}
        Policy when ``|alpha|`` exceeds :func:`displacement_safety_bound`.
    """
    _check_dim(dim)
    alpha = float(alpha)
    if not np.isfinite(alpha):
        raise ValueError("displacement amplitude must be finite")
    bound = displacement_safety_bound(dim)
    if abs(alpha) > bound:
        msg = f"|alpha|={abs(alpha):.3g} exceeds safety bound {bound:.3g} for dim={dim}"
        if on_unsafe == "raise":
            raise ValueError(msg)
        if on_unsafe == "warn":
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
        elif on_unsafe != "ignore":
            raise ValueError(f"unknown on_unsafe policy {on_unsafe!r}")
    w, u, udag = _displacement_basis(dim)
    return (u * np.exp(1j * alpha * w)) @ udag


def _build_displacement_complex(alpha: complex, dim: int) -> np.ndarray:
    """General-complex displacement ``exp(alpha*adag - conj(alpha)*a)``.

    Internal constructor: eigendecomposes the generator per call, independently
    of the cached real-``alpha`` path.  Used by phase-relation tests only.
    """
    _check_dim(dim)
    a = destroy(dim)
    h = -1j * (alpha * a.conj().T - np.conj(alpha) * a)
    w, u = np.linalg.eigh(h)
    return (u * np.exp(1j * w)) @ u.conj().T


def apply_displacement(alpha: float, vecs: np.ndarray) -> np.ndarray:
    """Apply ``D(alpha)`` to one state vector or a ``(dim, k)`` stack."""
    dim = vecs.shape[0]
    w, u, udag = _displacement_basis(dim)
    phases = np.exp(1j * float(alpha) * w)
    if vecs.ndim == 1:
        return u @ (phases * (udag @ vecs))
    return u @ (phases[:, None] * (udag @ vecs))


def build_snap(theta: np.ndarray) -> np.ndarray:
    """SNAP unitary ``diag(exp(i*theta_n))`` for per-level phases ``theta``."""
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1:
        raise ValueError("SNAP phases must be a 1-d array")
    _check_dim(theta.shape[0])
    if not np.all(np.isfinite(theta)):
        raise ValueError("SNAP phases must be finite")
    return np.diag(np.exp(1j * theta))


def apply_snap(theta: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    """Apply a SNAP gate to one state vector or a ``(dim, k)`` stack."""
    phases = np.exp(1j * np.asarray(theta, dtype=float))
    if vecs.ndim == 1:
        return phases * vecs
    return phases[:, None] * vecs


def build_block(alpha: float, theta: np.ndarray, *, on_unsafe: str = "warn") -> np.ndarray:
    """Building block ``Ddag(alpha) @ S(theta) @ D(alpha)``.

    The sandwich structure makes the block displacement-free: it reduces to a
    bare SNAP at ``alpha = 0`` and to the identity when all phases vanish.
    """
    theta = np.asarray(theta, dtype=float)
    d = build_displacement(alpha, theta.shape[0], on_unsafe=on_unsafe)
    if not np.all(np.isfinite(theta)):
        raise ValueError("SNAP phases must be finite")
    return d.conj().T @ (np.exp(1j * theta)[:, None] * d)


def apply_block(alpha: float, theta: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    """Apply ``B(alpha, theta)`` to states without forming the matrix."""
    mid = apply_displacement(alpha, vecs)
    return apply_displacement(-alpha, apply_snap(theta, mid))


def apply_block_dagger(alpha: float, theta: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    """Apply ``B(alpha, theta)^dagger = B(alpha, -theta)`` to states."""
    mid = apply_displacement(alpha, vecs)
    return apply_displacement(-alpha, apply_snap(-np.asarray(theta, dtype=float), mid))


def apply_displacement_generator(vecs: np.ndarray) -> np.ndarray:
    """Apply the displacement generator ``K = adag - a`` to states.

    Bidiagonal, so applied in O(dim) per column instead of via a matrix.
    """
    dim = vecs.shape[0]
    sq = np.sqrt(np.arange(1, dim))
    out = np.zeros_like(vecs, dtype=complex)
    if vecs.ndim == 1:
        out[1:] = sq * vecs[:-1]
        out[:-1] -= sq * vecs[1:]
    else:
        out[1:] = sq[:, None] * vecs[:-1]
        out[:-1] -= sq[:, None] * vecs[1:]
    return out


def hs_inner(a: np.ndarray, b: np.ndarray) -> complex:
    """Hilbert-Schmidt inner product ``tr(adag @ b)``.

    Evaluated as the elementwise sum ``sum(conj(a) * b)`` without forming the
    product matrix.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"operands must be equal-size square matrices, got {a.shape} and {b.shape}")
    return complex(np.vdot(a, b))


def trace_norm(a: np.ndarray) -> float:
    """Trace norm (sum of singular values) of a matrix."""
    a = np.asarray(a)
    if not np.all(np.isfinite(a)):
        raise ValueError("trace_norm requires finite entries")
    try:
        sv = np.linalg.svd(a, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            f"SVD did not converge for {a.shape} matrix (max |entry| = {np.abs(a).max():.3g})"
        ) from exc
    return float(sv.sum())


def wigner_grid(
    psi: np.ndarray,
    x_range: tuple[float, float],
    p_range: tuple[float, float],
    resolution: int,
) -> np.ndarray:
    """Wigner function of ``psi`` sampled on a rectangular phase-space grid.

    Convention: ``integral W(x, p) dx dp = 1`` and the vacuum peaks at
    ``W(0, 0) = 1/pi``.  Evaluated through the displaced-parity form
    ``W = (1/pi) <psi| D(beta) P D(beta)^dag |psi>`` with ``beta = (x+ip)/sqrt(2)``.

    Returns an array ``W`` of shape ``(resolution, resolution)`` with
    ``W[i, j]`` the value at ``(x_i, p_j)``, both axes sampled with
    ``np.linspace`` over the given ranges.
    """
    psi = np.asarray(psi, dtype=complex)
    dim = psi.shape[0]
    _check_dim(dim)
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > 1e-8:
        raise ValueError(f"state must be normalized, got |psi| = {norm:.6g}")
    if int(resolution) < 2:
        raise ValueError("resolution must be at least 2")
    x_lo, x_hi = map(float, x_range)
    p_lo, p_hi = map(float, p_range)
    if not (x_hi > x_lo and p_hi > p_lo):
        raise ValueError("phase-space ranges must be non-empty intervals")

    xs = np.linspace(x_lo, x_hi, int(resolution))
    ps = np.linspace(p_lo, p_hi, int(resolution))
    xg, pg = np.meshgrid(xs, ps, indexing="ij")
    beta = (xg + 1j * pg).ravel() / np.sqrt(2.0)

    # D(beta)^dag psi = R_phi D(-|beta|) R_phi^dag psi with R_phi = diag(e^{i n phi});
    # the outer R_phi drops out of |.|^2.
    w, u, _ = _displacement_basis(dim)
    n = np.arange(dim)
    parity = parity_diag(dim)
    radius = np.abs(beta)
    phi = np.angle(beta)

    out = np.empty(beta.shape[0], dtype=float)
    u_t = u.T
    u_conj = u.conj()
    chunk = 4096
    for lo in range(0, beta.shape[0], chunk):
        hi = min(lo + chunk, beta.shape[0])
        rotated = np.exp(-1j * np.outer(phi[lo:hi], n)) * psi
        coeffs = rotated @ u_conj
        coeffs *= np.exp(-1j * np.outer(radius[lo:hi], w))
        displaced = coeffs @ u_t
        out[lo:hi] = (displaced.real**2 + displaced.imag**2) @ parity
    return (out / np.pi).reshape(int(resolution), int(resolution))


def _check_dim(dim: int) -> None:
    if int(dim) < 2:
        raise ValueError(f"Fock truncation must be at least 2, got {dim}")
