"""Gate-sequence containers and the block/native reparameterization.

A :class:`BlockSequence` stores the optimizer-native form: ``T`` building
blocks ``B(alpha_t, theta_t) = Ddag(alpha_t) S(theta_t) D(alpha_t)`` applied
in list order (``blocks[0]`` first).  A :class:`NativeSequence` stores the
hardware-facing interleaving ``D(a_{T+1}) S(theta_T) ... S(theta_1) D(a_1)``,
whose displacement amplitudes always sum to zero when derived from blocks.
"""

from dataclasses import dataclass, field

import numpy as np

from . import linalg

__all__ = [
    "BlockSequence",
    "NativeSequence",
    "apply_sequence",
    "to_native",
    "from_native",
    "sequence_to_dict",
    "sequence_from_dict",
]


@dataclass(frozen=True, eq=False)
class BlockSequence:
    """Ordered building-block parameters ``(alpha_t, theta_t)`` on ``dim`` levels."""

    dim: int
    alphas: np.ndarray = field(default_factory=lambda: np.zeros(0))
    thetas: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))

    def __post_init__(self):
        alphas = np.atleast_1d(np.asarray(self.alphas, dtype=float)).copy()
        thetas = np.asarray(self.thetas, dtype=float).reshape(alphas.shape[0], -1).copy()
        if alphas.shape[0] > 0 and thetas.shape[1] != self.dim:
            thetas = thetas.reshape(alphas.shape[0], self.dim)
        if alphas.shape[0] == 0:
            thetas = np.zeros((0, self.dim))
        if thetas.shape != (alphas.shape[0], self.dim):
            raise ValueError(
                f"thetas must have shape (T, dim) = ({alphas.shape[0]}, {self.dim}), got {thetas.shape}"
            )
        if not (np.all(np.isfinite(alphas)) and np.all(np.isfinite(thetas))):
            raise ValueError("sequence parameters must be finite")
        alphas.flags.writeable = False
        thetas.flags.writeable = False
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "thetas", thetas)

    @property
    def n_blocks(self) -> int:
        return self.alphas.shape[0]

    @classmethod
    def empty(cls, dim: int) -> "BlockSequence":
        return cls(dim=dim, alphas=np.zeros(0), thetas=np.zeros((0, dim)))

    @classmethod
    def from_blocks(cls, dim: int, blocks) -> "BlockSequence":
        """Build from an iterable of ``(alpha, theta)`` pairs."""
        blocks = list(blocks)
        if not blocks:
            return cls.empty(dim)
        alphas = np.array([a for a, _ in blocks], dtype=float)
        thetas = np.array([np.asarray(th, dtype=float) for _, th in blocks])
        return cls(dim=dim, alphas=alphas, thetas=thetas)

    def blocks(self):
        """Iterate over ``(alpha_t, theta_t)`` in application order."""
        for t in range(self.n_blocks):
            yield self.alphas[t], self.thetas[t]

    def with_params(self, alphas: np.ndarray, thetas: np.ndarray) -> "BlockSequence":
        return BlockSequence(dim=self.dim, alphas=alphas, thetas=thetas)

    def inverse(self) -> "BlockSequence":
        """Sequence realizing the inverse unitary: reversed blocks, negated phases."""
        return BlockSequence(
            dim=self.dim, alphas=self.alphas[::-1].copy(), thetas=-self.thetas[::-1].copy()
        )


@dataclass(frozen=True, eq=False)
class NativeSequence:
    """Interleaved gate parameters: ``T+1`` displacements and ``T`` SNAP vectors."""

    dim: int
    displacements: np.ndarray
    snaps: np.ndarray

    def __post_init__(self):
        disp = np.atleast_1d(np.asarray(self.displacements, dtype=float)).copy()
        if disp.shape[0] < 1:
            raise ValueError("native sequence needs at least one displacement")
        n_snaps = disp.shape[0] - 1
        if n_snaps == 0:
            snaps = np.zeros((0, self.dim))
        else:
            snaps = np.asarray(self.snaps, dtype=float).reshape(n_snaps, -1).copy()
            if snaps.shape[1] != self.dim:
                raise ValueError(f"snaps must have {self.dim} phases per gate, got {snaps.shape[1]}")
        if not (np.all(np.isfinite(disp)) and np.all(np.isfinite(snaps))):
            raise ValueError("sequence parameters must be finite")
        disp.flags.writeable = False
        snaps.flags.writeable = False
        object.__setattr__(self, "displacements", disp)
        object.__setattr__(self, "snaps", snaps)

    @property
    def n_snaps(self) -> int:
        return self.snaps.shape[0]


def apply_sequence(seq: BlockSequence, psi: np.ndarray) -> np.ndarray:
    """Apply ``B_T ... B_1`` to a state (or ``(dim, k)`` stack) by
    matrix-vector products only."""
    psi = np.asarray(psi, dtype=complex)
    if psi.shape[0] != seq.dim:
        raise ValueError(f"state dim {psi.shape[0]} does not match sequence dim {seq.dim}")
    out = psi.copy()
    for alpha, theta in seq.blocks():
        out = linalg.apply_block(alpha, theta, out)
    return out


def apply_native_sequence(native: NativeSequence, psi: np.ndarray) -> np.ndarray:
    """Apply ``D(a_{T+1}) S(theta_T) ... S(theta_1) D(a_1)`` to a state."""
    psi = np.asarray(psi, dtype=complex)
    if psi.shape[0] != native.dim:
        raise ValueError(f"state dim {psi.shape[0]} does not match sequence dim {native.dim}")
    out = linalg.apply_displacement(native.displacements[0], psi)
    for t in range(native.n_snaps):
        out = linalg.apply_snap(native.snaps[t], out)
        out = linalg.apply_displacement(native.displacements[t + 1], out)
    return out


def to_native(seq: BlockSequence) -> NativeSequence:
    """Convert blocks to the hardware-facing interleaved form.

    Block displacements are cumulative sums of the native amplitudes, so the
    native amplitudes are consecutive differences and the trailing one cancels
    the total: the native amplitudes always sum to zero.  SNAP phases are
    wrapped into ``(-pi, pi]`` on export.
    """
    if seq.n_blocks < 1:
        raise ValueError("native conversion needs at least one block")
    cum = seq.alphas
    disp = np.empty(seq.n_blocks + 1)
    disp[0] = cum[0]
    disp[1:-1] = np.diff(cum)
    disp[-1] = -cum[-1]
    return NativeSequence(dim=seq.dim, displacements=disp, snaps=linalg.wrap_phases(seq.thetas))


def from_native(native: NativeSequence, *, zero_sum_tol: float = 1e-12) -> BlockSequence:
    """Convert an interleaved sequence to blocks.

    If the displacement amplitudes sum to zero the result has one block per
    SNAP gate and the conversion is an exact inverse of :func:`to_native`.
    Otherwise the leftover displacement ``D(s)`` is absorbed exactly by two
    extra parity blocks ``B(-s/4, n*pi) B(s/4, n*pi)`` appended at the end.
    """
    cum = np.cumsum(native.displacements)
    blocks = [(cum[t], native.snaps[t]) for t in range(native.n_snaps)]
    leftover = cum[-1]
    if abs(leftover) > zero_sum_tol:
        theta_rot_pi = np.pi * np.arange(native.dim, dtype=float)
        blocks.append((leftover / 4.0, theta_rot_pi))
        blocks.append((-leftover / 4.0, theta_rot_pi))
    return BlockSequence.from_blocks(native.dim, blocks)


def sequence_to_dict(seq: BlockSequence, meta: dict | None = None) -> dict:
    """JSON-ready representation carrying both block and native forms."""
    native = to_native(seq) if seq.n_blocks else None
    return {
        "dim": int(seq.dim),
        "T": int(seq.n_blocks),
        "blocks": [
            {"alpha": float(a), "theta": [float(x) for x in th]} for a, th in seq.blocks()
        ],
        "native": {
            "displacements": [float(x) for x in native.displacements] if native else [0.0],
            "snaps": [[float(x) for x in row] for row in native.snaps] if native else [],
        },
        "meta": dict(meta or {}),
    }


def sequence_from_dict(data: dict) -> BlockSequence:
    """Parse a sequence dict, reporting the offending field on bad input."""
    try:
        dim = int(data["dim"])
        n_blocks = int(data["T"])
        raw_blocks = data["blocks"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed sequence record: {exc}") from exc
    if len(raw_blocks) != n_blocks:
        raise ValueError(f"blocks: expected T={n_blocks} entries, got {len(raw_blocks)}")
    pairs = []
    for i, blk in enumerate(raw_blocks):
        try:
            alpha = float(blk["alpha"])
            theta = np.asarray(blk["theta"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"blocks[{i}]: {exc}") from exc
        if theta.shape != (dim,):
            raise ValueError(f"blocks[{i}].theta: expected {dim} phases, got {theta.shape[0]}")
        pairs.append((alpha, theta))
    return BlockSequence.from_blocks(dim, pairs)
