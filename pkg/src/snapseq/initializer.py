"""Greedy hierarchical construction of an initial block sequence.

Blocks are inserted one at a time at slots given by the breadth-first
traversal of a balanced binary tree over the final positions ``1..T``.  Each
insertion solves the single-block problem exactly: for the conjugated
effective target ``M`` of the current slot, the diagonal overlap vector
``g_n(alpha) = <n| D(alpha) M Ddag(alpha) |n>`` yields the optimal SNAP
phases ``theta_n = arg g_n(alpha)`` and the block fidelity
``sum_n |g_n(alpha)| / L``, maximized over a fixed displacement grid.

Because the identity block is always available (``0`` in the grid, zero
phases), the mean overlap never decreases during construction.  Targets whose
``g_n`` are all real get stuck inserting near-identities; for those the first
block is drawn at random instead.
"""

import bisect
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .sequences import BlockSequence
from .targets import TargetOperation

__all__ = [
    "DEFAULT_ALPHA_GRID",
    "InitConfig",
    "InsertionRecord",
    "InitTrace",
    "g_vector",
    "optimal_block",
    "insertion_order",
    "initialize",
]

# Displacement candidates -2.0, -1.8, ..., 2.0; contains an exact zero.
DEFAULT_ALPHA_GRID = np.arange(-10, 11) / 5.0

_SCORE_TIE_TOL = 1e-12
_REAL_PHASE_TOL = 1e-9
_STALL_GAIN_TOL = 1e-6


@dataclass(frozen=True)
class InitConfig:
    """Settings for greedy initialization.

    ``length`` is the number of blocks to insert.  SNAP phases for levels at
    or above ``snap_cutoff`` are pinned to zero during initialization (they
    are freed again during finetuning).  ``random_first_block`` forces the
    randomized escape; otherwise it triggers automatically when the first
    greedy block is phase-degenerate and gains nothing.
    """

    length: int
    alpha_grid: np.ndarray = field(default_factory=lambda: DEFAULT_ALPHA_GRID.copy())
    snap_cutoff: int = 15
    random_first_block: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("sequence length must be at least 1")
        grid = np.atleast_1d(np.asarray(self.alpha_grid, dtype=float)).copy()
        if grid.size == 0 or not np.all(np.isfinite(grid)):
            raise ValueError("alpha grid must be non-empty and finite")
        grid.flags.writeable = False
        object.__setattr__(self, "alpha_grid", grid)
        if self.snap_cutoff < 0:
            raise ValueError("snap cutoff must be non-negative")


@dataclass(frozen=True)
class InsertionRecord:
    step: int
    slot: int
    alpha: float
    fidelity: float


@dataclass
class InitTrace:
    records: list[InsertionRecord] = field(default_factory=list)
    used_random_first_block: bool = False

    @property
    def fidelities(self) -> np.ndarray:
        return np.array([r.fidelity for r in self.records])


def g_vector(effective_target: np.ndarray, alpha: float) -> np.ndarray:
    """Diagonal of ``D(alpha) @ M @ Ddag(alpha)`` as d inner products.

    ``M`` is the effective target of the current slot (the bare target
    conjugated by the fixed left/right segments).
    """
    m = np.asarray(effective_target, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"effective target must be square, got {m.shape}")
    w, u, udag = linalg._displacement_basis(m.shape[0])
    return _g_from_rotated(udag @ m @ u, float(alpha), w, u)


def _g_from_rotated(m_rot: np.ndarray, alpha: float, w: np.ndarray, u: np.ndarray) -> np.ndarray:
    """g for one alpha given ``m_rot = Udag M U`` (shared across the grid)."""
    phases = np.exp(1j * alpha * w)
    core = (phases[:, None] * m_rot) * phases.conj()[None, :]
    rows = u @ core
    return np.einsum("nk,nk->n", rows, u.conj())


def optimal_block(
    effective_target: np.ndarray, cfg: InitConfig, logical_dim: int = 1
) -> tuple[float, np.ndarray, float]:
    """Best single block for the effective target over the displacement grid.

    Returns ``(alpha, theta, score)`` where ``score = sum_n |g_n(alpha)| / L``
    is exactly the fidelity the block would reach with unrestricted phases.
    Grid ties (within 1e-12 of the best score) resolve to the smallest
    ``|alpha|``, then the smallest ``alpha``.  Phases for levels at or above
    the cutoff are zeroed, which can only lose the tail ``sum_{n>=cut}|g_n|``.
    """
    m = np.asarray(effective_target, dtype=complex)
    dim = m.shape[0]
    w, u, udag = linalg._displacement_basis(dim)
    m_rot = udag @ m @ u

    sums = np.empty(cfg.alpha_grid.shape[0])
    for i, alpha in enumerate(cfg.alpha_grid):
        sums[i] = np.abs(_g_from_rotated(m_rot, alpha, w, u)).sum()
    tol = _SCORE_TIE_TOL * max(1.0, sums.max())
    tied = np.flatnonzero(sums >= sums.max() - tol)
    best = min(tied, key=lambda i: (abs(cfg.alpha_grid[i]), cfg.alpha_grid[i]))
    alpha = float(cfg.alpha_grid[best])

    g = _g_from_rotated(m_rot, alpha, w, u)
    theta = np.angle(g)
    theta[min(cfg.snap_cutoff, dim):] = 0.0
    return alpha, theta, float(np.abs(g).sum()) / logical_dim


def insertion_order(length: int) -> list[int]:
    """Final positions ``1..length`` in breadth-first binary-tree order.

    The tree over ``[lo, hi]`` has root ``ceil((lo + hi) / 2)``; children
    recurse on the two remaining halves.  For a length of 7 this yields
    ``[4, 2, 6, 1, 3, 5, 7]``.
    """
    if length < 1:
        raise ValueError("sequence length must be at least 1")
    order = []
    queue = [(1, length)]
    while queue:
        lo, hi = queue.pop(0)
        mid = (lo + hi + 1) // 2
        order.append(mid)
        if lo <= mid - 1:
            queue.append((lo, mid - 1))
        if mid + 1 <= hi:
            queue.append((mid + 1, hi))
    return order


def _phase_degenerate(theta: np.ndarray) -> bool:
    """True when every phase sits within tolerance of 0 or +-pi."""
    dist = np.minimum(np.abs(theta), np.abs(np.abs(theta) - np.pi))
    return bool(np.all(dist < _REAL_PHASE_TOL))


def initialize(target: TargetOperation, cfg: InitConfig) -> tuple[BlockSequence, InitTrace]:
    """Build a ``cfg.length``-block sequence by greedy hierarchical insertion.

    Maintains the placed blocks sorted by final position; for each new slot
    the effective target is assembled from the input states propagated through
    the earlier segment and the output states pulled back through the later
    segment, then :func:`optimal_block` picks the insertion.

    The first insertion is replaced by a random block when
    ``cfg.random_first_block`` is set, or when the greedy proposal is
    phase-degenerate (all angles at 0 or pi) and improves the overlap by less
    than 1e-6: that combination means every ``g_n`` is real and greedy
    insertion would stall at near-identity blocks.
    """
    dim, L = target.dim, target.logical_dim
    order = insertion_order(cfg.length)
    rng = np.random.default_rng(cfg.seed)

    positions: list[int] = []
    placed: list[tuple[float, np.ndarray]] = []
    trace = InitTrace()
    fid_prev = abs(np.vdot(target.output_basis, target.input_basis)) / L

    for step, slot in enumerate(order, start=1):
        p = bisect.bisect_left(positions, slot)
        x = target.input_basis.copy()
        for alpha_b, theta_b in placed[:p]:
            x = linalg.apply_block(alpha_b, theta_b, x)
        y = target.output_basis.copy()
        for alpha_b, theta_b in reversed(placed[p:]):
            y = linalg.apply_block_dagger(alpha_b, theta_b, y)
        effective = y @ x.conj().T

        alpha, theta, score = optimal_block(effective, cfg, L)
        if step == 1 and (
            cfg.random_first_block
            or (_phase_degenerate(theta) and score - fid_prev < _STALL_GAIN_TOL)
        ):
            trace.used_random_first_block = True
            alpha = float(rng.choice(cfg.alpha_grid))
            theta = np.zeros(dim)
            cut = min(cfg.snap_cutoff, dim)
            theta[:cut] = rng.uniform(-np.pi, np.pi, cut)

        g = g_vector(effective, alpha)
        fid_new = float(abs(np.sum(np.exp(1j * theta) * np.conj(g)))) / L

        positions.insert(p, slot)
        placed.insert(p, (alpha, theta))
        trace.records.append(InsertionRecord(step=step, slot=slot, alpha=alpha, fidelity=fid_new))
        fid_prev = fid_new

    seq = BlockSequence.from_blocks(dim, placed)
    return seq, trace
