"""Figures of merit for a block sequence against a target operation.

All quantities are evaluated by propagating the ``2L`` logical basis states
through the sequence; the full ``dim x dim`` product unitary is never formed.

- ``fidelity``: mean overlap ``|sum_l <y_l|U|x_l>| / L``, the global-phase
  maximized average overlap between actual and desired outputs.
- ``photon_numbers``: mean photon number while each SNAP gate runs, for the
  forward pass from the inputs and for the inverse pass from the outputs.
- ``total_cost``: ``ln(1 - fidelity) + lam * photon_cost``.
- ``non_leakage``: trace norm of the overlap block, the probability mass of
  the actual outputs that stays inside the desired output space.
"""

from dataclasses import dataclass

import numpy as np

from . import linalg
from .sequences import BlockSequence
from .targets import TargetOperation

__all__ = ["ObjectiveReport", "fidelity", "photon_numbers", "total_cost", "non_leakage"]

SATURATION_LIMIT = 1.0 - 1e-15


@dataclass(frozen=True)
class ObjectiveReport:
    """Full evaluation record for one (target, sequence) pair."""

    fidelity: float
    nbar_forward: np.ndarray
    nbar_reverse: np.ndarray
    photon_cost: float
    total_cost: float
    non_leakage: float
    lam: float
    saturated: bool

    def to_dict(self) -> dict:
        return {
            "fidelity": self.fidelity,
            "nbar_forward": [float(x) for x in self.nbar_forward],
            "nbar_reverse": [float(x) for x in self.nbar_reverse],
            "photon_cost": self.photon_cost,
            "total_cost": self.total_cost,
            "non_leakage": self.non_leakage,
            "lambda": self.lam,
            "saturated": self.saturated,
        }


def _check_dims(target: TargetOperation, seq: BlockSequence) -> None:
    if target.dim != seq.dim:
        raise ValueError(f"target dim {target.dim} does not match sequence dim {seq.dim}")


def _final_inputs(target: TargetOperation, seq: BlockSequence) -> np.ndarray:
    states = target.input_basis.copy()
    for alpha, theta in seq.blocks():
        states = linalg.apply_block(alpha, theta, states)
    return states


def overlap_amplitude(target: TargetOperation, seq: BlockSequence) -> complex:
    """The complex overlap trace ``sum_l <y_l|U|x_l>`` (not yet normalized)."""
    _check_dims(target, seq)
    return complex(np.vdot(target.output_basis, _final_inputs(target, seq)))


def fidelity(target: TargetOperation, seq: BlockSequence) -> float:
    """Mean overlap in ``[0, 1]`` (up to roundoff), phase-optimized."""
    return abs(overlap_amplitude(target, seq)) / target.logical_dim


def photon_numbers(target: TargetOperation, seq: BlockSequence) -> tuple[np.ndarray, np.ndarray]:
    """Per-gate mean photon numbers ``(forward, reverse)``.

    ``forward[t]`` is the photon number averaged over the logical inputs while
    SNAP gate ``t`` runs, i.e. in the state ``D(alpha_t) B_{t-1} ... B_1 |x>``;
    ``reverse[t]`` is the same for the inverse sequence launched from the
    desired outputs ``|y>``.
    """
    _check_dims(target, seq)
    dim, L = target.dim, target.logical_dim
    nvec = linalg.number_diag(dim)
    nf = np.zeros(seq.n_blocks)
    nr = np.zeros(seq.n_blocks)

    states = target.input_basis.copy()
    for t, (alpha, theta) in enumerate(seq.blocks()):
        mid = linalg.apply_displacement(alpha, states)
        nf[t] = float(nvec @ (mid.real**2 + mid.imag**2).sum(axis=1)) / L
        states = linalg.apply_displacement(-alpha, linalg.apply_snap(theta, mid))

    states = target.output_basis.copy()
    for t in range(seq.n_blocks - 1, -1, -1):
        alpha, theta = seq.alphas[t], seq.thetas[t]
        mid = linalg.apply_displacement(alpha, states)
        nr[t] = float(nvec @ (mid.real**2 + mid.imag**2).sum(axis=1)) / L
        states = linalg.apply_displacement(-alpha, linalg.apply_snap(-theta, mid))

    return nf, nr


def non_leakage(target: TargetOperation, seq: BlockSequence) -> float:
    """Average probability that the actual outputs remain in the output space.

    Equals ``trace_norm(V Udag V) / L``; since ``V = Y Xdag`` with orthonormal
    stacks, only the ``L x L`` overlap block ``M_jk = <y_j|U|x_k>`` matters and
    its singular values are summed directly.
    """
    _check_dims(target, seq)
    block = target.output_basis.conj().T @ _final_inputs(target, seq)
    return float(np.linalg.svd(block, compute_uv=False).sum()) / target.logical_dim


def total_cost(target: TargetOperation, seq: BlockSequence, lam: float) -> ObjectiveReport:
    """Evaluate every figure of merit and the combined training cost.

    The log term diverges at unit fidelity, so the fidelity entering the log
    is clamped at ``1 - 1e-15`` and the report flags the saturation.
    """
    lam = float(lam)
    if lam < 0:
        raise ValueError("photon-cost weight must be non-negative")
    fid = fidelity(target, seq)
    nf, nr = photon_numbers(target, seq)
    photon_cost = float((nf + nr).sum() / 2.0)
    saturated = fid >= SATURATION_LIMIT
    cost = float(np.log(1.0 - min(fid, SATURATION_LIMIT)) + lam * photon_cost)
    return ObjectiveReport(
        fidelity=float(fid),
        nbar_forward=nf,
        nbar_reverse=nr,
        photon_cost=photon_cost,
        total_cost=cost,
        non_leakage=non_leakage(target, seq),
        lam=lam,
        saturated=saturated,
    )
