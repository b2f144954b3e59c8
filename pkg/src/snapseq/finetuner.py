"""Gradient-descent co-optimization of all block parameters.

The cost is ``ln(1 - fidelity) + lam * photon_cost``.  Its gradient with
respect to every displacement ``alpha_t`` and SNAP phase ``theta_t^(n)`` is
exact and assembled from adjoint-style recursions: one forward sweep of the
logical input states, one backward sweep of the output states, and two
accumulator sweeps that collect the photon-number operators of the other
blocks.  Because the target has rank ``L``, every operator appearing in a
gradient inner product factors over ``L`` propagated states, so an iteration
costs ``O(T L dim^2)`` and never multiplies ``dim x dim`` matrices.

A dense-matrix workspace (:func:`gradient_workspace`) built from the same
recursions is kept for verification; it materializes the adjoint operators
explicitly and is quadratically more expensive.

Updates use Adam on the concatenated parameter vector, after clipping each
gradient component at class-specific bounds.
"""

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import linalg
from .objectives import SATURATION_LIMIT
from .sequences import BlockSequence
from .targets import TargetOperation

__all__ = [
    "TrainConfig",
    "TrainRecord",
    "TrainTrace",
    "NumericAbort",
    "GradientWorkspace",
    "gradient_workspace",
    "overlap_gradient",
    "photon_gradient",
    "cost_gradient",
    "clip",
    "AdamState",
    "adam_step",
    "finetune",
]


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for finetuning.

    The defaults (step size 1e-4, moment decays 0.9/0.999, component clipping
    at 100 for displacements and 50 for SNAP phases, 100000 iterations) work
    across all target families; only ``lam`` is application-specific.
    """

    lam: float
    iterations: int = 100_000
    eta: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    clip_alpha: float = 100.0
    clip_theta: float = 50.0
    log_every: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("photon-cost weight must be non-negative")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("moment decays must lie in [0, 1)")
        if self.eta <= 0 or self.epsilon <= 0:
            raise ValueError("step size and epsilon must be positive")
        if self.clip_alpha <= 0 or self.clip_theta <= 0:
            raise ValueError("clip bounds must be positive")
        if self.iterations < 0 or self.log_every < 1:
            raise ValueError("iterations must be >= 0 and log_every >= 1")

    @classmethod
    def no_clip_high_lr(cls, lam: float, **overrides) -> "TrainConfig":
        """Alternative preset: faster but less stable (no clipping, higher
        learning rate, shorter second-moment memory)."""
        base = cls(lam=lam, eta=2.5e-4, beta2=0.99, clip_alpha=np.inf, clip_theta=np.inf)
        return replace(base, **overrides) if overrides else base


@dataclass(frozen=True)
class TrainRecord:
    iteration: int
    fidelity: float
    photon_cost: float
    total_cost: float
    max_grad_alpha: float
    max_grad_theta: float
    alphas: np.ndarray
    thetas: np.ndarray


@dataclass
class TrainTrace:
    records: list[TrainRecord] = field(default_factory=list)
    aborted: bool = False

    @property
    def final(self) -> TrainRecord:
        return self.records[-1]


class NumericAbort(RuntimeError):
    """Finetuning hit a non-finite cost or gradient; carries the partial trace."""

    def __init__(self, message: str, trace: TrainTrace):
        super().__init__(message)
        trace.aborted = True
        self.trace = trace


# ---------------------------------------------------------------------------
# Fused evaluation / gradient pass (rank-L factored recursions)
# ---------------------------------------------------------------------------


class _PassResult:
    __slots__ = (
        "overlap",
        "fidelity",
        "saturated",
        "nbar_forward",
        "nbar_reverse",
        "d_alpha_overlap",
        "d_theta_overlap",
        "d_alpha_photon",
        "d_theta_photon",
    )


def _evaluation_pass(
    target: TargetOperation,
    alphas: np.ndarray,
    thetas: np.ndarray,
    *,
    overlap_grad: bool = False,
    photon_grad: bool = False,
) -> _PassResult:
    dim, L = target.dim, target.logical_dim
    T = alphas.shape[0]
    w, u, udag = linalg._displacement_basis(dim)
    nvec = np.arange(dim, dtype=float)

    disp_ph = np.exp(1j * np.outer(alphas, w))  # (T, dim) displacement eigenphases
    snap_ph = np.exp(1j * thetas)  # (T, dim)

    def d_apply(t, vec, dagger=False):
        ph = disp_ph[t].conj() if dagger else disp_ph[t]
        return u @ (ph[:, None] * (udag @ vec))

    # Forward sweep: fwd[i] = B_{i} ... B_1 |x>, mid_x[i] the state during SNAP i.
    fwd = [None] * (T + 1)
    mid_x = [None] * T
    fwd[0] = target.input_basis.copy()
    for i in range(T):
        mid_x[i] = d_apply(i, fwd[i])
        fwd[i + 1] = d_apply(i, snap_ph[i][:, None] * mid_x[i], dagger=True)

    # Backward sweep: bwd[i] = Bdag_{i+1} ... Bdag_T |y>, mid_y[i] the state
    # during the SNAP of block i in the inverse pass.
    bwd = [None] * (T + 1)
    mid_y = [None] * T
    bwd[T] = target.output_basis.copy()
    for i in range(T - 1, -1, -1):
        mid_y[i] = d_apply(i, bwd[i + 1])
        bwd[i] = d_apply(i, snap_ph[i].conj()[:, None] * mid_y[i], dagger=True)

    res = _PassResult()
    res.overlap = complex(np.vdot(target.output_basis, fwd[T]))
    res.fidelity = abs(res.overlap) / L
    res.saturated = res.fidelity >= SATURATION_LIMIT
    res.nbar_forward = np.array(
        [float(nvec @ (m.real**2 + m.imag**2).sum(axis=1)) / L for m in mid_x]
    )
    res.nbar_reverse = np.array(
        [float(nvec @ (m.real**2 + m.imag**2).sum(axis=1)) / L for m in mid_y]
    )
    res.d_alpha_overlap = res.d_theta_overlap = None
    res.d_alpha_photon = res.d_theta_photon = None
    if T == 0 or not (overlap_grad or photon_grad):
        return res

    k_of = linalg.apply_displacement_generator

    if overlap_grad:
        da = np.zeros(T)
        dth = np.zeros((T, dim))
        if not res.saturated:
            z = res.overlap
            mag = abs(z)
            phase = z / mag if mag > 0 else 1.0
            cbar = np.conj(-phase / (L - mag))
            kf = [k_of(fwd[i]) for i in range(T + 1)]
            for i in range(T):
                da[i] = (cbar * (np.vdot(bwd[i], kf[i]) - np.vdot(bwd[i + 1], kf[i + 1]))).real
                cross = (mid_x[i] * mid_y[i].conj()).sum(axis=1)
                dth[i] = (1j * snap_ph[i] * cbar * cross).real
        res.d_alpha_overlap = da
        res.d_theta_overlap = dth

    if photon_grad:
        # Photon-number adjoints, kept factored over the L logical states:
        #   q[i] = Ddag_i (n * mid_x[i]),  r[i] = Ddag_i (n * mid_y[i])
        #   xs[j] = (suffix photon accumulator applied to fwd[j]):
        #           xs[T] = 0, xs[j] = q[j] + Bdag_j xs[j+1]
        #   yv[j] = (prefix photon accumulator applied to bwd[j]):
        #           yv[0] = 0, yv[j+1] = r[j] + B_j yv[j]
        q = [d_apply(i, nvec[:, None] * mid_x[i], dagger=True) for i in range(T)]
        r = [d_apply(i, nvec[:, None] * mid_y[i], dagger=True) for i in range(T)]

        def b_apply(i, vec):
            return d_apply(i, snap_ph[i][:, None] * d_apply(i, vec), dagger=True)

        def b_dagger_apply(i, vec):
            return d_apply(i, snap_ph[i].conj()[:, None] * d_apply(i, vec), dagger=True)

        zero = np.zeros_like(target.input_basis)
        xs = [None] * (T + 1)
        xs[T] = zero
        for j in range(T - 1, -1, -1):
            xs[j] = q[j] + b_dagger_apply(j, xs[j + 1])
        yv = [None] * (T + 1)
        yv[0] = zero
        for j in range(T):
            yv[j + 1] = r[j] + b_apply(j, yv[j])

        da = np.zeros(T)
        dth = np.zeros((T, dim))
        for i in range(T):
            kf_lo = k_of(fwd[i])
            kf_hi = k_of(fwd[i + 1])
            # forward-photon terms: block commutator + direct displacement term
            fwd_a = (np.vdot(xs[i] - q[i], kf_lo) - np.vdot(xs[i + 1], kf_hi)).real
            fwd_a += np.vdot(mid_x[i], nvec[:, None] * k_of(mid_x[i])).real
            # reverse-photon terms
            rev_a = (np.vdot(bwd[i], k_of(yv[i])) - np.vdot(bwd[i + 1], k_of(yv[i + 1] - r[i]))).real
            rev_a += np.vdot(mid_y[i], nvec[:, None] * k_of(mid_y[i])).real
            da[i] = (fwd_a + rev_a) / L

            cross_f = (mid_x[i] * d_apply(i, xs[i + 1]).conj()).sum(axis=1)
            cross_r = (d_apply(i, yv[i]) * mid_y[i].conj()).sum(axis=1)
            dth[i] = (1j * snap_ph[i] * (cross_f + cross_r)).real / L
        res.d_alpha_photon = da
        res.d_theta_photon = dth

    return res


def overlap_gradient(
    target: TargetOperation, seq: BlockSequence
) -> tuple[np.ndarray, np.ndarray]:
    """Exact gradient of ``ln(1 - fidelity)`` w.r.t. all block parameters.

    At saturated fidelity (>= 1 - 1e-15) the log term has no usable gradient;
    zeros are returned and a warning is emitted.
    """
    _check_dims(target, seq)
    res = _evaluation_pass(target, seq.alphas, seq.thetas, overlap_grad=True)
    if res.saturated:
        warnings.warn("fidelity saturated; overlap gradient zeroed", RuntimeWarning, stacklevel=2)
    if seq.n_blocks == 0:
        return np.zeros(0), np.zeros((0, seq.dim))
    return res.d_alpha_overlap, res.d_theta_overlap


def photon_gradient(target: TargetOperation, seq: BlockSequence) -> tuple[np.ndarray, np.ndarray]:
    """Exact gradient of the photon cost ``sum_t (nbar_t + nbar'_t) / 2``."""
    _check_dims(target, seq)
    if seq.n_blocks == 0:
        return np.zeros(0), np.zeros((0, seq.dim))
    res = _evaluation_pass(target, seq.alphas, seq.thetas, photon_grad=True)
    return res.d_alpha_photon, res.d_theta_photon


def cost_gradient(
    target: TargetOperation, seq: BlockSequence, lam: float
) -> tuple[np.ndarray, np.ndarray]:
    """Gradient of the full cost ``ln(1 - F) + lam * photon_cost``."""
    _check_dims(target, seq)
    res = _evaluation_pass(
        target, seq.alphas, seq.thetas, overlap_grad=True, photon_grad=lam != 0.0
    )
    if seq.n_blocks == 0:
        return np.zeros(0), np.zeros((0, seq.dim))
    da = res.d_alpha_overlap.copy()
    dth = res.d_theta_overlap.copy()
    if lam != 0.0:
        da += lam * res.d_alpha_photon
        dth += lam * res.d_theta_photon
    return da, dth


def _check_dims(target: TargetOperation, seq: BlockSequence) -> None:
    if target.dim != seq.dim:
        raise ValueError(f"target dim {target.dim} does not match sequence dim {seq.dim}")


# ---------------------------------------------------------------------------
# Dense reference workspace
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GradientWorkspace:
    """Dense adjoint operators from the recursive schemes, one per block.

    ``overlap_adjoints[t]`` pairs with the block derivative to give the
    log-overlap gradient; ``input_densities``/``output_densities`` are the
    logical projectors propagated to block ``t`` (Hermitian, PSD, unit trace);
    ``photon_suffix``/``photon_prefix`` accumulate the displaced number
    operators of the later/earlier blocks (Hermitian).
    """

    overlap_adjoints: list[np.ndarray]
    input_densities: list[np.ndarray]
    output_densities: list[np.ndarray]
    photon_suffix: list[np.ndarray]
    photon_prefix: list[np.ndarray]
    saturated: bool


def gradient_workspace(target: TargetOperation, seq: BlockSequence) -> GradientWorkspace:
    """Materialize all gradient operators by their matrix recursions."""
    _check_dims(target, seq)
    dim, L, T = target.dim, target.logical_dim, seq.n_blocks
    if T == 0:
        raise ValueError("workspace needs at least one block")
    blocks = [linalg.build_block(a, th, on_unsafe="ignore") for a, th in seq.blocks()]
    number = np.diag(linalg.number_diag(dim)).astype(complex)
    disp = [linalg.build_displacement(a, dim, on_unsafe="ignore") for a in seq.alphas]
    conj_number = [d.conj().T @ number @ d for d in disp]
    v = target.matrix

    product = np.eye(dim, dtype=complex)
    for b in blocks:
        product = b @ product
    z = linalg.hs_inner(v, product)
    mag = abs(z)
    saturated = mag / L >= SATURATION_LIMIT

    adjoints = [np.zeros((dim, dim), dtype=complex) for _ in range(T)]
    if not saturated:
        suffix = np.eye(dim, dtype=complex)
        for j in range(T - 1, 0, -1):
            suffix = suffix @ blocks[j].conj().T
        phase = z / mag if mag > 0 else 1.0
        adjoints[0] = -phase / (L - mag) * (suffix @ v)
        for t in range(T - 1):
            adjoints[t + 1] = blocks[t + 1] @ adjoints[t] @ blocks[t].conj().T

    rho_x = [None] * T
    rho_x[0] = v.conj().T @ v / L
    for t in range(T - 1):
        rho_x[t + 1] = blocks[t] @ rho_x[t] @ blocks[t].conj().T
    rho_y = [None] * T
    rho_y[T - 1] = v @ v.conj().T / L
    for t in range(T - 1, 0, -1):
        rho_y[t - 1] = blocks[t].conj().T @ rho_y[t] @ blocks[t]

    suffix_ops = [None] * T
    suffix_ops[T - 1] = np.zeros((dim, dim), dtype=complex)
    for t in range(T - 1, 0, -1):
        suffix_ops[t - 1] = blocks[t].conj().T @ suffix_ops[t] @ blocks[t] + conj_number[t]
    prefix_ops = [None] * T
    prefix_ops[0] = np.zeros((dim, dim), dtype=complex)
    for t in range(T - 1):
        prefix_ops[t + 1] = blocks[t] @ prefix_ops[t] @ blocks[t].conj().T + conj_number[t]

    return GradientWorkspace(
        overlap_adjoints=adjoints,
        input_densities=rho_x,
        output_densities=rho_y,
        photon_suffix=suffix_ops,
        photon_prefix=prefix_ops,
        saturated=saturated,
    )


# ---------------------------------------------------------------------------
# Optimizer
# ---------------------------------------------------------------------------


def clip(grad, bound: float):
    """Clamp gradient components to ``[-bound, +bound]`` (value clipping)."""
    if bound <= 0:
        raise ValueError("clip bound must be positive")
    return np.clip(grad, -bound, bound)


@dataclass
class AdamState:
    """First/second moment accumulators and shared step counter."""

    m: np.ndarray
    v: np.ndarray
    step: int = 0

    @classmethod
    def zeros(cls, n_params: int) -> "AdamState":
        return cls(m=np.zeros(n_params), v=np.zeros(n_params), step=0)


def adam_step(state: AdamState, params: np.ndarray, grads: np.ndarray, cfg: TrainConfig) -> np.ndarray:
    """One Adam update with bias correction; mutates ``state``, returns new params."""
    if params.shape != grads.shape or params.shape != state.m.shape:
        raise ValueError("parameter, gradient and moment shapes must agree")
    state.step += 1
    state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grads
    state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grads**2
    m_hat = state.m / (1.0 - cfg.beta1**state.step)
    v_hat = state.v / (1.0 - cfg.beta2**state.step)
    return params - cfg.eta * m_hat / (np.sqrt(v_hat) + cfg.epsilon)


def finetune(
    target: TargetOperation,
    seq: BlockSequence,
    cfg: TrainConfig,
    progress=None,
) -> tuple[BlockSequence, TrainTrace]:
    """Run ``cfg.iterations`` steps of clipped-gradient Adam on all parameters.

    Returns the parameters after the last iteration (no post-selection of
    intermediate configurations) and a trace with one record every
    ``cfg.log_every`` iterations plus the final state.  ``progress`` is called
    with each :class:`TrainRecord` as it is logged.  A non-finite cost or
    gradient raises :class:`NumericAbort` carrying the trace so far.
    """
    _check_dims(target, seq)
    trace = TrainTrace()
    T, dim = seq.n_blocks, seq.dim
    alphas = seq.alphas.copy()
    thetas = seq.thetas.copy()

    if T == 0:
        record = _make_record(0, target, alphas, thetas, cfg.lam, None)
        trace.records.append(record)
        if progress is not None:
            progress(record)
        return seq, trace

    state = AdamState.zeros(T * (1 + dim))
    need_photon = cfg.lam != 0.0
    for it in range(cfg.iterations):
        res = _evaluation_pass(target, alphas, thetas, overlap_grad=True, photon_grad=True)
        grad_a = res.d_alpha_overlap
        grad_th = res.d_theta_overlap
        if need_photon:
            grad_a = grad_a + cfg.lam * res.d_alpha_photon
            grad_th = grad_th + cfg.lam * res.d_theta_photon

        if it % cfg.log_every == 0:
            record = _make_record(it, target, alphas, thetas, cfg.lam, res, grad_a, grad_th)
            trace.records.append(record)
            if progress is not None:
                progress(record)
            if not np.isfinite(record.total_cost):
                raise NumericAbort(f"non-finite cost at iteration {it}", trace)

        if not (np.all(np.isfinite(grad_a)) and np.all(np.isfinite(grad_th))):
            raise NumericAbort(f"non-finite gradient at iteration {it}", trace)

        flat = np.concatenate([clip(grad_a, cfg.clip_alpha), clip(grad_th, cfg.clip_theta).ravel()])
        params = np.concatenate([alphas, thetas.ravel()])
        params = adam_step(state, params, flat, cfg)
        alphas = params[:T]
        thetas = params[T:].reshape(T, dim)

    final_res = _evaluation_pass(target, alphas, thetas)
    record = _make_record(cfg.iterations, target, alphas, thetas, cfg.lam, final_res)
    trace.records.append(record)
    if progress is not None:
        progress(record)
    if not np.isfinite(record.total_cost):
        raise NumericAbort(f"non-finite cost after iteration {cfg.iterations}", trace)
    return seq.with_params(alphas, thetas), trace


def _make_record(iteration, target, alphas, thetas, lam, res, grad_a=None, grad_th=None):
    if res is None:
        res = _evaluation_pass(target, alphas, thetas)
    photon_cost = float((res.nbar_forward + res.nbar_reverse).sum() / 2.0)
    cost = float(np.log(1.0 - min(res.fidelity, SATURATION_LIMIT)) + lam * photon_cost)
    return TrainRecord(
        iteration=int(iteration),
        fidelity=float(res.fidelity),
        photon_cost=photon_cost,
        total_cost=cost,
        max_grad_alpha=float(np.abs(grad_a).max()) if grad_a is not None and grad_a.size else 0.0,
        max_grad_theta=float(np.abs(grad_th).max()) if grad_th is not None and grad_th.size else 0.0,
        alphas=np.array(alphas, dtype=float),
        thetas=np.array(thetas, dtype=float),
    )
