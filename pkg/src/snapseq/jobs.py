"""Job orchestration: config parsing, target construction, run/evaluate/sweep.

A job runs greedy initialization, then gradient finetuning, then a full
objective evaluation, and writes its artifacts (config echo, traces, final
sequence, report, optional Wigner snapshots) into one output directory.

Target descriptors are plain dicts so they can live in JSON config files:

``{"family": "fock_unitary", "kind": "inversion" | "block_inversion" |
  "permutation" | "random", "n": 10, "seed": 0}``
    Unitary on the ``n`` lowest Fock levels (or explicit ``"levels": [...]``;
    ``kind: "explicit"`` takes ``"matrix": [[re, im], ...]`` pairs).

``{"family": "state_prep", "preset": "b0" | "b1" | "odd"}``
    or explicit ``"alpha": [re, im], "beta": [re, im]``.

``{"family": "recovery", "syndrome": "identity" | "a" | "a2", "gamma_t": 0.02}``

``{"family": "logical_op", "code": "binomial" | "trivial",
  "operation": "hadamard" | "pauli_x" | "pauli_y" | "sqrt_pauli_x" | "random",
  "seed": 0}``  (or ``"matrix": ...``)

When no photon-cost weight is given, a per-family default is looked up (see
:func:`default_lambda`).
"""

import csv
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import targets as targets_mod
from .finetuner import NumericAbort, TrainConfig, finetune
from .initializer import InitConfig, initialize
from .linalg import wigner_grid
from .objectives import ObjectiveReport, total_cost
from .sequences import BlockSequence, apply_sequence, sequence_from_dict, sequence_to_dict
from .targets import TargetOperation

__all__ = [
    "ConfigError",
    "JobSpec",
    "target_from_descriptor",
    "default_lambda",
    "job_from_dict",
    "run_job",
    "evaluate_sequence",
    "evaluate_sequence_file",
    "run_sweep",
]

WORKERS_ENV = "SNAPSEQ_WORKERS"


class ConfigError(ValueError):
    """A job configuration could not be interpreted."""


@dataclass(frozen=True)
class JobSpec:
    """Everything needed to run one synthesis job."""

    target: dict
    length: int
    dim: int = 100
    init: InitConfig = None
    train: TrainConfig = None
    output_dir: Path = Path("runs")
    job_id: str = "job"
    wigner: dict | None = None

    def __post_init__(self):
        if self.length < 1:
            raise ConfigError("sequence length T must be at least 1")
        if self.init is None:
            object.__setattr__(self, "init", InitConfig(length=self.length))
        if self.init.length != self.length:
            object.__setattr__(self, "init", replace(self.init, length=self.length))
        if self.train is None:
            object.__setattr__(self, "train", TrainConfig(lam=default_lambda(self.target, self.length)))
        object.__setattr__(self, "output_dir", Path(self.output_dir))


def _as_complex(value) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    raise ConfigError(f"expected a number or [re, im] pair, got {value!r}")


def _matrix_from_config(entry) -> np.ndarray:
    try:
        return np.array([[_as_complex(cell) for cell in row] for row in entry])
    except (TypeError, ConfigError) as exc:
        raise ConfigError(f"bad matrix entry: {exc}") from exc


_LOGICAL_OPS = {
    "hadamard": targets_mod.HADAMARD,
    "pauli_x": targets_mod.PAULI_X,
    "pauli_y": targets_mod.PAULI_Y,
    "sqrt_pauli_x": targets_mod.SQRT_PAULI_X,
}

_STATE_PRESETS = {
    "b0": (1.0 + 0j, 0.0 + 0j),
    "b1": (0.0 + 0j, 1.0 + 0j),
    "plus": (1.0 / np.sqrt(2.0) + 0j, 1.0 / np.sqrt(2.0) + 0j),
    "odd": targets_mod.ODD_SUPERPOSITION,
}


def target_from_descriptor(desc: dict, dim: int) -> TargetOperation:
    """Construct the target operation described by a config dict."""
    if not isinstance(desc, dict) or "family" not in desc:
        raise ConfigError("target descriptor must be a dict with a 'family' key")
    family = desc["family"]
    try:
        if family == "fock_unitary":
            levels = desc.get("levels")
            if levels is None:
                levels = list(range(int(desc.get("n", 10))))
            n = len(levels)
            kind = desc.get("kind", "random")
            seed = int(desc.get("seed", 0))
            if kind == "inversion":
                v = targets_mod.inversion_matrix(n)
            elif kind == "block_inversion":
                v = targets_mod.block_inversion_matrix(n)
            elif kind == "permutation":
                v = targets_mod.random_permutation(n, seed)
            elif kind == "random":
                v = targets_mod.random_unitary(n, seed)
            elif kind == "explicit":
                v = _matrix_from_config(desc["matrix"])
            else:
                raise ConfigError(f"unknown fock_unitary kind {kind!r}")
            return targets_mod.fock_subspace_unitary(v, levels, dim)
        if family == "state_prep":
            if "preset" in desc:
                try:
                    alpha, beta = _STATE_PRESETS[desc["preset"]]
                except KeyError:
                    raise ConfigError(f"unknown state_prep preset {desc['preset']!r}") from None
            else:
                alpha = _as_complex(desc["alpha"])
                beta = _as_complex(desc["beta"])
            return targets_mod.state_prep_target(alpha, beta, dim)
        if family == "recovery":
            return targets_mod.recovery_target(
                desc.get("syndrome", "identity"), float(desc.get("gamma_t", 0.02)), dim
            )
        if family == "logical_op":
            code = desc.get("code", "binomial")
            op = desc.get("operation", "hadamard")
            if "matrix" in desc:
                v = _matrix_from_config(desc["matrix"])
            elif op == "random":
                v = targets_mod.random_unitary(2, int(desc.get("seed", 0)))
            else:
                try:
                    v = _LOGICAL_OPS[op]
                except KeyError:
                    raise ConfigError(f"unknown logical operation {op!r}") from None
            return targets_mod.logical_op_target(v, code, dim)
    except (ValueError, KeyError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad target descriptor for family {family!r}: {exc}") from exc
    raise ConfigError(f"unknown target family {family!r}")


def default_lambda(desc: dict, length: int) -> float:
    """Photon-cost weight by target family and sequence length.

    State preparation uses 0.6.  Recovery uses 0.6 for the single-loss
    syndrome at short lengths and 0.4 otherwise.  Logical operations use 2.4
    on the trivial code and 0.32 on the binomial code (1.0 for short Pauli-X).
    Fock-subspace unitaries use 0.16/0.4 (inversion, by length), 0.8 (block
    inversion) and an involved-level count rule for permutations and random
    unitaries: 2.4 up to 3 levels, 1.8 for 4 or 5, 1.6 from 6 up.
    """
    family = desc.get("family")
    if family == "state_prep":
        return 0.6
    if family == "recovery":
        return 0.6 if desc.get("syndrome") == "a" and length <= 4 else 0.4
    if family == "logical_op":
        if desc.get("code", "binomial") == "trivial":
            return 2.4
        return 1.0 if desc.get("operation") == "pauli_x" and length <= 3 else 0.32
    if family == "fock_unitary":
        kind = desc.get("kind", "random")
        if kind == "inversion":
            return 0.16 if length <= 8 else 0.4
        if kind == "block_inversion":
            return 0.8
        n = len(desc.get("levels", range(int(desc.get("n", 10)))))
        if n <= 3:
            return 2.4
        if n <= 5:
            return 1.8
        return 1.6
    raise ConfigError(f"no default photon-cost weight for target family {family!r}")


def job_from_dict(cfg: dict) -> JobSpec:
    """Build a :class:`JobSpec` from a JSON-style dict, resolving defaults."""
    if not isinstance(cfg, dict):
        raise ConfigError("job config must be a JSON object")
    try:
        target = cfg["target"]
        length = int(cfg["T"])
    except KeyError as exc:
        raise ConfigError(f"job config is missing required key {exc}") from exc
    dim = int(cfg.get("dim", 100))

    init_cfg = dict(cfg.get("init", {}))
    init_kwargs = {"length": length}
    if "alpha_grid" in init_cfg:
        init_kwargs["alpha_grid"] = np.asarray(init_cfg.pop("alpha_grid"), dtype=float)
    for key in ("snap_cutoff", "random_first_block", "seed"):
        if key in init_cfg:
            init_kwargs[key] = init_cfg.pop(key)
    if init_cfg:
        raise ConfigError(f"unknown init options: {sorted(init_cfg)}")

    train_cfg = dict(cfg.get("train", {}))
    lam = train_cfg.pop("lambda", None)
    if lam is None:
        lam = default_lambda(target, length)
    preset = train_cfg.pop("preset", "default")
    known = {"iterations", "eta", "beta1", "beta2", "epsilon", "clip_alpha", "clip_theta", "log_every", "seed"}
    unknown = set(train_cfg) - known
    if unknown:
        raise ConfigError(f"unknown train options: {sorted(unknown)}")
    try:
        if preset == "default":
            train = TrainConfig(lam=float(lam), **train_cfg)
        elif preset in ("no-gc-high-lr", "no_clip_high_lr"):
            train = TrainConfig.no_clip_high_lr(float(lam), **train_cfg)
        else:
            raise ConfigError(f"unknown train preset {preset!r}")
        init = InitConfig(**init_kwargs)
        return JobSpec(
            target=target,
            length=length,
            dim=dim,
            init=init,
            train=train,
            output_dir=Path(cfg.get("output_dir", "runs")),
            job_id=str(cfg.get("job_id", "job")),
            wigner=cfg.get("wigner"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _json_dump(data, path: Path) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def _write_train_csv(path: Path, records) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "fidelity", "photon_cost", "total_cost"])
        for rec in records:
            writer.writerow([rec.iteration, repr(float(rec.fidelity)), repr(float(rec.photon_cost)), repr(float(rec.total_cost))])


def _write_init_csv(path: Path, trace) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "slot", "alpha", "fidelity"])
        for rec in trace.records:
            writer.writerow([rec.step, rec.slot, repr(float(rec.alpha)), repr(float(rec.fidelity))])


def _write_wigner_csv(path: Path, grid: np.ndarray, xs: np.ndarray, ps: np.ndarray) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x\\p"] + [repr(float(p)) for p in ps])
        for x, row in zip(xs, grid):
            writer.writerow([repr(float(x))] + [repr(float(v)) for v in row])


def _config_echo(spec: JobSpec) -> dict:
    return {
        "job_id": spec.job_id,
        "dim": spec.dim,
        "T": spec.length,
        "target": spec.target,
        "init": {
            "alpha_grid": [float(a) for a in spec.init.alpha_grid],
            "snap_cutoff": spec.init.snap_cutoff,
            "random_first_block": spec.init.random_first_block,
            "seed": spec.init.seed,
        },
        "train": {
            "lambda": spec.train.lam,
            "iterations": spec.train.iterations,
            "eta": spec.train.eta,
            "beta1": spec.train.beta1,
            "beta2": spec.train.beta2,
            "epsilon": spec.train.epsilon,
            "clip_alpha": spec.train.clip_alpha,
            "clip_theta": spec.train.clip_theta,
            "log_every": spec.train.log_every,
            "seed": spec.train.seed,
        },
        "wigner": spec.wigner,
    }


def _emit_wigner_snapshots(spec: JobSpec, target: TargetOperation, seq: BlockSequence, outdir: Path) -> None:
    opts = spec.wigner if isinstance(spec.wigner, dict) else {}
    xmin = float(opts.get("xmin", -5.0))
    xmax = float(opts.get("xmax", 5.0))
    pmin = float(opts.get("pmin", -5.0))
    pmax = float(opts.get("pmax", 5.0))
    resolution = int(opts.get("resolution", 101))
    state_index = int(opts.get("state_index", 0))
    xs = np.linspace(xmin, xmax, resolution)
    ps = np.linspace(pmin, pmax, resolution)
    psi = target.input_basis[:, state_index].copy()
    psi /= np.linalg.norm(psi)
    for t in range(seq.n_blocks + 1):
        grid = wigner_grid(psi, (xmin, xmax), (pmin, pmax), resolution)
        _write_wigner_csv(outdir / f"wigner_{t:03d}.csv", grid, xs, ps)
        if t < seq.n_blocks:
            from .linalg import apply_block

            psi = apply_block(seq.alphas[t], seq.thetas[t], psi)


def run_job(spec: JobSpec, *, progress=None) -> dict:
    """Initialize, finetune, evaluate and persist one job.

    Returns a summary dict with the final report and artifact paths.  Raises
    :class:`ConfigError` for bad settings and :class:`NumericAbort` when
    finetuning diverges (the partial train trace is still written).
    """
    outdir = spec.output_dir / spec.job_id
    outdir.mkdir(parents=True, exist_ok=True)
    _json_dump(_config_echo(spec), outdir / "config.json")

    target = target_from_descriptor(spec.target, spec.dim)
    started = time.time()
    seq, init_trace = initialize(target, spec.init)
    _write_init_csv(outdir / "init_trace.csv", init_trace)

    try:
        seq, train_trace = finetune(target, seq, spec.train, progress=progress)
    except NumericAbort as exc:
        _write_train_csv(outdir / "train_trace.csv", exc.trace.records)
        raise
    _write_train_csv(outdir / "train_trace.csv", train_trace.records)

    report = total_cost(target, seq, spec.train.lam)
    wall_time = time.time() - started

    meta = {
        "job_id": spec.job_id,
        "init_seed": spec.init.seed,
        "train_seed": spec.train.seed,
        "used_random_first_block": init_trace.used_random_first_block,
        "wall_time_s": wall_time,
    }
    _json_dump(sequence_to_dict(seq, meta=meta), outdir / "sequence.json")
    _json_dump(report.to_dict() | {"wall_time_s": wall_time}, outdir / "report.json")

    if spec.wigner:
        _emit_wigner_snapshots(spec, target, seq, outdir)

    return {
        "job_id": spec.job_id,
        "output_dir": str(outdir),
        "report": report,
        "sequence": seq,
        "init_trace": init_trace,
        "train_trace": train_trace,
    }


def evaluate_sequence(seq: BlockSequence, desc: dict, lam: float | None = None) -> ObjectiveReport:
    """Recompute all objectives for a stored sequence against a target."""
    target = target_from_descriptor(desc, seq.dim)
    if lam is None:
        lam = default_lambda(desc, max(seq.n_blocks, 1))
    return total_cost(target, seq, lam)


def evaluate_sequence_file(seq_path, desc: dict, lam: float | None = None) -> ObjectiveReport:
    """Load a sequence JSON file and evaluate it; parse errors name the field."""
    try:
        data = json.loads(Path(seq_path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{seq_path}: invalid JSON ({exc})") from exc
    try:
        seq = sequence_from_dict(data)
    except ValueError as exc:
        raise ConfigError(f"{seq_path}: {exc}") from exc
    return evaluate_sequence(seq, desc, lam)


def _run_job_payload(payload: dict) -> dict:
    spec = job_from_dict(payload)
    result = run_job(spec)
    rep = result["report"]
    return {
        "job_id": spec.job_id,
        "T": spec.length,
        "dim": spec.dim,
        "n_levels": _involved_levels(spec.target),
        "lambda": spec.train.lam,
        "fidelity": rep.fidelity,
        "photon_cost": rep.photon_cost,
        "total_cost": rep.total_cost,
        "non_leakage": rep.non_leakage,
    }


def _involved_levels(desc: dict) -> int:
    if desc.get("family") == "fock_unitary":
        return len(desc.get("levels", range(int(desc.get("n", 10)))))
    return 0


def run_sweep(cfg: dict) -> Path:
    """Run a grid of jobs and write a summary CSV.

    The sweep config holds a ``job`` template plus optional ``lengths`` (list
    of T values) and ``targets`` (list of descriptors).  Jobs are scheduled on
    a process pool sized by the ``SNAPSEQ_WORKERS`` environment variable
    (default 1, i.e. sequential).
    """
    if "job" not in cfg:
        raise ConfigError("sweep config needs a 'job' template")
    template = cfg["job"]
    lengths = cfg.get("lengths") or [int(template.get("T", 1))]
    descriptors = cfg.get("targets") or [template.get("target")]
    if any(d is None for d in descriptors):
        raise ConfigError("sweep needs a target in the job template or a 'targets' list")

    payloads = []
    for desc in descriptors:
        for length in lengths:
            payload = json.loads(json.dumps(template))
            payload["target"] = desc
            payload["T"] = int(length)
            family = desc.get("family", "target")
            payload["job_id"] = f"{template.get('job_id', 'sweep')}_{family}_N{_involved_levels(desc)}_T{length}"
            payloads.append(payload)
        # validate eagerly so config errors surface before any work is queued
    for payload in payloads:
        job_from_dict(payload)

    workers = int(os.environ.get(WORKERS_ENV, "1"))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_job_payload, payloads))
    else:
        rows = [_run_job_payload(p) for p in payloads]

    outdir = Path(template.get("output_dir", "runs"))
    outdir.mkdir(parents=True, exist_ok=True)
    summary = outdir / f"{cfg.get('sweep_id', 'sweep')}_summary.csv"
    with summary.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    return summary
