"""Command-line interface.

Subcommands: ``run`` (initialize + finetune + evaluate), ``init``,
``finetune``, ``evaluate``, ``sweep`` and ``wigner``.  Every command accepts
``--config FILE`` with a JSON job description; explicit flags override values
from the file.  Exit codes: 0 on success, 2 for configuration problems, 3 for
numeric failures during optimization.
"""

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .finetuner import NumericAbort, finetune
from .initializer import initialize
from .jobs import (
    ConfigError,
    evaluate_sequence_file,
    job_from_dict,
    run_job,
    run_sweep,
    target_from_descriptor,
)
from .linalg import wigner_grid
from .sequences import apply_sequence, sequence_from_dict, sequence_to_dict

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _fail(code: int, kind: str, message: str) -> int:
    print(json.dumps({"error": {"code": kind, "message": message}}), file=sys.stderr)
    return code


def _load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _job_config(args) -> dict:
    cfg = _load_json(args.config) if args.config else {}
    overrides = {
        "dim": args.dim,
        "T": args.length,
        "output_dir": args.output_dir,
        "job_id": args.job_id,
    }
    for key, value in overrides.items():
        if value is not None:
            cfg[key] = value
    if args.target is not None:
        cfg["target"] = _load_json(args.target)
    train = dict(cfg.get("train", {}))
    for key, value in (
        ("lambda", args.photon_weight),
        ("iterations", args.iterations),
        ("seed", args.seed),
        ("log_every", args.log_every),
    ):
        if value is not None:
            train[key] = value
    if args.preset is not None:
        train["preset"] = args.preset
    if train:
        cfg["train"] = train
    init = dict(cfg.get("init", {}))
    if args.random_first_block:
        init["random_first_block"] = True
    if args.init_seed is not None:
        init["seed"] = args.init_seed
    if init:
        cfg["init"] = init
    if args.wigner:
        cfg.setdefault("wigner", {})
    return cfg


def _add_job_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON job config file")
    parser.add_argument("--target", help="JSON file with a target descriptor")
    parser.add_argument("--dim", type=int, help="Fock-space truncation")
    parser.add_argument("-T", "--length", type=int, help="number of SNAP gates")
    parser.add_argument("--lambda", dest="photon_weight", type=float, help="photon-cost weight")
    parser.add_argument("--iterations", type=int, help="finetuning iterations")
    parser.add_argument("--seed", type=int, help="finetuning seed (recorded in metadata)")
    parser.add_argument("--init-seed", type=int, help="initialization seed")
    parser.add_argument("--log-every", type=int, help="trace logging stride")
    parser.add_argument("--preset", choices=["default", "no-gc-high-lr"], help="training preset")
    parser.add_argument("--random-first-block", action="store_true", help="force randomized first insertion")
    parser.add_argument("--output-dir", help="artifact directory")
    parser.add_argument("--job-id", help="job identifier (artifact subdirectory)")
    parser.add_argument("--wigner", action="store_true", help="emit Wigner snapshots")


def _cmd_run(args) -> int:
    spec = job_from_dict(_job_config(args))
    result = run_job(spec)
    rep = result["report"]
    print(
        f"{spec.job_id}: fidelity={rep.fidelity:.9f} photon_cost={rep.photon_cost:.4f} "
        f"non_leakage={rep.non_leakage:.9f} -> {result['output_dir']}"
    )
    return EXIT_OK


def _cmd_init(args) -> int:
    spec = job_from_dict(_job_config(args))
    target = target_from_descriptor(spec.target, spec.dim)
    seq, trace = initialize(target, spec.init)
    outdir = spec.output_dir / spec.job_id
    outdir.mkdir(parents=True, exist_ok=True)
    from .jobs import _write_init_csv

    _write_init_csv(outdir / "init_trace.csv", trace)
    meta = {"job_id": spec.job_id, "init_seed": spec.init.seed, "stage": "init"}
    (outdir / "sequence.json").write_text(
        json.dumps(sequence_to_dict(seq, meta=meta), indent=2, sort_keys=True) + "\n"
    )
    print(f"{spec.job_id}: initialized T={seq.n_blocks}, fidelity={trace.records[-1].fidelity:.6f}")
    return EXIT_OK


def _cmd_finetune(args) -> int:
    cfg = _job_config(args)
    seq = sequence_from_dict(_load_json(args.sequence))
    cfg.setdefault("T", max(seq.n_blocks, 1))
    cfg.setdefault("dim", seq.dim)
    spec = job_from_dict(cfg)
    if spec.dim != seq.dim:
        raise ConfigError(f"sequence dim {seq.dim} does not match config dim {spec.dim}")
    target = target_from_descriptor(spec.target, spec.dim)
    seq, trace = finetune(target, seq, spec.train)
    outdir = spec.output_dir / spec.job_id
    outdir.mkdir(parents=True, exist_ok=True)
    from .jobs import _write_train_csv

    _write_train_csv(outdir / "train_trace.csv", trace.records)
    meta = {"job_id": spec.job_id, "train_seed": spec.train.seed, "stage": "finetune"}
    (outdir / "sequence.json").write_text(
        json.dumps(sequence_to_dict(seq, meta=meta), indent=2, sort_keys=True) + "\n"
    )
    print(f"{spec.job_id}: finetuned, fidelity={trace.final.fidelity:.9f}")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    desc = _load_json(args.target)
    report = evaluate_sequence_file(args.sequence, desc, args.photon_weight)
    payload = json.dumps(report.to_dict(), indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(payload + "\n")
    print(payload)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    summary = run_sweep(_load_json(args.config))
    print(f"sweep summary written to {summary}")
    return EXIT_OK


def _cmd_wigner(args) -> int:
    seq = sequence_from_dict(_load_json(args.sequence))
    desc = _load_json(args.target)
    target = target_from_descriptor(desc, seq.dim)
    psi = target.input_basis[:, args.state_index].copy()
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    xs = np.linspace(args.xmin, args.xmax, args.resolution)
    ps = np.linspace(args.pmin, args.pmax, args.resolution)
    from .jobs import _write_wigner_csv
    from .linalg import apply_block

    for t in range(seq.n_blocks + 1):
        grid = wigner_grid(psi, (args.xmin, args.xmax), (args.pmin, args.pmax), args.resolution)
        _write_wigner_csv(outdir / f"wigner_{t:03d}.csv", grid, xs, ps)
        if t < seq.n_blocks:
            psi = apply_block(seq.alphas[t], seq.thetas[t], psi)
    print(f"wrote {seq.n_blocks + 1} Wigner grids to {outdir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="snapseq",
        description="Synthesize short SNAP/displacement gate sequences for cavity targets.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="initialize, finetune and evaluate a job")
    _add_job_flags(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_init = sub.add_parser("init", help="greedy initialization only")
    _add_job_flags(p_init)
    p_init.set_defaults(func=_cmd_init)

    p_fine = sub.add_parser("finetune", help="finetune a stored sequence")
    _add_job_flags(p_fine)
    p_fine.add_argument("--sequence", required=True, help="sequence JSON file")
    p_fine.set_defaults(func=_cmd_finetune)

    p_eval = sub.add_parser("evaluate", help="recompute objectives for a stored sequence")
    p_eval.add_argument("--sequence", required=True, help="sequence JSON file")
    p_eval.add_argument("--target", required=True, help="target descriptor JSON file")
    p_eval.add_argument("--lambda", dest="photon_weight", type=float, default=None)
    p_eval.add_argument("--out", help="also write the report JSON here")
    p_eval.set_defaults(func=_cmd_evaluate)

    p_sweep = sub.add_parser("sweep", help="run a grid of jobs and summarize")
    p_sweep.add_argument("--config", required=True, help="sweep config JSON file")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_wig = sub.add_parser("wigner", help="emit Wigner-density snapshots between blocks")
    p_wig.add_argument("--sequence", required=True)
    p_wig.add_argument("--target", required=True)
    p_wig.add_argument("--output-dir", default="wigner")
    p_wig.add_argument("--state-index", type=int, default=0)
    p_wig.add_argument("--xmin", type=float, default=-5.0)
    p_wig.add_argument("--xmax", type=float, default=5.0)
    p_wig.add_argument("--pmin", type=float, default=-5.0)
    p_wig.add_argument("--pmax", type=float, default=5.0)
    p_wig.add_argument("--resolution", type=int, default=101)
    p_wig.set_defaults(func=_cmd_wigner)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericAbort as exc:
        return _fail(EXIT_NUMERIC, "numeric", str(exc))
    except (ConfigError, ValueError, KeyError, OSError) as exc:
        return _fail(EXIT_CONFIG, "config", str(exc))


if __name__ == "__main__":
    sys.exit(main())
