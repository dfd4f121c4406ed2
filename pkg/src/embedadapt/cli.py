"""embedadapt command line: synth, adapt, project, compare, bench.

Every run writes a RunManifest JSON next to its outputs recording the
resolved configuration, seeds, sha256 fingerprints of the inputs, output
paths, the kernel backend, and wall time, so any run is reproducible from
its manifest alone. All configuration flows through flags; no experiment
parameter is read from the environment.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__, kernels
from .contrastive import adapt, apply_pipeline, load_pipeline, save_pipeline
from .data import (
    NONLINEARITIES,
    SynthSpec,
    generate_synthetic,
    load_dataset,
    save_embeddings,
    write_dataset,
)
from .evaluation import (
    ARMS,
    benchmark_timing,
    effective_threads,
    run_comparison,
    timing_to_csv,
)
from .classifiers import CLASSIFIER_KINDS
from .network import TrainConfig
from .pca import load_pca_pipeline, pca_apply

# Frozen synthetic suite used by the acceptance benchmark: a dataset where
# the label lives only in rotated XOR pair structure, invisible to linear
# models and to PCA (isotropic covariance), but learnable by a small
# nonlinear head.
XOR_SUITE_SPEC = SynthSpec(
    n_samples=2000,
    n_modalities=2,
    dims=(256, 128),
    signal_dims=(8, 8),
    noise_sigma=1.0,
    class_balance=0.5,
    nonlinearity="xor-rotate",
    signal_offset=2.0,
    seed=20260817,
)

XOR_SUITE_CONFIG = TrainConfig(projection_size=64, hidden_width=256, epochs=30)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_run_manifest(
    path: Path,
    command: str,
    config: dict,
    inputs: list[Path],
    outputs: list[Path],
    wall_seconds: float,
) -> None:
    manifest = {
        "version": 1,
        "package_version": __version__,
        "command": command,
        "config": config,
        "kernel_backend": kernels.active_backend(),
        "inputs": {str(p): _sha256(Path(p)) for p in inputs},
        "outputs": [str(p) for p in outputs],
        "wall_seconds": wall_seconds,
    }
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _add_train_config_args(parser: argparse.ArgumentParser) -> None:
    defaults = TrainConfig()
    group = parser.add_argument_group("training configuration")
    group.add_argument("--learning-rate", type=float, default=defaults.learning_rate)
    group.add_argument("--batch-size", type=int, default=defaults.batch_size)
    group.add_argument("--epochs", type=int, default=defaults.epochs)
    group.add_argument("--temperature", type=float, default=defaults.temperature)
    group.add_argument("--hidden-layers", type=int, default=defaults.hidden_layers)
    group.add_argument(
        "--hidden-width",
        type=int,
        default=None,
        help="hidden layer width (default: 2x projection size)",
    )
    group.add_argument("--projection-size", type=int, default=defaults.projection_size)
    group.add_argument(
        "--self-pairs",
        action=argparse.BooleanOptionalAction,
        default=defaults.include_self_pairs,
        help="include each sample paired with itself",
    )
    group.add_argument(
        "--normalize",
        action=argparse.BooleanOptionalAction,
        default=defaults.normalize_outputs,
        help="L2-normalize projection outputs",
    )
    group.add_argument(
        "--balance-pairs",
        action="store_true",
        default=defaults.balance_pairs,
        help="weight pairs by inverse label frequency",
    )


def _config_from_args(args) -> TrainConfig:
    return TrainConfig(
        learning_rate=args.learning_rate,
        batch_size=args.batch_size,
        epochs=args.epochs,
        temperature=args.temperature,
        hidden_layers=args.hidden_layers,
        hidden_width=args.hidden_width,
        projection_size=args.projection_size,
        include_self_pairs=args.self_pairs,
        normalize_outputs=args.normalize,
        balance_pairs=args.balance_pairs,
        seed=args.seed,
    )


def _config_dict(config: TrainConfig) -> dict:
    return {
        "learning_rate": config.learning_rate,
        "batch_size": config.batch_size,
        "epochs": config.epochs,
        "temperature": config.temperature,
        "hidden_layers": config.hidden_layers,
        "hidden_width": config.resolved_hidden_width(),
        "projection_size": config.projection_size,
        "include_self_pairs": config.include_self_pairs,
        "normalize_outputs": config.normalize_outputs,
        "balance_pairs": config.balance_pairs,
        "seed": config.seed,
    }


def _parse_int_list(text: str, count: int, what: str) -> tuple[int, ...]:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    try:
        vals = tuple(int(p) for p in parts)
    except ValueError:
        raise SystemExit2(f"{what} must be comma-separated integers")
    if len(vals) == 1:
        return vals * count
    if len(vals) != count:
        raise SystemExit2(
            f"{what} needs 1 or {count} comma-separated values, got {len(vals)}"
        )
    return vals


def cmd_synth(args) -> int:
    t0 = time.perf_counter()
    if args.preset == "xor-suite":
        spec = XOR_SUITE_SPEC
    else:
        if args.n < 2:
            raise SystemExit2("--n must be >= 2")
        if args.modalities < 1:
            raise SystemExit2("--modalities must be >= 1")
        dims = _parse_int_list(args.dims, args.modalities, "--dims")
        signal_dims = _parse_int_list(args.signal_dims, args.modalities, "--signal-dims")
        spec = SynthSpec(
            n_samples=args.n,
            n_modalities=args.modalities,
            dims=dims,
            signal_dims=signal_dims,
            noise_sigma=args.noise_sigma,
            class_balance=args.balance,
            nonlinearity=args.nonlinearity,
            signal_offset=args.offset,
            seed=args.seed,
        )
    try:
        spec.validate()
        ds = generate_synthetic(spec)
        manifest_path = write_dataset(ds, args.out, force=args.force)
    except (ValueError, FileExistsError) as exc:
        raise SystemExit2(str(exc))
    out = Path(args.out)
    outputs = sorted(p for p in out.iterdir() if p.suffix in (".csv", ".json"))
    _write_run_manifest(
        out / "run_manifest.json",
        "synth",
        {"spec": spec.__dict__ | {"dims": list(spec.dims), "signal_dims": list(spec.signal_dims)}},
        inputs=[],
        outputs=outputs,
        wall_seconds=time.perf_counter() - t0,
    )
    print(f"wrote {ds.n_samples} samples x {ds.n_modalities} modalities to {manifest_path}")
    return 0


def cmd_adapt(args) -> int:
    t0 = time.perf_counter()
    config = _config_from_args(args)
    try:
        config.validate()
        ds = load_dataset(args.data)
        with threadpool_limits(limits=effective_threads(args.threads)):
            pipeline, curves = adapt(ds, args.mode, config)
    except (ValueError, FileNotFoundError) as exc:
        raise SystemExit2(str(exc))
    out = Path(args.out)
    manifest_path = save_pipeline(pipeline, out)
    log_paths = []
    for name, curve in curves.items():
        log_path = out / f"loss_{name}.csv"
        lines = ["epoch,mean_pair_loss"]
        lines += [f"{epoch},{repr(float(v))}" for epoch, v in enumerate(curve)]
        log_path.write_text("\n".join(lines) + "\n")
        log_paths.append(log_path)
    outputs = [manifest_path] + sorted(out.glob("head_*.npz")) + sorted(log_paths)
    _write_run_manifest(
        out / "run_manifest.json",
        "adapt",
        {"mode": args.mode, "train": _config_dict(config), "threads": args.threads},
        inputs=[Path(args.data)],
        outputs=outputs,
        wall_seconds=time.perf_counter() - t0,
    )
    print(f"trained {len(pipeline.heads)} head(s) -> {manifest_path}")
    return 0


def _load_any_pipeline(path: Path):
    with open(path) as fh:
        kind = json.load(fh).get("kind")
    if kind == "contrastive":
        return load_pipeline(path), apply_pipeline
    if kind == "pca":
        return load_pca_pipeline(path), pca_apply
    raise ValueError(f"unknown pipeline kind {kind!r} in {path}")


def cmd_project(args) -> int:
    t0 = time.perf_counter()
    try:
        pipeline, apply_fn = _load_any_pipeline(Path(args.pipeline))
        ds = load_dataset(args.data)
        with threadpool_limits(limits=effective_threads(args.threads)):
            projected = apply_fn(pipeline, ds)
    except (ValueError, FileNotFoundError) as exc:
        raise SystemExit2(str(exc))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_embeddings(projected, ds.sample_ids, out)
    _write_run_manifest(
        out.with_suffix(out.suffix + ".run.json"),
        "project",
        {"pipeline": str(args.pipeline), "threads": args.threads},
        inputs=[Path(args.data), Path(args.pipeline)],
        outputs=[out],
        wall_seconds=time.perf_counter() - t0,
    )
    print(f"projected {projected.shape[0]} samples to {projected.shape[1]} dims -> {out}")
    return 0


def cmd_compare(args) -> int:
    t0 = time.perf_counter()
    config = _config_from_args(args)
    arms = [a.strip() for a in args.arms.split(",")] if args.arms else None
    clfs = [c.strip() for c in args.classifiers.split(",")] if args.classifiers else None
    try:
        config.validate()
        ds = load_dataset(args.data)
        with threadpool_limits(limits=effective_threads(args.threads)):
            report = run_comparison(
                ds, arms=arms, classifiers=clfs, config=config, k=args.folds, seed=args.seed
            )
    except (ValueError, FileNotFoundError) as exc:
        raise SystemExit2(str(exc))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    report.to_csv(out)
    _write_run_manifest(
        out.with_suffix(out.suffix + ".run.json"),
        "compare",
        {
            "arms": list(report.metadata["arms"]),
            "classifiers": list(report.metadata["classifiers"]),
            "folds": args.folds,
            "seed": args.seed,
            "threads": args.threads,
            "train": _config_dict(config),
        },
        inputs=[Path(args.data)],
        outputs=[out],
        wall_seconds=time.perf_counter() - t0,
    )
    print(f"wrote report -> {out}")
    if report.failures:
        failure_list = [
            {"arm": f.arm, "classifier": f.classifier, "fold": f.fold, "error": f.error}
            for f in report.failures
        ]
        print(json.dumps({"failures": failure_list}, indent=2), file=sys.stderr)
        return 1
    return 0


def cmd_bench(args) -> int:
    t0 = time.perf_counter()
    config = _config_from_args(args)
    try:
        config.validate()
        ds = load_dataset(args.data)
        rows = benchmark_timing(ds, config, threads=args.threads)
    except (ValueError, FileNotFoundError) as exc:
        raise SystemExit2(str(exc))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    timing_to_csv(rows, out)
    _write_run_manifest(
        out.with_suffix(out.suffix + ".run.json"),
        "bench",
        {"threads": args.threads, "train": _config_dict(config)},
        inputs=[Path(args.data)],
        outputs=[out],
        wall_seconds=time.perf_counter() - t0,
    )
    for row in rows:
        print(f"{row.arm}: {row.wall_seconds:.2f}s ({row.threads} threads)")
    return 0


class SystemExit2(SystemExit):
    """Usage / input error: exit code 2 with the message on stderr."""

    def __init__(self, message: str):
        print(f"error: {message}", file=sys.stderr)
        super().__init__(2)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embedadapt",
        description=(
            "Adapt frozen multimodal embeddings to a binary task with small "
            "contrastive projection heads and benchmark them against "
            "unprojected and PCA baselines."
        ),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic multimodal dataset")
    p.add_argument("--n", type=int, default=1000, help="number of samples")
    p.add_argument("--modalities", type=int, default=2)
    p.add_argument("--dims", default="256", help="per-modality dims, e.g. 256,128")
    p.add_argument("--signal-dims", default="2", help="label-carrying dims per modality")
    p.add_argument("--noise-sigma", type=float, default=1.0)
    p.add_argument("--balance", type=float, default=0.5, help="P(label = 1)")
    p.add_argument("--nonlinearity", choices=NONLINEARITIES, default="none")
    p.add_argument("--offset", type=float, default=1.0, help="class signal offset")
    p.add_argument(
        "--preset",
        choices=["xor-suite"],
        default=None,
        help="use a frozen spec (overrides the other generator flags)",
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--force", action="store_true", help="write into a non-empty directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("adapt", help="train projection heads on a dataset")
    p.add_argument("--data", required=True, help="dataset manifest.json")
    p.add_argument("--mode", choices=["single", "permod"], required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=8)
    p.add_argument("--out", required=True, help="output directory")
    _add_train_config_args(p)
    p.set_defaults(func=cmd_adapt)

    p = sub.add_parser("project", help="apply a trained pipeline to a dataset")
    p.add_argument("--pipeline", required=True, help="pipeline.json")
    p.add_argument("--data", required=True, help="dataset manifest.json")
    p.add_argument("--threads", type=int, default=8)
    p.add_argument("--out", required=True, help="output embedding CSV")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("compare", help="benchmark arms x classifiers with CV")
    p.add_argument("--data", required=True, help="dataset manifest.json")
    p.add_argument("--arms", default=None, help=f"comma list from {','.join(ARMS)}")
    p.add_argument(
        "--classifiers", default=None, help=f"comma list from {','.join(CLASSIFIER_KINDS)}"
    )
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=8)
    p.add_argument("--out", required=True, help="output report CSV")
    _add_train_config_args(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("bench", help="time adaptation vs the unprojected baseline fit")
    p.add_argument("--data", required=True, help="dataset manifest.json")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=8)
    p.add_argument("--out", required=True, help="output timing CSV")
    _add_train_config_args(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "seed", 0) < 0:
        print("error: --seed must be non-negative", file=sys.stderr)
        return 2
    if getattr(args, "threads", 1) < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except SystemExit2 as exc:
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
