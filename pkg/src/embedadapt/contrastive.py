"""Supervised contrastive adaptation of frozen embeddings.

Within a batch of B samples, every unordered pair (including each sample
with itself when include_self_pairs is on) gets a binary target: 1 if the
two samples share a label, else 0. The pair logit is the scaled dot product
g(u).g(v)/temperature of the projected embeddings, and the loss is sigmoid
binary cross-entropy summed over pairs. Projections of same-label samples
are pulled together, different-label samples pushed apart.

Optimization minimizes the pair-loss *sum*; the per-epoch *mean* pair loss
is what gets logged. With normalized outputs a self-pair has constant logit
1/temperature and contributes zero gradient.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import MultimodalDataset, concat_modalities, require_both_classes
from .network import (
    _SHUFFLE_STREAM,
    AdamState,
    ProjectionHead,
    TrainConfig,
    TrainingDiverged,
    adam_step,
    head_backward,
    head_forward,
    init_head,
    load_head,
    save_head,
)

PIPELINE_VERSION = 1
MODES = ("single", "permod")


@dataclass(frozen=True)
class PairBatch:
    """Flat pair list: indices u, v (v <= u) and the same-label target."""

    u: np.ndarray
    v: np.ndarray
    same_label: np.ndarray

    @property
    def n_pairs(self) -> int:
        return self.u.shape[0]


def build_pairs(labels: np.ndarray, include_self_pairs: bool = True) -> PairBatch:
    """All within-batch pairs in lexicographic (u, v) order.

    B samples yield B(B+1)/2 pairs with self-pairs, B(B-1)/2 without.
    """
    labels = np.asarray(labels, np.int64)
    b = labels.shape[0]
    if b < 2:
        raise ValueError("a pair batch needs at least 2 samples")
    u, v = np.tril_indices(b, k=0 if include_self_pairs else -1)
    u = u.astype(np.int64)
    v = v.astype(np.int64)
    return PairBatch(u=u, v=v, same_label=(labels[u] == labels[v]).astype(np.int64))


def pair_logit(pu: np.ndarray, pv: np.ndarray, temperature: float) -> float:
    """Scaled dot product of two projected vectors."""
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    return float(np.dot(pu, pv) / temperature)


def pair_balance_weights(pairs: PairBatch) -> np.ndarray:
    """Inverse-frequency weight per pair: n_pairs / count(same_label value)."""
    n = pairs.n_pairs
    n_same = int(pairs.same_label.sum())
    n_diff = n - n_same
    if n_same == 0 or n_diff == 0:
        return np.ones(n)
    return np.where(pairs.same_label == 1, n / n_same, n / n_diff)


def contrastive_loss(
    projections: np.ndarray,
    pairs: PairBatch,
    temperature: float,
    pair_weights: np.ndarray | None = None,
) -> tuple[float, np.ndarray]:
    """Summed sigmoid BCE over pairs and its gradient w.r.t. projections.

    Per pair with logit s and target l the loss is
    l*softplus(-s) + (1-l)*softplus(s) = softplus(s) - l*s, computed in that
    stable form; d(loss)/ds = sigmoid(s) - l.
    """
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    if pairs.n_pairs == 0:
        raise ValueError("empty pair set")
    G = np.asarray(projections, np.float64)
    s = np.einsum("ij,ij->i", G[pairs.u], G[pairs.v]) / temperature
    ell = pairs.same_label.astype(np.float64)
    per_pair = np.logaddexp(0.0, s) - ell * s
    dloss_ds = 0.5 * (1.0 + np.tanh(0.5 * s)) - ell  # sigmoid(s) - l, stable
    if pair_weights is not None:
        w = np.asarray(pair_weights, np.float64)
        per_pair = per_pair * w
        dloss_ds = dloss_ds * w
    loss = float(per_pair.sum())
    # scatter pair coefficients into a (B, B) matrix; dG = (C + C^T) G / tau.
    # The diagonal doubles naturally, matching d(g.g)/dg = 2g for self-pairs.
    b = G.shape[0]
    C = np.zeros((b, b))
    np.add.at(C, (pairs.u, pairs.v), dloss_ds)
    grad = (C + C.T) @ G / temperature
    return loss, grad


def _epoch_batches(n: int, batch_size: int, rng: np.random.Generator):
    """Shuffled batch index lists; a final short batch is kept only if >= 2."""
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        chunk = order[start : start + batch_size]
        if chunk.shape[0] >= 2:
            yield chunk


def train_head(
    X: np.ndarray,
    labels: np.ndarray,
    config: TrainConfig,
    seed: int | None = None,
) -> tuple[ProjectionHead, list[float]]:
    """Train one projection head; returns (head, per-epoch mean pair loss).

    epochs=0 returns the freshly initialized head untouched.
    """
    config.validate()
    X = np.asarray(X, np.float64)
    labels = np.asarray(labels, np.int64)
    if X.shape[0] != labels.shape[0]:
        raise ValueError("X and labels row counts differ")
    if X.shape[0] < 2:
        raise ValueError("training needs at least 2 samples")
    require_both_classes(labels)
    seed = config.seed if seed is None else int(seed)

    head = init_head(X.shape[1], config, seed)
    state = AdamState.for_params(head.weights, head.biases)
    curve: list[float] = []
    n = X.shape[0]
    for epoch in range(config.epochs):
        rng = np.random.default_rng([seed, _SHUFFLE_STREAM, epoch])
        loss_sum = 0.0
        pair_count = 0
        for chunk in _epoch_batches(n, config.batch_size, rng):
            G, cache = head_forward(head, X[chunk], with_cache=True)
            pairs = build_pairs(labels[chunk], config.include_self_pairs)
            weights = pair_balance_weights(pairs) if config.balance_pairs else None
            loss, dG = contrastive_loss(G, pairs, config.temperature, weights)
            if not np.isfinite(loss):
                raise TrainingDiverged(f"non-finite loss at epoch {epoch}")
            dWs, dbs = head_backward(head, cache, dG)
            adam_step(head.weights, head.biases, dWs, dbs, state, config.learning_rate)
            loss_sum += loss
            pair_count += pairs.n_pairs
        curve.append(loss_sum / pair_count)
    return head, curve


@dataclass
class AdaptedPipeline:
    """Trained projection stage: one shared head or one head per modality."""

    mode: str
    heads: list[ProjectionHead]
    modality_names: tuple[str, ...]
    modality_dims: tuple[int, ...]

    @property
    def output_dim(self) -> int:
        return sum(h.output_dim for h in self.heads)


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")


def adapt(
    ds: MultimodalDataset,
    mode: str,
    config: TrainConfig,
    workers: int = 1,
) -> tuple[AdaptedPipeline, dict[str, list[float]]]:
    """Train the projection stage on a dataset.

    single: one head on the concatenated modalities, seeded with config.seed.
    permod: one head per modality j, seeded with config.seed XOR j; heads are
    independent, so any training schedule (sequential or workers > 1 threads)
    produces bit-identical results.

    Returns (pipeline, loss curves keyed by head name).
    """
    _check_mode(mode)
    config.validate()
    require_both_classes(ds.labels)
    if mode == "single":
        X = concat_modalities(ds)
        head, curve = train_head(X, ds.labels, config, seed=config.seed)
        pipeline = AdaptedPipeline("single", [head], ds.modality_names, ds.dims)
        return pipeline, {"single": curve}

    seeds = [config.seed ^ j for j in range(ds.n_modalities)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(train_head, ds.modalities[j], ds.labels, config, seeds[j])
                for j in range(ds.n_modalities)
            ]
            results = [f.result() for f in futures]
    else:
        results = [
            train_head(ds.modalities[j], ds.labels, config, seeds[j])
            for j in range(ds.n_modalities)
        ]
    heads = [head for head, _ in results]
    curves = {name: curve for name, (_, curve) in zip(ds.modality_names, results)}
    pipeline = AdaptedPipeline("permod", heads, ds.modality_names, ds.dims)
    return pipeline, curves


def apply_pipeline(pipeline: AdaptedPipeline, ds: MultimodalDataset) -> np.ndarray:
    """Project a dataset with a trained pipeline; rows align with ds."""
    if ds.dims != tuple(pipeline.modality_dims):
        raise ValueError(
            f"dataset dims {ds.dims} do not match pipeline dims "
            f"{tuple(pipeline.modality_dims)}"
        )
    if pipeline.mode == "single":
        return head_forward(pipeline.heads[0], concat_modalities(ds))
    parts = [head_forward(h, m) for h, m in zip(pipeline.heads, ds.modalities)]
    return np.concatenate(parts, axis=1)


def save_pipeline(pipeline: AdaptedPipeline, out_dir) -> Path:
    """Write pipeline.json plus one head_*.npz per head; returns manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    head_names = (
        ["single"] if pipeline.mode == "single" else list(pipeline.modality_names)
    )
    head_files = []
    for name, head in zip(head_names, pipeline.heads):
        fname = f"head_{name}.npz"
        save_head(head, out / fname)
        head_files.append(fname)
    manifest = {
        "version": PIPELINE_VERSION,
        "kind": "contrastive",
        "mode": pipeline.mode,
        "modality_names": list(pipeline.modality_names),
        "modality_dims": list(pipeline.modality_dims),
        "heads": head_files,
    }
    path = out / "pipeline.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def load_pipeline(manifest_path) -> AdaptedPipeline:
    manifest_path = Path(manifest_path)
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    if manifest.get("version") != PIPELINE_VERSION:
        raise ValueError(f"unsupported pipeline version: {manifest.get('version')}")
    if manifest.get("kind") != "contrastive":
        raise ValueError(f"not a contrastive pipeline: kind={manifest.get('kind')!r}")
    _check_mode(manifest["mode"])
    heads = [load_head(manifest_path.parent / f) for f in manifest["heads"]]
    return AdaptedPipeline(
        mode=manifest["mode"],
        heads=heads,
        modality_names=tuple(manifest["modality_names"]),
        modality_dims=tuple(manifest["modality_dims"]),
    )
