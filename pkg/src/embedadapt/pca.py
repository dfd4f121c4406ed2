"""PCA baseline: linear dimensionality reduction fit on training folds only.

Components come from an eigendecomposition of the sample covariance
(denominator n-1), sorted by descending explained variance. Sign convention:
each component's largest-magnitude entry is positive, which makes the fit
deterministic. K is capped by min(n-1, d) since at most n-1 directions carry
variance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import MultimodalDataset, concat_modalities

PCA_FILE_VERSION = 1


@dataclass
class PcaModel:
    mean: np.ndarray                # (d,)
    components: np.ndarray          # (K, d), rows orthonormal
    explained_variance: np.ndarray  # (K,), descending

    @property
    def n_components(self) -> int:
        return self.components.shape[0]


def _fix_signs(components: np.ndarray) -> np.ndarray:
    """Flip each row so its largest-|entry| coordinate is positive."""
    lead = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(components.shape[0]), lead])
    signs[signs == 0.0] = 1.0
    return components * signs[:, None]


def pca_fit(X: np.ndarray, n_components: int) -> PcaModel:
    """Fit PCA on rows of X.

    Errors on n_components > min(n-1, d) and on data with zero total
    variance (no principal direction exists).
    """
    X = np.asarray(X, np.float64)
    if X.ndim != 2:
        raise ValueError("X must be 2-D")
    n, d = X.shape
    if n < 2:
        raise ValueError("PCA needs at least 2 samples")
    limit = min(n - 1, d)
    if not 1 <= n_components <= limit:
        raise ValueError(
            f"n_components must lie in [1, {limit}] = [1, min(n-1, d)] "
            f"for n={n}, d={d}; got {n_components}"
        )
    mean = X.mean(axis=0)
    centered = X - mean
    cov = (centered.T @ centered) / (n - 1)
    if float(np.trace(cov)) <= 0.0:
        raise ValueError("PCA is undefined on zero-variance data")
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1][:n_components]
    components = _fix_signs(eigvecs[:, order].T)
    return PcaModel(
        mean=mean,
        components=np.ascontiguousarray(components),
        explained_variance=np.maximum(eigvals[order], 0.0),
    )


def pca_transform(model: PcaModel, X: np.ndarray) -> np.ndarray:
    """Project rows of X: (X - mean) @ components^T."""
    X = np.asarray(X, np.float64)
    if X.ndim != 2 or X.shape[1] != model.mean.shape[0]:
        raise ValueError(
            f"X has width {X.shape[1] if X.ndim == 2 else None}, "
            f"model expects {model.mean.shape[0]}"
        )
    return (X - model.mean) @ model.components.T


@dataclass
class PcaPipeline:
    """PCA projection stage mirroring AdaptedPipeline: single or per-modality."""

    mode: str
    models: list[PcaModel]
    modality_names: tuple[str, ...]
    modality_dims: tuple[int, ...]

    @property
    def output_dim(self) -> int:
        return sum(m.n_components for m in self.models)


def pca_adapt(ds: MultimodalDataset, mode: str, n_components: int) -> PcaPipeline:
    """Fit PCA on a dataset: one model on the concatenation, or one per modality."""
    if mode not in ("single", "permod"):
        raise ValueError("mode must be 'single' or 'permod'")
    if mode == "single":
        models = [pca_fit(concat_modalities(ds), n_components)]
    else:
        models = [pca_fit(m, n_components) for m in ds.modalities]
    return PcaPipeline(mode, models, ds.modality_names, ds.dims)


def pca_apply(pipeline: PcaPipeline, ds: MultimodalDataset) -> np.ndarray:
    if ds.dims != tuple(pipeline.modality_dims):
        raise ValueError(
            f"dataset dims {ds.dims} do not match pipeline dims "
            f"{tuple(pipeline.modality_dims)}"
        )
    if pipeline.mode == "single":
        return pca_transform(pipeline.models[0], concat_modalities(ds))
    parts = [pca_transform(m, mat) for m, mat in zip(pipeline.models, ds.modalities)]
    return np.concatenate(parts, axis=1)


def save_pca_pipeline(pipeline: PcaPipeline, out_dir) -> Path:
    """Write pipeline.json plus one pca_*.npz per model; returns manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = ["single"] if pipeline.mode == "single" else list(pipeline.modality_names)
    files = []
    for name, model in zip(names, pipeline.models):
        fname = f"pca_{name}.npz"
        np.savez(
            out / fname,
            version=np.int64(PCA_FILE_VERSION),
            mean=model.mean,
            components=model.components,
            explained_variance=model.explained_variance,
        )
        files.append(fname)
    manifest = {
        "version": PCA_FILE_VERSION,
        "kind": "pca",
        "mode": pipeline.mode,
        "modality_names": list(pipeline.modality_names),
        "modality_dims": list(pipeline.modality_dims),
        "models": files,
    }
    path = out / "pipeline.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def load_pca_pipeline(manifest_path) -> PcaPipeline:
    manifest_path = Path(manifest_path)
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    if manifest.get("kind") != "pca":
        raise ValueError(f"not a PCA pipeline: kind={manifest.get('kind')!r}")
    if manifest.get("version") != PCA_FILE_VERSION:
        raise ValueError(f"unsupported PCA pipeline version: {manifest.get('version')}")
    models = []
    for fname in manifest["models"]:
        with np.load(manifest_path.parent / fname) as data:
            models.append(
                PcaModel(
                    mean=np.array(data["mean"]),
                    components=np.array(data["components"]),
                    explained_variance=np.array(data["explained_variance"]),
                )
            )
    return PcaPipeline(
        mode=manifest["mode"],
        models=models,
        modality_names=tuple(manifest["modality_names"]),
        modality_dims=tuple(manifest["modality_dims"]),
    )
