"""Multimodal embedding datasets: container, file formats, synthetic generator.

File formats
------------
Embedding CSV: header ``id,dim_0,...,dim_{d-1}``, one row per sample, values
written with shortest round-trip decimal rendering (``repr`` of a Python
float), so save -> load is exact.

Label CSV: header ``id,label`` with labels in {0, 1}.

Dataset manifest (JSON)::

    {"version": 1,
     "modalities": [{"name": "m0", "path": "m0.csv"}, ...],
     "labels": "labels.csv"}

Paths are resolved relative to the manifest's directory. Loading
canonicalizes row order by sorting sample ids lexicographically, so the
in-memory dataset is a pure function of file contents, independent of row
order on disk. The synthetic generator zero-pads ids so the lexicographic
order is also the numeric one.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MANIFEST_VERSION = 1

NONLINEARITIES = ("none", "xor-rotate")


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class MultimodalDataset:
    """Aligned embedding matrices (one per modality) plus binary labels.

    Immutable after construction; arrays are marked read-only. Row i of every
    modality, labels[i], and sample_ids[i] all describe the same sample.
    """

    modality_names: tuple[str, ...]
    modalities: tuple[np.ndarray, ...]
    labels: np.ndarray
    sample_ids: tuple[str, ...]

    def __post_init__(self):
        if len(self.modality_names) != len(self.modalities):
            raise ValueError("modality_names and modalities length mismatch")
        if len(self.modalities) == 0:
            raise ValueError("dataset needs at least one modality")
        if len(set(self.modality_names)) != len(self.modality_names):
            raise ValueError("duplicate modality name")
        n = len(self.sample_ids)
        if len(set(self.sample_ids)) != n:
            raise ValueError("duplicate sample id")
        labels = np.ascontiguousarray(self.labels, np.int64)
        if labels.shape != (n,):
            raise ValueError("labels must be 1-D and aligned with sample_ids")
        bad = (labels != 0) & (labels != 1)
        if np.any(bad):
            raise ValueError(f"label outside {{0,1}}: {labels[bad][0]}")
        mats = []
        for name, mat in zip(self.modality_names, self.modalities):
            mat = np.ascontiguousarray(mat, np.float64)
            if mat.ndim != 2 or mat.shape[0] != n:
                raise ValueError(f"modality {name!r} must be (n_samples, dim)")
            if not np.all(np.isfinite(mat)):
                raise ValueError(f"non-finite value in modality {name!r}")
            mats.append(_freeze(mat))
        object.__setattr__(self, "modalities", tuple(mats))
        object.__setattr__(self, "labels", _freeze(labels))
        object.__setattr__(self, "sample_ids", tuple(self.sample_ids))
        object.__setattr__(self, "modality_names", tuple(self.modality_names))

    @property
    def n_samples(self) -> int:
        return len(self.sample_ids)

    @property
    def n_modalities(self) -> int:
        return len(self.modalities)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(m.shape[1] for m in self.modalities)

    def subset(self, indices) -> "MultimodalDataset":
        """New dataset holding the given rows, in the given order."""
        idx = np.asarray(indices, np.int64)
        return MultimodalDataset(
            modality_names=self.modality_names,
            modalities=tuple(m[idx] for m in self.modalities),
            labels=self.labels[idx],
            sample_ids=tuple(self.sample_ids[i] for i in idx),
        )


def concat_modalities(ds: MultimodalDataset) -> np.ndarray:
    """Column-wise concatenation in modality order; (n, sum(dims))."""
    if ds.n_modalities == 1:
        return np.array(ds.modalities[0])
    return np.concatenate(ds.modalities, axis=1)


def require_both_classes(labels: np.ndarray) -> None:
    """Raise if labels does not contain both classes (training precondition)."""
    if labels.size == 0 or int(labels.min()) == int(labels.max()):
        raise ValueError("training requires both classes present in labels")


# ---------------------------------------------------------------------------
# CSV / manifest I/O


def _fmt(x: float) -> str:
    return repr(float(x))


def save_embeddings(matrix: np.ndarray, sample_ids, path) -> None:
    """Write an embedding CSV (header id,dim_0,...,dim_{d-1})."""
    matrix = np.asarray(matrix, np.float64)
    if matrix.ndim != 2:
        raise ValueError("embedding matrix must be 2-D")
    if matrix.shape[0] != len(sample_ids):
        raise ValueError("row count does not match number of sample ids")
    d = matrix.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id"] + [f"dim_{j}" for j in range(d)])
        for sid, row in zip(sample_ids, matrix):
            writer.writerow([sid] + [_fmt(v) for v in row])


def load_embeddings(path) -> tuple[list[str], np.ndarray]:
    """Read an embedding CSV; returns (ids, matrix) in file row order."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, expected a header row")
        if len(header) < 1 or header[0] != "id":
            raise ValueError(f"{path}: first header column must be 'id'")
        d = len(header) - 1
        expected = [f"dim_{j}" for j in range(d)]
        if header[1:] != expected:
            raise ValueError(f"{path}: dimension columns must be dim_0..dim_{d-1}")
        ids: list[str] = []
        rows: list[np.ndarray] = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != d + 1:
                raise ValueError(f"{path}:{lineno}: expected {d + 1} columns")
            ids.append(rec[0])
            try:
                rows.append(np.asarray(rec[1:], np.float64))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: non-numeric value") from exc
    matrix = np.vstack(rows) if rows else np.empty((0, d), np.float64)
    if not np.all(np.isfinite(matrix)):
        raise ValueError(f"{path}: non-finite embedding value")
    return ids, matrix


def save_labels(labels: np.ndarray, sample_ids, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "label"])
        for sid, lab in zip(sample_ids, labels):
            writer.writerow([sid, int(lab)])


def load_labels(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["id", "label"]:
            raise ValueError(f"{path}: label header must be 'id,label'")
        ids: list[str] = []
        labs: list[int] = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != 2:
                raise ValueError(f"{path}:{lineno}: expected 2 columns")
            try:
                val = int(rec[1])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: non-integer label") from exc
            if val not in (0, 1):
                raise ValueError(f"{path}:{lineno}: label outside {{0,1}}: {val}")
            ids.append(rec[0])
            labs.append(val)
    return ids, np.asarray(labs, np.int64)


def write_dataset(ds: MultimodalDataset, out_dir, force: bool = False) -> Path:
    """Write modality CSVs, labels.csv and manifest.json; returns manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not force and any(out.iterdir()):
        raise FileExistsError(f"{out}: directory not empty (use force to overwrite)")
    entries = []
    for name, mat in zip(ds.modality_names, ds.modalities):
        fname = f"{name}.csv"
        save_embeddings(mat, ds.sample_ids, out / fname)
        entries.append({"name": name, "path": fname})
    save_labels(ds.labels, ds.sample_ids, out / "labels.csv")
    manifest = {
        "version": MANIFEST_VERSION,
        "modalities": entries,
        "labels": "labels.csv",
    }
    manifest_path = out / "manifest.json"
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest_path


def load_dataset(manifest_path) -> MultimodalDataset:
    """Load a dataset from its manifest; row order canonicalized by id.

    Every modality file and the label file must cover exactly the same id
    set; samples missing any modality are rejected rather than imputed.
    """
    manifest_path = Path(manifest_path)
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    if manifest.get("version") != MANIFEST_VERSION:
        raise ValueError(f"unsupported dataset manifest version: {manifest.get('version')}")
    base = manifest_path.parent
    label_ids, labels = load_labels(base / manifest["labels"])
    if len(set(label_ids)) != len(label_ids):
        raise ValueError("duplicate sample id in label file")
    order = sorted(range(len(label_ids)), key=lambda i: label_ids[i])
    canon_ids = [label_ids[i] for i in order]
    labels = labels[order]

    names: list[str] = []
    mats: list[np.ndarray] = []
    id_set = set(canon_ids)
    for entry in manifest["modalities"]:
        name = entry["name"]
        ids, mat = load_embeddings(base / entry["path"])
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate sample id in modality {name!r}")
        if set(ids) != id_set:
            missing = sorted(id_set.symmetric_difference(ids))[:3]
            raise ValueError(
                f"modality {name!r} id set does not match labels "
                f"(first differing ids: {missing})"
            )
        pos = {sid: i for i, sid in enumerate(ids)}
        mats.append(mat[[pos[sid] for sid in canon_ids]])
        names.append(name)
    return MultimodalDataset(
        modality_names=tuple(names),
        modalities=tuple(mats),
        labels=labels,
        sample_ids=tuple(canon_ids),
    )


def dataset_fingerprint(ds: MultimodalDataset) -> str:
    """sha256 over ids, labels and modality contents (order-sensitive)."""
    h = hashlib.sha256()
    for sid in ds.sample_ids:
        h.update(sid.encode())
        h.update(b"\x00")
    h.update(np.ascontiguousarray(ds.labels).tobytes())
    for name, mat in zip(ds.modality_names, ds.modalities):
        h.update(name.encode())
        h.update(np.ascontiguousarray(mat).tobytes())
    return h.hexdigest()


# ---------------------------------------------------------------------------
# Synthetic data


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for a synthetic multimodal binary-classification dataset.

    Each modality is `dims[j]` wide; the first `signal_dims[j]` coordinates
    carry label signal, the rest are N(0, noise_sigma^2) noise.

    nonlinearity:
        "none": each signal coordinate has class-conditional mean
            +-signal_offset/2 plus N(0, noise_sigma^2) noise, so the class
            means separate by exactly signal_offset.
        "xor-rotate": signal coordinates form pairs (a, b) with
            a = c(2h-1), b = c(2(h XOR y)-1), h ~ Bernoulli(1/2),
            c = signal_offset/2: the product ab = c^2(1-2y) encodes the
            label while every coordinate mean is 0, so linear models are
            blind. Signal coordinates get N(0, noise_sigma^2 - c^2) residual
            noise when c <= noise_sigma, which makes the population
            covariance exactly isotropic (PCA is blind too). The whole
            modality is finally rotated by a seeded dense orthogonal matrix
            so no raw axis aligns with the signal plane. Requires
            signal_dims[j] even.
    """

    n_samples: int
    n_modalities: int
    dims: tuple[int, ...]
    signal_dims: tuple[int, ...]
    noise_sigma: float = 1.0
    class_balance: float = 0.5
    nonlinearity: str = "none"
    signal_offset: float = 1.0
    seed: int = 0

    def validate(self) -> None:
        if self.n_samples < 2:
            raise ValueError("n_samples must be >= 2")
        if self.n_modalities < 1:
            raise ValueError("n_modalities must be >= 1")
        if len(self.dims) != self.n_modalities:
            raise ValueError("dims length must equal n_modalities")
        if len(self.signal_dims) != self.n_modalities:
            raise ValueError("signal_dims length must equal n_modalities")
        for d, s in zip(self.dims, self.signal_dims):
            if d < 1:
                raise ValueError("modality dims must be >= 1")
            if not 0 <= s <= d:
                raise ValueError("signal_dims must lie in [0, dim]")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if not 0.0 < self.class_balance < 1.0:
            raise ValueError("class_balance must lie strictly between 0 and 1")
        if self.nonlinearity not in NONLINEARITIES:
            raise ValueError(f"nonlinearity must be one of {NONLINEARITIES}")
        if self.signal_offset <= 0:
            raise ValueError("signal_offset must be positive")
        if self.nonlinearity == "xor-rotate":
            for s in self.signal_dims:
                if s % 2 != 0 or s < 2:
                    raise ValueError("xor-rotate needs an even signal_dims >= 2")


@dataclass(frozen=True)
class SynthLatents:
    """Generator-internal coordinates, for verifying learnability claims."""

    signals: tuple[np.ndarray, ...]    # per modality: (n, signal_dims) pre-noise
    rotations: tuple[np.ndarray, ...]  # per modality: (d, d) orthogonal (or empty)


def _random_rotation(d: int, rng: np.random.Generator) -> np.ndarray:
    """Seeded dense orthogonal matrix: QR of a Gaussian, R_ii sign-fixed."""
    q, r = np.linalg.qr(rng.normal(size=(d, d)))
    return q * np.sign(np.diag(r))


def generate_synthetic(
    spec: SynthSpec, return_latents: bool = False
) -> MultimodalDataset | tuple[MultimodalDataset, SynthLatents]:
    """Generate a dataset per spec; bit-identical for equal specs.

    Draw order is fixed (labels, then per modality: XOR bits if any, a full
    (n, dim) noise block, the rotation matrix), so generated values are a
    pure function of the spec, including its seed.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    n = spec.n_samples
    labels = (rng.random(n) < spec.class_balance).astype(np.int64)
    c = spec.signal_offset / 2.0

    mats: list[np.ndarray] = []
    latent_signals: list[np.ndarray] = []
    rotations: list[np.ndarray] = []
    for j in range(spec.n_modalities):
        d = spec.dims[j]
        s = spec.signal_dims[j]
        if spec.nonlinearity == "xor-rotate" and s > 0:
            n_pairs = s // 2
            h = rng.integers(0, 2, size=(n, n_pairs))
            latent = np.empty((n, s), np.float64)
            latent[:, 0::2] = c * (2.0 * h - 1.0)
            latent[:, 1::2] = c * (2.0 * (h ^ labels[:, None]) - 1.0)
            noise = rng.normal(size=(n, d))
            resid_sd = math.sqrt(max(spec.noise_sigma**2 - c**2, 0.0))
            mat = np.empty((n, d), np.float64)
            mat[:, :s] = latent + resid_sd * noise[:, :s]
            mat[:, s:] = spec.noise_sigma * noise[:, s:]
            rot = _random_rotation(d, rng)
            mat = mat @ rot.T
            rotations.append(rot)
        else:
            latent = np.tile(
                ((labels - 0.5) * spec.signal_offset)[:, None], (1, s)
            ).astype(np.float64)
            noise = rng.normal(size=(n, d))
            mat = spec.noise_sigma * noise
            mat[:, :s] += latent
            rotations.append(np.empty((0, 0), np.float64))
        mats.append(mat)
        latent_signals.append(latent)

    width = len(str(n - 1))
    ids = tuple(f"s{i:0{width}d}" for i in range(n))
    ds = MultimodalDataset(
        modality_names=tuple(f"m{j}" for j in range(spec.n_modalities)),
        modalities=tuple(mats),
        labels=labels,
        sample_ids=ids,
    )
    if not return_latents:
        return ds
    return ds, SynthLatents(tuple(latent_signals), tuple(rotations))
