"""Downstream benchmark: arms x classifiers x stratified folds.

Arms (canonical order): unprojected, contrastive_single, contrastive_permod,
pca_single, pca_permod. Every projection stage is fit on the training rows
of each fold only; test rows never influence any fitted parameter. Cell
seeds are derived from the run seed with canonical (arm, fold, classifier)
ids, so adding or removing arms or classifiers cannot perturb other cells.

The report CSV has a per-fold section (arm,classifier,fold,f1,auc,accuracy),
a summary section (arm,classifier,metric,mean,std; std with denominator
n-1), and, only when cells diverged, a failures section
(arm,classifier,fold,error). Bytes are deterministic for a given dataset,
settings, and seed.
"""

from __future__ import annotations

import io
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .classifiers import CLASSIFIER_KINDS, make_classifier
from .contrastive import AdaptedPipeline, adapt, apply_pipeline
from .data import MultimodalDataset, concat_modalities, dataset_fingerprint
from .network import TrainConfig, TrainingDiverged
from .pca import PcaPipeline, pca_adapt, pca_apply

ARMS = (
    "unprojected",
    "contrastive_single",
    "contrastive_permod",
    "pca_single",
    "pca_permod",
)
_ARM_ID = {name: i for i, name in enumerate(ARMS)}
_CLF_ID = {name: i for i, name in enumerate(CLASSIFIER_KINDS)}

METRICS = ("f1", "auc", "accuracy")

# spawn-key namespaces for seed derivation
_NS_FOLDS = 0
_NS_ARM = 1
_NS_CLASSIFIER = 2


def _derived_seed(seed: int, spawn_key: tuple[int, ...]) -> int:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=spawn_key)
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class FoldPlan:
    """k disjoint test folds covering all samples, plus their complements."""

    folds: tuple[tuple[np.ndarray, np.ndarray], ...]  # (train_idx, test_idx)

    @property
    def k(self) -> int:
        return len(self.folds)


def stratified_kfold(labels: np.ndarray, k: int, seed: int) -> FoldPlan:
    """Seeded stratified k-fold split.

    Each class is shuffled and dealt into k chunks, so per-class counts
    across folds differ by at most one. Errors if any class has fewer than
    k members.
    """
    labels = np.asarray(labels, np.int64)
    if k < 2:
        raise ValueError("k must be >= 2")
    rng = np.random.default_rng(seed)
    test_sets: list[list[np.ndarray]] = [[] for _ in range(k)]
    for cls in (0, 1):
        members = np.nonzero(labels == cls)[0]
        if members.shape[0] < k:
            raise ValueError(
                f"class {cls} has {members.shape[0]} samples, fewer than k={k}"
            )
        shuffled = members[rng.permutation(members.shape[0])]
        for fold_i, chunk in enumerate(np.array_split(shuffled, k)):
            test_sets[fold_i].append(chunk)
    folds = []
    all_idx = np.arange(labels.shape[0])
    for fold_i in range(k):
        test_idx = np.sort(np.concatenate(test_sets[fold_i]))
        mask = np.ones(labels.shape[0], bool)
        mask[test_idx] = False
        folds.append((all_idx[mask], test_idx))
    return FoldPlan(tuple(folds))


@dataclass
class ArmModel:
    """Fitted projection stage for one arm on one training fold."""

    arm: str
    pipeline: AdaptedPipeline | PcaPipeline | None = None

    def transform(self, ds: MultimodalDataset) -> np.ndarray:
        if self.arm == "unprojected":
            return concat_modalities(ds)
        if self.arm.startswith("contrastive"):
            return apply_pipeline(self.pipeline, ds)
        return pca_apply(self.pipeline, ds)


def fit_arm(
    arm: str, train_ds: MultimodalDataset, config: TrainConfig, seed: int
) -> ArmModel:
    """Fit an arm's projection on training rows only."""
    if arm not in _ARM_ID:
        raise ValueError(f"unknown arm {arm!r}; choose from {ARMS}")
    if arm == "unprojected":
        return ArmModel(arm)
    if arm == "contrastive_single":
        pipeline, _ = adapt(train_ds, "single", config.with_seed(seed))
        return ArmModel(arm, pipeline)
    if arm == "contrastive_permod":
        pipeline, _ = adapt(train_ds, "permod", config.with_seed(seed))
        return ArmModel(arm, pipeline)
    mode = "single" if arm == "pca_single" else "permod"
    return ArmModel(arm, pca_adapt(train_ds, mode, config.projection_size))


@dataclass(frozen=True)
class FoldRow:
    arm: str
    classifier: str
    fold: int
    f1: float
    auc: float
    accuracy: float


@dataclass(frozen=True)
class FailureRow:
    arm: str
    classifier: str
    fold: int
    error: str


def _fmt(x: float) -> str:
    return repr(float(x))


@dataclass
class EvalReport:
    """Benchmark results: per-fold metric rows plus any cell failures."""

    fold_rows: list[FoldRow]
    failures: list[FailureRow]
    k: int
    metadata: dict = field(default_factory=dict)

    def summary_rows(self) -> list[tuple[str, str, str, float, float]]:
        """(arm, classifier, metric, mean, std) for cells with all folds ok."""
        by_cell: dict[tuple[str, str], list[FoldRow]] = {}
        for row in self.fold_rows:
            by_cell.setdefault((row.arm, row.classifier), []).append(row)
        failed = {(f.arm, f.classifier) for f in self.failures}
        out = []
        for (arm, clf), rows in by_cell.items():
            if (arm, clf) in failed:
                continue
            for metric in METRICS:
                vals = np.array([getattr(r, metric) for r in rows])
                out.append((arm, clf, metric, float(vals.mean()), float(vals.std(ddof=1))))
        return out

    def cell_mean(self, arm: str, classifier: str, metric: str) -> float:
        for a, c, m, mean, _ in self.summary_rows():
            if (a, c, m) == (arm, classifier, metric):
                return mean
        raise KeyError(f"no summary for cell ({arm}, {classifier}, {metric})")

    def to_csv_string(self) -> str:
        buf = io.StringIO()
        buf.write("arm,classifier,fold,f1,auc,accuracy\n")
        for r in self.fold_rows:
            buf.write(
                f"{r.arm},{r.classifier},{r.fold},"
                f"{_fmt(r.f1)},{_fmt(r.auc)},{_fmt(r.accuracy)}\n"
            )
        buf.write("summary\n")
        buf.write("arm,classifier,metric,mean,std\n")
        for arm, clf, metric, mean, std in self.summary_rows():
            buf.write(f"{arm},{clf},{metric},{_fmt(mean)},{_fmt(std)}\n")
        if self.failures:
            buf.write("failures\n")
            buf.write("arm,classifier,fold,error\n")
            for f in self.failures:
                err = f.error.replace("\n", " ").replace(",", ";")
                buf.write(f"{f.arm},{f.classifier},{f.fold},{err}\n")
        return buf.getvalue()

    def to_csv(self, path) -> None:
        Path(path).write_text(self.to_csv_string())


def _canonical_subset(requested, canonical, what: str) -> tuple[str, ...]:
    if requested is None:
        return tuple(canonical)
    requested = list(requested)
    for name in requested:
        if name not in canonical:
            raise ValueError(f"unknown {what} {name!r}; choose from {tuple(canonical)}")
    if len(set(requested)) != len(requested):
        raise ValueError(f"duplicate {what} requested")
    return tuple(name for name in canonical if name in requested)


def run_comparison(
    ds: MultimodalDataset,
    arms=None,
    classifiers=None,
    config: TrainConfig | None = None,
    k: int = 5,
    seed: int = 0,
) -> EvalReport:
    """Benchmark the requested arms across classifiers with stratified k-fold CV.

    Cells that diverge during training are recorded as failure entries (and
    excluded from summaries) rather than silently scored.
    """
    from .metrics import accuracy_score, auc_score, f1_score

    arms = _canonical_subset(arms, ARMS, "arm")
    classifiers = _canonical_subset(classifiers, CLASSIFIER_KINDS, "classifier")
    config = config or TrainConfig()
    config.validate()
    plan = stratified_kfold(ds.labels, k, _derived_seed(seed, (_NS_FOLDS,)))

    fold_rows: list[FoldRow] = []
    failures: list[FailureRow] = []
    for arm in arms:
        arm_id = _ARM_ID[arm]
        for fold_i, (train_idx, test_idx) in enumerate(plan.folds):
            train_ds = ds.subset(train_idx)
            test_ds = ds.subset(test_idx)
            try:
                model = fit_arm(
                    arm, train_ds, config, _derived_seed(seed, (_NS_ARM, arm_id, fold_i))
                )
                X_train = model.transform(train_ds)
                X_test = model.transform(test_ds)
            except (ValueError, TrainingDiverged, np.linalg.LinAlgError) as exc:
                for clf_name in classifiers:
                    failures.append(FailureRow(arm, clf_name, fold_i, str(exc)))
                continue
            for clf_name in classifiers:
                cell_seed = _derived_seed(
                    seed, (_NS_CLASSIFIER, arm_id, fold_i, _CLF_ID[clf_name])
                )
                try:
                    clf = make_classifier(clf_name, seed=cell_seed)
                    clf.fit(X_train, train_ds.labels)
                    scores = clf.predict_score(X_test)
                    preds = clf.predict(X_test)
                    fold_rows.append(
                        FoldRow(
                            arm=arm,
                            classifier=clf_name,
                            fold=fold_i,
                            f1=f1_score(test_ds.labels, preds),
                            auc=auc_score(test_ds.labels, scores),
                            accuracy=accuracy_score(test_ds.labels, preds),
                        )
                    )
                except (ValueError, TrainingDiverged) as exc:
                    failures.append(FailureRow(arm, clf_name, fold_i, str(exc)))

    fold_rows.sort(key=lambda r: (_ARM_ID[r.arm], _CLF_ID[r.classifier], r.fold))
    failures.sort(key=lambda r: (_ARM_ID[r.arm], _CLF_ID[r.classifier], r.fold))
    return EvalReport(
        fold_rows=fold_rows,
        failures=failures,
        k=k,
        metadata={
            "seed": int(seed),
            "k": int(k),
            "arms": list(arms),
            "classifiers": list(classifiers),
            "dataset_fingerprint": dataset_fingerprint(ds),
        },
    )


@dataclass(frozen=True)
class TimingRow:
    arm: str
    threads: int
    wall_seconds: float


def effective_threads(requested: int) -> int:
    """Clamp a thread budget to the core count.

    The budget is a ceiling, not a demand: pinning BLAS to more threads than
    there are cores makes its spin-waiting workers fight over the CPU and
    slows small matrix products by orders of magnitude.
    """
    if requested < 1:
        raise ValueError("threads must be >= 1")
    return min(int(requested), os.cpu_count() or 1)


def benchmark_timing(
    ds: MultimodalDataset, config: TrainConfig, threads: int = 8
) -> list[TimingRow]:
    """Wall time of per-modality adaptation vs the unprojected baseline's
    classifier fit (default MLP), under a thread-budget ceiling."""
    threads = effective_threads(threads)
    with threadpool_limits(limits=threads):
        t0 = time.perf_counter()
        adapt(ds, "permod", config)
        t_adapt = time.perf_counter() - t0

        X = concat_modalities(ds)
        clf = make_classifier("mlp", seed=config.seed)
        t0 = time.perf_counter()
        clf.fit(X, ds.labels)
        t_fit = time.perf_counter() - t0
    return [
        TimingRow("contrastive_permod", threads, t_adapt),
        TimingRow("unprojected", threads, t_fit),
    ]


def timing_to_csv(rows: list[TimingRow], path) -> None:
    lines = ["arm,threads,wall_seconds"]
    lines += [f"{r.arm},{r.threads},{_fmt(r.wall_seconds)}" for r in rows]
    Path(path).write_text("\n".join(lines) + "\n")
