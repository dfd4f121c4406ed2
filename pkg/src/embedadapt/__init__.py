"""embedadapt: task-specific adaptation of frozen multimodal embeddings.

Frozen encoder outputs are refit to a binary task by training a small
nonlinear projection head per modality (or one shared head) with a
supervised contrastive loss. Adapted embeddings are benchmarked against the
unprojected originals and PCA projections across a panel of from-scratch
classifiers under stratified cross-validation.
"""

__version__ = "0.1.0"

from .contrastive import (
    AdaptedPipeline,
    PairBatch,
    adapt,
    apply_pipeline,
    build_pairs,
    contrastive_loss,
    load_pipeline,
    pair_logit,
    save_pipeline,
    train_head,
)
from .data import (
    MultimodalDataset,
    SynthSpec,
    concat_modalities,
    dataset_fingerprint,
    generate_synthetic,
    load_dataset,
    load_embeddings,
    save_embeddings,
    write_dataset,
)
from .evaluation import (
    ARMS,
    EvalReport,
    FoldPlan,
    benchmark_timing,
    fit_arm,
    run_comparison,
    stratified_kfold,
)
from .classifiers import CLASSIFIER_KINDS, make_classifier
from .metrics import accuracy_score, auc_score, f1_score
from .network import (
    ProjectionHead,
    TrainConfig,
    TrainingDiverged,
    head_forward,
    init_head,
    load_head,
    save_head,
)
from .pca import (
    PcaModel,
    PcaPipeline,
    load_pca_pipeline,
    pca_adapt,
    pca_apply,
    pca_fit,
    pca_transform,
    save_pca_pipeline,
)

__all__ = [
    "__version__",
    "AdaptedPipeline",
    "ARMS",
    "CLASSIFIER_KINDS",
    "EvalReport",
    "FoldPlan",
    "MultimodalDataset",
    "PairBatch",
    "PcaModel",
    "PcaPipeline",
    "ProjectionHead",
    "SynthSpec",
    "TrainConfig",
    "TrainingDiverged",
    "accuracy_score",
    "adapt",
    "apply_pipeline",
    "auc_score",
    "benchmark_timing",
    "build_pairs",
    "concat_modalities",
    "contrastive_loss",
    "dataset_fingerprint",
    "f1_score",
    "fit_arm",
    "generate_synthetic",
    "head_forward",
    "init_head",
    "load_dataset",
    "load_embeddings",
    "load_head",
    "load_pca_pipeline",
    "load_pipeline",
    "make_classifier",
    "pair_logit",
    "pca_adapt",
    "pca_apply",
    "pca_fit",
    "pca_transform",
    "run_comparison",
    "save_embeddings",
    "save_head",
    "save_pca_pipeline",
    "save_pipeline",
    "stratified_kfold",
    "train_head",
    "write_dataset",
]
