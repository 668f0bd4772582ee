"""Low-rank (SVD) training, pruning and finetuning of small networks."""

from ._svdtrain import (
    BlobLengthError,
    Config,
    DimensionError,
    Error,
    IoError,
    ManifestError,
    Model,
    ParameterError,
    VersionError,
    hoyer_loss,
    l1_loss,
    load_checkpoint,
    main,
    orthogonality_loss,
    prune,
    run_pipeline,
    select_prune_set,
    svd,
)

__all__ = [
    "BlobLengthError",
    "Config",
    "DimensionError",
    "Error",
    "IoError",
    "ManifestError",
    "Model",
    "ParameterError",
    "VersionError",
    "hoyer_loss",
    "l1_loss",
    "load_checkpoint",
    "main",
    "orthogonality_loss",
    "prune",
    "run_pipeline",
    "select_prune_set",
    "svd",
]
