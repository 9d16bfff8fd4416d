"""Spatio-temporal deepfake detection toolkit (C++ core bindings)."""

from ._core import (
    Encoder,
    StdeepError,
    __version__,
    build_corpus,
    build_encoder,
    class_precision_table,
    clip_tensor,
    embed_2d,
    filter_by_overlap,
    filter_size_outliers,
    flipped_indices,
    generate_real,
    grad_cam,
    iou,
    load_checkpoint,
    load_frames,
    manifest_fingerprint,
    manifest_records,
    perturb,
    preset_names,
    reported,
    schedule_frames,
    score_split,
    table_from_rates,
    train,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
