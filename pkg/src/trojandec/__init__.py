"""Occlusion-based trojan trigger detection and restoration for black-box
image feature encoders.

Pipeline: slide random-pattern masks over a test image, query the encoder
for each variant, cluster the similarity metadata with the gap statistic,
and, when two clusters appear, rebuild the image from its least-similar
masked variant.
"""

from .attack import (
    SyntheticTrojanEncoder,
    Trigger,
    default_target_vector,
    embed_blended,
    embed_dynamic,
    embed_patch,
    load_trigger,
    random_trigger,
    save_trigger,
    synthetic_features,
)
from .detection import (
    DetectionConfig,
    DetectionVerdict,
    GapTrace,
    decide,
    detect,
    extract_metadata,
    gap_statistic,
    kmeans_1d,
    load_config,
)
from .encoders import (
    BlockMeanEncoder,
    Encoder,
    RemoteEncoder,
    cosine_similarity,
    encoder_from_config,
)
from .evaluation import (
    CorpusItem,
    LabeledCorpus,
    MetricsReport,
    build_corpus,
    class_centroids,
    detect_corpus,
    eval_detection,
    eval_end_to_end,
    nearest_centroid_label,
    prop1_bound,
    prop1_monte_carlo,
    smooth_field,
    write_verdicts_csv,
)
from .imaging import decode_png, encode_png, resize, round_half_up, validate_image
from .masking import (
    Mask,
    MaskSet,
    apply_mask,
    binary_mask_image,
    create_mask,
    generate_mask_set,
    mask_pattern_rng,
)
from .restoration import (
    HARMONIC,
    REMOTE_DIFFUSION,
    RestorationConfig,
    RestorationRequest,
    RestoredImage,
    inpaint_harmonic,
    restore,
    restore_remote,
    select_prototype,
)

__version__ = "0.1.0"

__all__ = [
    "BlockMeanEncoder",
    "CorpusItem",
    "DetectionConfig",
    "DetectionVerdict",
    "Encoder",
    "GapTrace",
    "HARMONIC",
    "LabeledCorpus",
    "Mask",
    "MaskSet",
    "MetricsReport",
    "REMOTE_DIFFUSION",
    "RemoteEncoder",
    "RestorationConfig",
    "RestorationRequest",
    "RestoredImage",
    "SyntheticTrojanEncoder",
    "Trigger",
    "apply_mask",
    "binary_mask_image",
    "build_corpus",
    "class_centroids",
    "cosine_similarity",
    "create_mask",
    "decide",
    "decode_png",
    "default_target_vector",
    "detect",
    "detect_corpus",
    "embed_blended",
    "embed_dynamic",
    "embed_patch",
    "encode_png",
    "encoder_from_config",
    "eval_detection",
    "eval_end_to_end",
    "extract_metadata",
    "gap_statistic",
    "generate_mask_set",
    "inpaint_harmonic",
    "kmeans_1d",
    "load_config",
    "load_trigger",
    "mask_pattern_rng",
    "nearest_centroid_label",
    "prop1_bound",
    "prop1_monte_carlo",
    "random_trigger",
    "resize",
    "restore",
    "restore_remote",
    "round_half_up",
    "save_trigger",
    "select_prototype",
    "smooth_field",
    "synthetic_features",
    "validate_image",
    "write_verdicts_csv",
]
