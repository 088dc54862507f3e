"""Skeleton-based isolated sign recognition.

Two recognition branches over tracked-skeleton video: a gesture branch
(body-relative displacement descriptors, vector-quantized into discrete
symbols and scored by per-class left-right HMMs) and a hand-posture branch
(depth-segmented hand masks, shape-context bag-of-words, linear multiclass
scoring), combined by a late fusion stage.
"""

__version__ = "0.1.0"

from .skeleton import (
    ALL_JOINTS,
    UPPER_BODY,
    Defect,
    EmptyInputError,
    Joint3D,
    JointId,
    MissingJointError,
    SignflowError,
    SkeletonFrame,
    SkeletonSequence,
    forward_fill,
    select_upper_body,
    validate_sequence,
)
from .descriptors import (
    DescriptorVariant,
    FrameDescriptor,
    ZNormStats,
    apply_znorm,
    compute_hd,
    compute_hd_t,
    compute_rbpd,
    compute_rbpd_t,
    describe_sequence,
    fit_znorm,
)
from .codebook import (
    Codebook,
    SymbolSequence,
    build_codebook,
    encode_sequence,
    fit_kmeans,
    quantize,
    quantize_batch,
)
from .hmm import (
    DiscreteHMM,
    GestureResponse,
    TrainReport,
    baum_welch,
    classify_gesture,
    forward_log_likelihood,
    init_left_right,
)
from .posture import (
    CameraIntrinsics,
    DegenerateContour,
    DepthFrame,
    HandRegion,
    HandSide,
    PostureBoW,
    PostureModel,
    encode_video_bow,
    frame_shape_contexts,
    posture_response,
    sample_contour,
    segment_hand,
    shape_context,
    train_posture_classifier,
)
from .fusion import (
    CoupledResponse,
    KdeFusionModel,
    LinearFusionModel,
    couple,
    predict_kde,
    predict_linear,
    train_kde_fusion,
    train_linear_fusion,
)
from .metrics import (
    ConfusionMatrix,
    MetricsReport,
    confusion,
    precision_recall_fscore,
)
from .dataset import (
    CorruptFileError,
    CsvSchema,
    DatasetManifest,
    MalformedRowError,
    ManifestEntry,
    load_manifest,
    load_mask_archive,
    parse_skeleton_csv,
    save_manifest,
    save_mask_archive,
    write_skeleton_csv,
)
from .synthetic import (
    ClassSpec,
    SyntheticConfig,
    SyntheticCorpus,
    generate_synthetic_corpus,
    load_synthetic_config,
    save_synthetic_config,
    write_corpus,
)
from .bundle import (
    BundleVersionError,
    ModelBundle,
    config_hash,
    load_bundle,
    save_bundle,
)
from .pipeline import (
    CorpusItem,
    EvalResult,
    Prediction,
    evaluate_pipeline,
    items_from_corpus,
    load_items,
    make_config,
    predict_item,
    train_pipeline,
)
from .cli import main, run_cli

__all__ = [
    "ALL_JOINTS",
    "UPPER_BODY",
    "BundleVersionError",
    "ClassSpec",
    "Codebook",
    "ConfusionMatrix",
    "CorpusItem",
    "CameraIntrinsics",
    "CorruptFileError",
    "CoupledResponse",
    "CsvSchema",
    "DatasetManifest",
    "Defect",
    "DegenerateContour",
    "DepthFrame",
    "DescriptorVariant",
    "DiscreteHMM",
    "EmptyInputError",
    "FrameDescriptor",
    "EvalResult",
    "GestureResponse",
    "HandRegion",
    "HandSide",
    "Joint3D",
    "JointId",
    "KdeFusionModel",
    "LinearFusionModel",
    "MalformedRowError",
    "ManifestEntry",
    "MetricsReport",
    "MissingJointError",
    "ModelBundle",
    "PostureBoW",
    "PostureModel",
    "Prediction",
    "SignflowError",
    "SkeletonFrame",
    "SkeletonSequence",
    "SymbolSequence",
    "SyntheticConfig",
    "SyntheticCorpus",
    "TrainReport",
    "ZNormStats",
    "apply_znorm",
    "baum_welch",
    "build_codebook",
    "classify_gesture",
    "compute_hd",
    "compute_hd_t",
    "compute_rbpd",
    "compute_rbpd_t",
    "config_hash",
    "confusion",
    "couple",
    "describe_sequence",
    "encode_sequence",
    "encode_video_bow",
    "evaluate_pipeline",
    "fit_kmeans",
    "fit_znorm",
    "forward_fill",
    "forward_log_likelihood",
    "frame_shape_contexts",
    "generate_synthetic_corpus",
    "init_left_right",
    "items_from_corpus",
    "load_bundle",
    "load_items",
    "load_manifest",
    "load_mask_archive",
    "load_synthetic_config",
    "main",
    "make_config",
    "parse_skeleton_csv",
    "posture_response",
    "precision_recall_fscore",
    "predict_item",
    "predict_kde",
    "predict_linear",
    "quantize",
    "quantize_batch",
    "run_cli",
    "sample_contour",
    "save_bundle",
    "save_manifest",
    "save_mask_archive",
    "save_synthetic_config",
    "segment_hand",
    "select_upper_body",
    "shape_context",
    "train_kde_fusion",
    "train_linear_fusion",
    "train_pipeline",
    "train_posture_classifier",
    "validate_sequence",
    "write_corpus",
    "write_skeleton_csv",
    "__version__",
]
