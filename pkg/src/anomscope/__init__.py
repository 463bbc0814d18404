"""Frame-based crowd anomaly detection.

Per-frame descriptors combine scale-normalized Laplacian-of-Gaussian blob
statistics with uniform local-binary-pattern texture histograms; a small
from-scratch sigmoid MLP classifies each frame as normal or anomalous.
"""

from .errors import AnomscopeError
from .frames import (
    Frame,
    LabeledSequence,
    frame_from_array,
    load_frame,
    load_frames,
    load_sequence,
    read_labels,
    write_pgm,
)
from .lbp import (
    N_BINS,
    NON_UNIFORM_BIN,
    UNIFORM_CODES,
    cell_histogram,
    circular_transitions,
    code_map,
    lbp_code,
    lbp_descriptor,
    uniform_bin_index,
)
from .mlp import (
    DetectionResult,
    MlpModel,
    TrainConfig,
    apply_updates,
    backward,
    cost,
    forward,
    fuse,
    gradient_check,
    init_model,
    load_model,
    predict,
    save_model,
    train,
)
from .pipeline import (
    EvalReport,
    PipelineConfig,
    SequenceEval,
    evaluate,
    extract_features,
    f_score,
    load_config,
    parse_config,
    serialize_config,
)
from .scalespace import (
    DEFAULT_SCALES,
    Kernel,
    Keypoint,
    ResponseMap,
    convolve,
    detect_scale_space_extrema,
    gaussian_kernel,
    log_descriptor,
    log_response,
    scale_normalized_log,
)

__version__ = "0.1.0"

__all__ = [
    "AnomscopeError",
    "DEFAULT_SCALES",
    "DetectionResult",
    "EvalReport",
    "Frame",
    "Kernel",
    "Keypoint",
    "LabeledSequence",
    "MlpModel",
    "N_BINS",
    "NON_UNIFORM_BIN",
    "PipelineConfig",
    "ResponseMap",
    "SequenceEval",
    "TrainConfig",
    "UNIFORM_CODES",
    "apply_updates",
    "backward",
    "cell_histogram",
    "circular_transitions",
    "code_map",
    "convolve",
    "cost",
    "detect_scale_space_extrema",
    "evaluate",
    "extract_features",
    "f_score",
    "forward",
    "frame_from_array",
    "fuse",
    "gaussian_kernel",
    "gradient_check",
    "init_model",
    "lbp_code",
    "lbp_descriptor",
    "load_config",
    "load_frame",
    "load_frames",
    "load_model",
    "load_sequence",
    "log_descriptor",
    "log_response",
    "parse_config",
    "predict",
    "read_labels",
    "save_model",
    "scale_normalized_log",
    "serialize_config",
    "train",
    "uniform_bin_index",
    "write_pgm",
]
