"""warpalign: weakly supervised temporal video alignment, desk scale.

Learns per-frame embeddings from pairs of videos of the same action by
matching frame-similarity distributions to index-based priors (same
video) or priors propagated through a dynamic-time-warping path (cross
video), regularized by a differentiable soft alignment cost. Ships an
exact DTW, a soft DTW with analytic gradients, a compact trainable
encoder, a synthetic benchmark with known ground truth, the standard
alignment metrics, and a CLI.

The dynamic-programming kernels have a compiled core with a pure-Python
fallback; ``warpalign.BACKEND`` reports which one is active.
"""

from ._kernels import BACKEND
from .alignment import (
    alignment_matrix,
    distance_matrix,
    dtw_accumulated,
    dtw_cost,
    dtw_path,
    enumerate_paths,
    path_cost,
    validate_path,
)
from .encoder import EncoderParams, encode, init_params
from .errors import (
    CheckpointError,
    CheckpointFormatError,
    CheckpointVersionError,
    ConfigError,
    EnumerationLimitError,
    InfiniteDivergenceError,
    InvalidInputError,
    NonFiniteLossError,
)
from .metrics import EvalReport, evaluate
from .objectives import (
    HyperParams,
    LossReport,
    kl_row,
    pair_loss,
    propagation_prior,
    same_video_prior,
    similarity_distribution,
)
from .sampling import SampledClip, augment, build_batch, sample_clip
from .softdtw import soft_min, softdtw_cost, softdtw_grad_wrt_distance
from .synthdata import SyntheticVideo, generate_dataset, ground_truth_alignment
from .trainer import OptimizerState, TrainConfig, load_checkpoint, save_checkpoint, train

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CheckpointError",
    "CheckpointFormatError",
    "CheckpointVersionError",
    "ConfigError",
    "EncoderParams",
    "EnumerationLimitError",
    "EvalReport",
    "HyperParams",
    "InfiniteDivergenceError",
    "InvalidInputError",
    "LossReport",
    "NonFiniteLossError",
    "OptimizerState",
    "SampledClip",
    "SyntheticVideo",
    "TrainConfig",
    "alignment_matrix",
    "augment",
    "build_batch",
    "distance_matrix",
    "dtw_accumulated",
    "dtw_cost",
    "dtw_path",
    "encode",
    "enumerate_paths",
    "evaluate",
    "generate_dataset",
    "ground_truth_alignment",
    "init_params",
    "kl_row",
    "load_checkpoint",
    "pair_loss",
    "path_cost",
    "propagation_prior",
    "same_video_prior",
    "sample_clip",
    "save_checkpoint",
    "similarity_distribution",
    "soft_min",
    "softdtw_cost",
    "softdtw_grad_wrt_distance",
    "train",
    "validate_path",
]
