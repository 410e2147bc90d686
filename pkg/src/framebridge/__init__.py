"""Bidirectional diffusion sampling for keyframe interpolation, verified
against analytic Gaussian posteriors."""

from ._kernels import available_backends, backend_name, use_backend
from .denoiser import (
    BridgeResult,
    DenoisedPair,
    DenoiserModel,
    GaussianVideoModel,
    GmmVideoModel,
    PreconditionedDenoiser,
    bridge_oracle,
    gaussian_denoise,
    gmm_denoise,
)
from .errors import (
    ConfigError,
    FrameBridgeError,
    InvalidParameterError,
    NumericalError,
    ShapeMismatchError,
)
from .guidance import (
    GuidanceConfig,
    GuidanceMode,
    LastFrameSelector,
    cfg_combine,
    cg_least_squares,
    dds_guide,
)
from .harness import RunReport, ablate_cfgpp_scale, compare, oracle_stats, run
from .latent import Conditioning, extract_last_frame, flip, lerp
from .metrics import (
    MetricReport,
    bridge_divergence,
    endpoint_error,
    offmanifold_distance,
    smoothness,
)
from .sampler import (
    NoiseStream,
    SamplerConfig,
    SamplerKind,
    TrajectoryRecord,
    bidi_step,
    cfgpp_euler_step,
    euler_step,
    fusion_step,
    renoise,
    sample,
)
from .schedule import PreconditionCoeffs, SigmaSchedule, edm_precondition, karras_schedule

__version__ = "0.1.0"

__all__ = [
    "BridgeResult",
    "Conditioning",
    "ConfigError",
    "DenoisedPair",
    "DenoiserModel",
    "FrameBridgeError",
    "GaussianVideoModel",
    "GmmVideoModel",
    "GuidanceConfig",
    "GuidanceMode",
    "InvalidParameterError",
    "LastFrameSelector",
    "MetricReport",
    "NoiseStream",
    "NumericalError",
    "PreconditionCoeffs",
    "PreconditionedDenoiser",
    "RunReport",
    "SamplerConfig",
    "SamplerKind",
    "ShapeMismatchError",
    "SigmaSchedule",
    "TrajectoryRecord",
    "ablate_cfgpp_scale",
    "available_backends",
    "backend_name",
    "bidi_step",
    "bridge_divergence",
    "bridge_oracle",
    "cfg_combine",
    "cfgpp_euler_step",
    "cg_least_squares",
    "compare",
    "dds_guide",
    "endpoint_error",
    "euler_step",
    "extract_last_frame",
    "flip",
    "fusion_step",
    "gaussian_denoise",
    "gmm_denoise",
    "karras_schedule",
    "lerp",
    "offmanifold_distance",
    "oracle_stats",
    "renoise",
    "run",
    "sample",
    "smoothness",
    "use_backend",
    "edm_precondition",
]
