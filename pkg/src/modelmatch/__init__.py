"""modelmatch: kernel-mean-embedding specifications and prompt-weighted
matching for identifying conditional generative models in a hub."""

from .assignment import GeneratorHandle, assign_specification, choose_prompt_set
from .encoders import (
    EncoderKind,
    EncoderProfile,
    MockEncoder,
    RemoteEncoder,
    StructuredMockEncoder,
)
from .identifier import ModelIdentifier, identify
from .kernels import (
    DEFAULT_GAMMA,
    KernelConfig,
    WeightedKmePoints,
    kme_inner,
    kme_sq_distance,
    rbf_kernel,
    rbf_kernel_matrix,
)
from .matching import baseline_rank, pmi_score, rank_models, rkme_score
from .metrics import EvalReport, average_rank, frechet_distance, topk_accuracy
from .reduced_set import build_reduced_set
from .registry import ModelHub
from .requirements import generate_requirement, requirement_from_pairs
from .synthetic import SyntheticHubConfig, build_synthetic_hub, load_synthetic_fixture
from .types import (
    IdentificationTask,
    MatchScore,
    ModelRecord,
    PromptOrigin,
    PromptSet,
    RankedResult,
    Requirement,
    Specification,
    validate_specification,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_GAMMA",
    "EncoderKind",
    "EncoderProfile",
    "EvalReport",
    "GeneratorHandle",
    "IdentificationTask",
    "KernelConfig",
    "MatchScore",
    "MockEncoder",
    "ModelHub",
    "ModelIdentifier",
    "ModelRecord",
    "PromptOrigin",
    "PromptSet",
    "RankedResult",
    "RemoteEncoder",
    "Requirement",
    "Specification",
    "StructuredMockEncoder",
    "SyntheticHubConfig",
    "WeightedKmePoints",
    "assign_specification",
    "average_rank",
    "baseline_rank",
    "build_reduced_set",
    "build_synthetic_hub",
    "choose_prompt_set",
    "frechet_distance",
    "generate_requirement",
    "identify",
    "kme_inner",
    "kme_sq_distance",
    "load_synthetic_fixture",
    "pmi_score",
    "rank_models",
    "rbf_kernel",
    "rbf_kernel_matrix",
    "requirement_from_pairs",
    "rkme_score",
    "topk_accuracy",
    "validate_specification",
]
