"""Joint Bayesian latent-variable modeling of directed networks and item responses."""

from ._numeric import NumericalError
from .model import (
    ChainOutput,
    ItemResponses,
    LatentState,
    ModelConfig,
    NetworkData,
    covariance_blocks,
    expected_network,
    expected_responses,
)
from .sampler import GibbsSampler, run_chain

__version__ = "0.1.0"

__all__ = [
    "ChainOutput",
    "GibbsSampler",
    "ItemResponses",
    "LatentState",
    "ModelConfig",
    "NetworkData",
    "NumericalError",
    "covariance_blocks",
    "expected_network",
    "expected_responses",
    "run_chain",
    "__version__",
]
