"""Deterministic federated-learning simulator with privacy layers.

A from-scratch dense-network trainer, sample-weighted federated
averaging, DP-SGD, a logistic-map XOR stream cipher for parameter
transport, non-IID partitioners, and an encrypted missing-feature
imputation protocol, tied together by a reproducible experiment harness.
"""

from .chaos import ChaosKey, CipherBlob, derive_key, keystream_backend
from .config import RunConfig, load_config
from .data import (
    Dataset,
    Even,
    FeatureDistribution,
    ForcedSmall,
    MissingFeatureSpec,
    ParticipantData,
    PartitionSpec,
    Proportions,
)
from .dp import DpConfig, PrivacySpent
from .errors import FedChaosError
from .federation import (
    CipherMode,
    DpMode,
    FederationConfig,
    FederationResult,
    PlainMode,
    run_federation,
)
from .metrics import ExperimentTable, Metrics, build_table
from .nn import ModelParams, NetworkConfig, init_network

__version__ = "0.1.0"

__all__ = [
    "ChaosKey",
    "CipherBlob",
    "CipherMode",
    "Dataset",
    "DpConfig",
    "DpMode",
    "Even",
    "ExperimentTable",
    "FeatureDistribution",
    "FedChaosError",
    "FederationConfig",
    "FederationResult",
    "ForcedSmall",
    "Metrics",
    "MissingFeatureSpec",
    "ModelParams",
    "NetworkConfig",
    "ParticipantData",
    "PartitionSpec",
    "PlainMode",
    "PrivacySpent",
    "Proportions",
    "RunConfig",
    "build_table",
    "derive_key",
    "init_network",
    "keystream_backend",
    "load_config",
    "run_federation",
    "__version__",
]
