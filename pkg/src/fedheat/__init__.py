"""Heat-kernel multi-view fuzzy clustering, centralized and federated."""

from .dataset import FederatedSplit, MultiViewDataset, load_dataset, save_dataset
from .federation import (
    CertificationError,
    ClientState,
    ClientStats,
    FedConfig,
    FederationResult,
    GlobalModel,
    run_federation,
)
from .kernel import fked, hkc_meandev, hkc_minmax, ked1, ked2
from .metrics import MetricReport, accuracy_matched, ari, nmi
from .privacy import PrivacyConfig, budget_schedule, secure_sum
from .solver import ClusterConfig, ClusterModel, fit
from .synthgen import ShapeSpec, assemble_benchmark, load_iris_two_view, partition_federated, validate_generated

__version__ = "0.1.0"

__all__ = [
    "CertificationError",
    "ClientState",
    "ClientStats",
    "ClusterConfig",
    "ClusterModel",
    "FedConfig",
    "FederatedSplit",
    "FederationResult",
    "GlobalModel",
    "MetricReport",
    "MultiViewDataset",
    "PrivacyConfig",
    "ShapeSpec",
    "accuracy_matched",
    "ari",
    "assemble_benchmark",
    "budget_schedule",
    "fit",
    "fked",
    "hkc_meandev",
    "hkc_minmax",
    "ked1",
    "ked2",
    "load_dataset",
    "load_iris_two_view",
    "nmi",
    "partition_federated",
    "run_federation",
    "save_dataset",
    "secure_sum",
    "validate_generated",
]
