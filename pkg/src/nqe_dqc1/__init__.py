"""Neural quantum embeddings trained with one-clean-qubit overlap estimates."""
from .featuremap import FeatureMapConfig
from .nqe import NqeTrainConfig, train_nqe
from .pqc import PqcTrainConfig, train_pqc

__version__ = "0.1.0"

__all__ = ["FeatureMapConfig", "NqeTrainConfig", "PqcTrainConfig", "train_nqe", "train_pqc"]
