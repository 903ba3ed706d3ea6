from .backend import BACKEND_NAME
from .nets import (
    Adam,
    SeqModel,
    SequenceSample,
    SpatialModel,
    TrainerConfig,
    encode_sequence,
    heatmap_coefficients,
    train_seq,
    train_spatial,
)

__all__ = [
    "Adam",
    "BACKEND_NAME",
    "SeqModel",
    "SequenceSample",
    "SpatialModel",
    "TrainerConfig",
    "encode_sequence",
    "heatmap_coefficients",
    "train_seq",
    "train_spatial",
]
