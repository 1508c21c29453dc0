"""Randomized low-rank completion of rating matrices, with SVT and SVD++ baselines."""

__version__ = "0.1.0"

from pcmrec._backend import BACKEND
from pcmrec.metrics import lcs_rating, ranking_sequence, rate_predictions
from pcmrec.pcm import CompletionResult, PcmConfig, complete, predict_cells
from pcmrec.svdpp import SvdPlusPlusModel, TrainConfig, train
from pcmrec.svt import ObservedSet, SvtConfig, default_svt_params, svt_complete

__all__ = [
    "BACKEND",
    "CompletionResult",
    "ObservedSet",
    "PcmConfig",
    "SvdPlusPlusModel",
    "SvtConfig",
    "TrainConfig",
    "complete",
    "default_svt_params",
    "lcs_rating",
    "predict_cells",
    "ranking_sequence",
    "rate_predictions",
    "svt_complete",
    "train",
]
