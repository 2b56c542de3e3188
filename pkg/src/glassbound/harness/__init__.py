from .checkpoint import CheckpointError, load_checkpoint, load_optimizer_state, save_checkpoint
from .config import PRESETS, TrainConfig
from .evaluate import evaluate, evaluate_model
from .sweep import AXES, ablation_sweep
from .train import NonFiniteLossError, RunRecord, build_dataset, lr_schedule, train

__all__ = [
    "AXES", "CheckpointError", "NonFiniteLossError", "PRESETS", "RunRecord", "TrainConfig",
    "ablation_sweep", "build_dataset", "evaluate", "evaluate_model", "load_checkpoint",
    "load_optimizer_state", "lr_schedule", "save_checkpoint", "train",
]
