"""
PTA U-Net
=========

Segmentation U-Net with a MobileNetV2 encoder whose Post-Train Adaptive (PTA)
blocks switch between light, heavy and averaged branches after training,
on a small numpy autodiff engine.
"""

from .model import build_model, strip_pta, ModelConfig, SegModel, save_checkpoint, load_checkpoint
from .pta import PtaConfig, parse_config, apply_config, current_config, SamplingStrategy, DEFAULT_STRATEGY, EVAL_CONFIGS
from .training import TrainConfig, train, evaluate, evaluate_configs, dice_score, dice_loss
from .data import load_camvid, make_synthetic, letterbox, augment, SegSample, DatasetSplit
from .constants import BranchMode
from .errors import PtaError, ShapeError, ConfigError, DataError, CheckpointError, NumericalError, AutodiffError
