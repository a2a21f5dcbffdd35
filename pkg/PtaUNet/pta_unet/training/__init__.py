"""
Training
========

Dice loss, Adam and the PTA-sampling training loop.

Examples
--------
>>> model = build_model(seed=0, config=ModelConfig.toy())
>>> data = make_synthetic(16, n_val=4)
>>> result = train(model, data, TrainConfig(epochs=1, batch_size=4), strategy=DEFAULT_STRATEGY, progress=False)
>>> sorted(result.final_val_dice)
['BBB', 'HHH', 'HHL', 'HLH', 'LHH', 'LLL']
"""

from .loss import dice_score, dice_loss, dice_score_batch, dice_loss_tensor, DiceLoss
from .optim import Adam, AdamState, adam_step
from .metrics import MetricsLog, MetricsRecord, read_metrics
from .trainer import TrainConfig, TrainResult, train, train_step, evaluate, evaluate_configs, predict_proba
