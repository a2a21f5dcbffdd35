"""
Model
=====

U-Net+PTA network assembly and checkpoints.

Examples
--------
>>> model = build_model(seed=0, config=ModelConfig.toy())
>>> logits = model(Tensor(np.zeros((1, 3, 64, 64))), config="HLH")
>>> logits.shape
(1, 4, 64, 64)
>>> save_checkpoint(model, "ckpt")
'ckpt/manifest.txt'
"""

from .model import ModelConfig, SegModel, Encoder, DecoderBlock, build_model, strip_pta, make_divisible, as_input
from .checkpoint import save_checkpoint, load_checkpoint, read_manifest, SCHEMA_VERSION
