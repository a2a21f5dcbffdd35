"""
NN
==

Layers and composite blocks of the U-Net+PTA network.

Examples
--------
>>> block = PtaBlock(64, 6, np.random.default_rng(0))
>>> block.mode = BranchMode.LIGHT
>>> [name for name, _ in block.children(reachable=True)]
['light']
"""

from .layers import Conv2d, BatchNorm2d, ReLU6, ConvBNReLU6, fan_out_normal
from .blocks import InvertedResidual, PtaBlock, PlainSite
