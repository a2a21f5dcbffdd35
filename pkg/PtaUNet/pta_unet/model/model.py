"""
Model
=====

U-Net with a MobileNetV2 encoder carrying three PTA sites.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from ..constants import (DECODER_CHANNELS, LAST_CHANNELS, MOBILENET_V2_STAGES, N_CLASSES, PTA_STAGES,
						 STEM_CHANNELS)
from ..errors import ConfigError, ShapeError
from ..nn import Conv2d, ConvBNReLU6, InvertedResidual, PlainSite, PtaBlock
from ..objects import Module, Sequential
from ..pta import apply_config, current_config, parse_config
from ..tensor import Tensor, concat_channels, upsample_bilinear2x

logger = logging.getLogger(__name__)


def make_divisible(value, divisor=8, min_value=None):
	""" Round a channel count to a multiple of ``divisor`` without losing more than 10%. """
	min_value = min_value or divisor
	new_value = max(min_value, int(value + divisor / 2) // divisor * divisor)
	if new_value < 0.9 * value:
		new_value += divisor
	return new_value


@dataclass
class ModelConfig:
	"""
	Architecture hyper-parameters.

	Attributes
	----------
	n_classes : int
	width_mult : float
		Encoder width multiplier; 1.0 is stock MobileNetV2.
	decoder_channels : tuple of int
		Output widths of the five decoder stages, deepest first.
	last_channels : int
		Width of the final 1x1 encoder convolution.
	stage_table : tuple of (t, c, n, s)
	pta_stages : tuple of int
		Stage indices whose last two blocks form the heavy branch of a PTA site.
	"""
	n_classes: int = N_CLASSES
	width_mult: float = 1.0
	decoder_channels: tuple = DECODER_CHANNELS
	last_channels: int = LAST_CHANNELS
	stage_table: tuple = MOBILENET_V2_STAGES
	pta_stages: tuple = field(default=PTA_STAGES)

	def __post_init__(self):
		self.decoder_channels = tuple(int(c) for c in self.decoder_channels)
		self.stage_table = tuple(tuple(int(v) for v in row) for row in self.stage_table)
		self.pta_stages = tuple(int(i) for i in self.pta_stages)
		if self.n_classes < 2:
			raise ConfigError(f"n_classes must be >= 2, got {self.n_classes}")
		if self.width_mult <= 0:
			raise ConfigError(f"width_mult must be positive, got {self.width_mult}")
		if len(self.decoder_channels) != 5:
			raise ConfigError(f"decoder needs 5 stage widths, got {self.decoder_channels}")
		if len(self.pta_stages) != 3:
			raise ConfigError(f"exactly 3 PTA sites are required, got stages {self.pta_stages}")
		for index in self.pta_stages:
			if index >= len(self.stage_table) or self.stage_table[index][2] < 3:
				raise ConfigError(f"stage {index} cannot host a PTA site (needs >= 3 blocks)")

	@classmethod
	def toy(cls, n_classes=4):
		""" Narrow network for desk-scale runs; same topology and PTA sites. """
		return cls(n_classes=n_classes, width_mult=0.25, decoder_channels=(32, 24, 16, 16, 8), last_channels=64)

	@property
	def downsampling(self):
		""" Total stride of the encoder; input sides must be multiples of it. """
		return 2 ** (1 + sum(1 for *_, s in self.stage_table if s == 2))


class Encoder(Module):
	"""
	MobileNetV2 feature extractor.

	``features`` lists the stem, the inverted residuals (PTA sites in place of
	the last two blocks of the configured stages) and the final 1x1 conv.
	"""

	def __init__(self, config, rng, pta=True):
		super().__init__()
		in_channels = make_divisible(STEM_CHANNELS * config.width_mult)
		layers = [ConvBNReLU6(3, in_channels, 3, rng, stride=2)]
		for index, (t, c, n, s) in enumerate(config.stage_table):
			out_channels = make_divisible(c * config.width_mult)
			site = index in config.pta_stages
			for i in range(n - 2 if site else n):
				layers.append(InvertedResidual(in_channels, out_channels, s if i == 0 else 1, t, rng))
				in_channels = out_channels
			if site:
				layers.append(PtaBlock(out_channels, t, rng) if pta else PlainSite(out_channels, t, rng))
		layers.append(ConvBNReLU6(in_channels, config.last_channels, 1, rng))
		self.features = Sequential(*layers)

	def forward(self, x):
		"""
		Returns
		-------
		(Tensor, list of Tensor)
			Deepest features and the skip tensors, shallowest first. The input
			image is the first skip; every other skip is the activation right
			before a stride-2 layer.
		"""
		skips = []
		for layer in self.features:
			if layer.stride == 2:
				skips.append(x)
			x = layer(x)
		return x, skips


class DecoderBlock(Module):
	""" Bilinear 2x upsample, concat skip, two 3x3 conv-bn-relu6. """

	def __init__(self, in_channels, skip_channels, out_channels, rng):
		super().__init__()
		self.conv1 = ConvBNReLU6(in_channels + skip_channels, out_channels, 3, rng)
		self.conv2 = ConvBNReLU6(out_channels, out_channels, 3, rng)

	def forward(self, x, skip):
		x = concat_channels(upsample_bilinear2x(x), skip)
		return self.conv2(self.conv1(x))


class SegModel(Module):
	"""
	Assembled U-Net+PTA network.

	Attributes
	----------
	config : ModelConfig
	encoder : Encoder
	decoder : Sequential of DecoderBlock
	head : Conv2d
		1x1 convolution with bias to ``n_classes`` logits.
	has_pta : bool
	"""

	def __init__(self, config, rng, pta=True):
		super().__init__()
		self.config = config
		self.has_pta = pta
		self.encoder = Encoder(config, rng, pta=pta)

		skip_channels = [3] + [layer.in_channels for layer in self.encoder.features if layer.stride == 2][1:]
		in_channels = config.last_channels
		blocks = []
		for out_channels, skip in zip(config.decoder_channels, reversed(skip_channels)):
			blocks.append(DecoderBlock(in_channels, skip, out_channels, rng))
			in_channels = out_channels
		self.decoder = Sequential(*blocks)
		self.head = Conv2d(in_channels, config.n_classes, 1, rng, bias=True)
		self.assign_qualnames()

	def extra_repr(self):
		return f"n_classes={self.config.n_classes}, width={self.config.width_mult}, pta={self.has_pta}"

	@property
	def pta_sites(self):
		""" (name, PtaBlock) pairs ordered shallow to deep; empty for the baseline. """
		return [(name, module) for name, module in self.named_modules() if isinstance(module, PtaBlock)]

	@property
	def site_names(self):
		return [name for name, module in self.named_modules() if isinstance(module, (PtaBlock, PlainSite))]

	def forward(self, x, config=None):
		"""
		Compute logits.

		Parameters
		----------
		x : Tensor or np.ndarray
			(N, 3, H, W), H and W multiples of the encoder stride (32).
		config : PtaConfig or str, optional
			Applied before running; the current configuration is used otherwise.

		Returns
		-------
		Tensor
			(N, n_classes, H, W).
		"""
		if config is not None:
			if not self.has_pta:
				raise ConfigError("the baseline model has no PTA sites to configure")
			apply_config(self, parse_config(config) if isinstance(config, str) else config)
		x = as_input(x)
		step = self.config.downsampling
		if x.ndim != 4 or x.shape[1] != 3 or x.shape[2] % step or x.shape[3] % step:
			raise ShapeError(f"model input must be (N, 3, H, W) with H, W multiples of {step}, got {x.shape}")
		features, skips = self.encoder(x)
		for block, skip in zip(self.decoder, reversed(skips)):
			features = block(features, skip)
		return self.head(features)

	@property
	def active_config(self):
		return current_config(self) if self.has_pta else None


def build_model(seed=0, n_classes=N_CLASSES, config=None, pta=True):
	"""
	Build a freshly initialised network.

	Parameters
	----------
	seed : int
		Seed of the initialisation generator; equal seeds give bitwise-equal parameters.
	n_classes : int
		Ignored when ``config`` is given.
	config : ModelConfig, optional
	pta : bool
		False builds the baseline network (heavy pairs only).

	Returns
	-------
	SegModel
	"""
	config = config or ModelConfig(n_classes=n_classes)
	model = SegModel(config, np.random.default_rng(seed), pta=pta)
	logger.debug("built %r with %d parameters", model, model.num_parameters())
	return model


def strip_pta(model):
	"""
	Baseline clone of a PTA model holding its heavy-branch weights.

	The clone's parameter names are the PTA model's names minus every light
	branch, so its forward pass equals the PTA model's forward under HHH.
	"""
	clone = SegModel(model.config, np.random.default_rng(0), pta=False)
	state = model.state_dict()
	clone.load_state_dict({key: state[key] for key in clone.state_dict()})
	return clone.train(model.training)


def as_input(images):
	""" Wrap an (N, 3, H, W) array as a model input tensor. """
	return images if isinstance(images, Tensor) else Tensor(images)
