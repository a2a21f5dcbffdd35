"""
Layers
======

Convolution, batch normalisation and the conv-bn-relu6 composite.
"""

import numpy as np

from ..errors import ShapeError
from ..objects import Module, Sequential
from ..tensor import Parameter, batchnorm2d, bias_add, conv2d, relu6


def fan_out_normal(rng, out_channels, in_per_group, kernel, groups=1):
	""" He-normal initialisation scaled by fan-out (MobileNetV2 convention). """
	fan_out = out_channels * kernel * kernel // groups
	std = np.sqrt(2.0 / fan_out)
	return rng.normal(0.0, std, size=(out_channels, in_per_group, kernel, kernel)).astype(np.float32)


class Conv2d(Module):
	"""
	Convolution layer.

	Attributes
	----------
	weight : Parameter
		(out_channels, in_channels / groups, k, k).
	bias : Parameter or None
	"""

	def __init__(self, in_channels, out_channels, kernel_size, rng, stride=1, padding=None, groups=1, bias=False):
		super().__init__()
		self.in_channels = in_channels
		self.out_channels = out_channels
		self.kernel_size = kernel_size
		self.stride = stride
		self.padding = (kernel_size - 1) // 2 if padding is None else padding
		self.groups = groups
		self.weight = Parameter(fan_out_normal(rng, out_channels, in_channels // groups, kernel_size, groups))
		self.bias = Parameter(np.zeros(out_channels, dtype=np.float32)) if bias else None

	def extra_repr(self):
		return (f"{self.in_channels}, {self.out_channels}, k={self.kernel_size}, "
				f"stride={self.stride}, groups={self.groups}")

	def forward(self, x):
		out = conv2d(x, self.weight, stride=self.stride, padding=self.padding, groups=self.groups)
		if self.bias is not None:
			out = bias_add(out, self.bias)
		return out


class BatchNorm2d(Module):
	""" Batch normalisation with running statistics kept as buffers. """

	def __init__(self, channels, momentum=0.1, eps=1e-5):
		super().__init__()
		self.channels = channels
		self.momentum = momentum
		self.eps = eps
		self.weight = Parameter(np.ones(channels, dtype=np.float32))
		self.bias = Parameter(np.zeros(channels, dtype=np.float32))
		self.register_buffer('running_mean', np.zeros(channels, dtype=np.float32))
		self.register_buffer('running_var', np.ones(channels, dtype=np.float32))

	def extra_repr(self):
		return str(self.channels)

	def forward(self, x):
		return batchnorm2d(x, self.weight, self.bias, self.running_mean.data, self.running_var.data,
						   training=self.training, momentum=self.momentum, eps=self.eps)


class ReLU6(Module):

	def forward(self, x):
		return relu6(x)


class ConvBNReLU6(Sequential):
	"""
	Convolution, batch normalisation and (optionally) ReLU6.

	Children are named ``0`` (conv), ``1`` (bn) and ``2`` (activation) so
	parameter names read ``<prefix>.0.weight``, ``<prefix>.1.weight``.
	"""

	def __init__(self, in_channels, out_channels, kernel_size, rng, stride=1, groups=1, activation=True):
		layers = [Conv2d(in_channels, out_channels, kernel_size, rng, stride=stride, groups=groups),
				  BatchNorm2d(out_channels)]
		if activation:
			layers.append(ReLU6())
		super().__init__(*layers)
		self.in_channels = in_channels
		self.out_channels = out_channels
		self.stride = stride

	def extra_repr(self):
		return f"{self.in_channels}, {self.out_channels}, stride={self.stride}"

	def forward(self, x):
		if x.shape[1] != self.in_channels:
			raise ShapeError(f"{self.qualname or 'conv'}: expected {self.in_channels} input channels, got shape {x.shape}")
		return super().forward(x)
