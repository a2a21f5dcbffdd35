"""
Blocks
======

MobileNetV2 inverted residual and the Post-Train Adaptive (PTA) block.
"""

from collections import Counter

from ..constants import BranchMode
from ..errors import ConfigError, ShapeError
from ..objects import Module, Sequential
from ..tensor import add, mean2
from .layers import ConvBNReLU6


class InvertedResidual(Module):
	"""
	Expand (1x1) -> depthwise (3x3) -> project (1x1), with a skip connection when
	the block keeps resolution and width.

	Attributes
	----------
	in_channels, out_channels : int
	stride : int
		1 or 2.
	expansion : int
		Hidden width multiplier; with 1 the expand convolution is omitted.
	use_residual : bool
	"""

	def __init__(self, in_channels, out_channels, stride, expansion, rng):
		super().__init__()
		if stride not in (1, 2):
			raise ConfigError(f"inverted residual stride must be 1 or 2, got {stride}")
		self.in_channels = in_channels
		self.out_channels = out_channels
		self.stride = stride
		self.expansion = expansion
		self.use_residual = stride == 1 and in_channels == out_channels

		hidden = int(round(in_channels * expansion))
		layers = []
		if expansion != 1:
			layers.append(ConvBNReLU6(in_channels, hidden, 1, rng))
		layers.append(ConvBNReLU6(hidden, hidden, 3, rng, stride=stride, groups=hidden))
		layers.append(ConvBNReLU6(hidden, out_channels, 1, rng, activation=False))
		self.conv = Sequential(*layers)

	def extra_repr(self):
		return f"{self.in_channels}, {self.out_channels}, stride={self.stride}, t={self.expansion}"

	def forward(self, x):
		if x.ndim != 4 or x.shape[1] != self.in_channels:
			raise ShapeError(f"{self.qualname or 'inverted residual'}: expected {self.in_channels} "
							 f"input channels, got shape {x.shape}")
		out = self.conv(x)
		if self.use_residual:
			out = add(x, out)
		return out


class PtaBlock(Module):
	"""
	Two-branch block whose active branch is chosen after training.

	The light branch is one inverted residual, the heavy branch two in
	sequence; ``BOTH`` runs light then heavy and averages the outputs with
	weight one half. Branches never share parameters.

	Attributes
	----------
	mode : BranchMode
	calls : collections.Counter
		Number of forward calls per branch (``'light'``, ``'heavy'``).
	"""

	def __init__(self, channels, expansion, rng, mode=BranchMode.HEAVY):
		super().__init__()
		self.in_channels = channels
		self.out_channels = channels
		self.stride = 1
		self.light = InvertedResidual(channels, channels, 1, expansion, rng)
		self.heavy = Sequential(InvertedResidual(channels, channels, 1, expansion, rng),
								InvertedResidual(channels, channels, 1, expansion, rng))
		self.mode = mode
		self.calls = Counter()

	def extra_repr(self):
		return f"{self.in_channels}, mode={self.mode.value}"

	def children(self, reachable=False):
		if not reachable:
			return super().children()
		active = []
		if self.mode in (BranchMode.LIGHT, BranchMode.BOTH):
			active.append(('light', self.light))
		if self.mode in (BranchMode.HEAVY, BranchMode.BOTH):
			active.append(('heavy', self.heavy))
		return iter(active)

	def _run(self, branch, x):
		self.calls[branch] += 1
		return getattr(self, branch)(x)

	def forward(self, x):
		if self.mode is BranchMode.LIGHT:
			return self._run('light', x)
		if self.mode is BranchMode.HEAVY:
			return self._run('heavy', x)
		light = self._run('light', x)
		return mean2(light, self._run('heavy', x))


class PlainSite(Module):
	"""
	PTA site of the baseline network: only the heavy pair, under the same
	parameter names as a :class:`PtaBlock`'s heavy branch.
	"""

	def __init__(self, channels, expansion, rng):
		super().__init__()
		self.in_channels = channels
		self.out_channels = channels
		self.stride = 1
		self.heavy = Sequential(InvertedResidual(channels, channels, 1, expansion, rng),
								InvertedResidual(channels, channels, 1, expansion, rng))

	def extra_repr(self):
		return str(self.in_channels)

	def forward(self, x):
		return self.heavy(x)
