"""
Complexity
==========

Parameter and multiply-add accounting from the live module graph.

Counting convention
-------------------
* One multiply-accumulate is one Mult-Add; a convolution costs
  ``C_out * C_in / groups * k * k * H_out * W_out``.
* Batch normalisation is folded at inference and activations are free.
* Elementwise ``add``, ``mean2``, ``bias_add`` and bilinear upsampling count
  one op per output element, reported in the separate ``elementwise`` column.
* Counts are for a batch of one at the stated square input resolution.
* Only modules reachable under the active PTA configuration are counted.
"""

import contextlib
import logging

import pandas as pd

from ..constants import NO_PTA_LABEL
from ..errors import ConfigError
from ..nn import PtaBlock
from ..pta import parse_config, using_config
from ..reports import Report
from ..tensor import Profiler, Tensor

logger = logging.getLogger(__name__)

ELEMENTWISE_OPS = ('add', 'mean2', 'bias_add', 'upsample_bilinear2x')
CONVENTION = ("Mult-Adds: conv C_out*C_in/groups*k*k*H_out*W_out, batch 1; BN folded, activations free; "
			  "elementwise add/mean/bias/upsample in a separate column")


def conv_mult_adds(out_shape, weight_shape):
	_, cout, h_out, w_out = out_shape
	_, cin_g, k, _ = weight_shape
	return cout * cin_g * k * k * h_out * w_out


def op_cost(name, input_shapes, output_shape):
	""" ``(mult_adds, elementwise)`` of one recorded operator call. """
	if name == 'conv2d':
		return conv_mult_adds(output_shape, input_shapes[1]), 0
	if name in ELEMENTWISE_OPS:
		count = 1
		for dim in output_shape[1:]:
			count *= dim
		return 0, count
	return 0, 0


class ComplexityReport(Report):
	"""
	Parameter and Mult-Add totals with a per-module breakdown.

	Attributes
	----------
	label : str
		Configuration string (``HLH``), ``No PTA`` or a free-form model name.
	resolution : int or None
	params, mult_adds, elementwise : int
		Totals; each equals the sum of the matching ``rows`` column.
	rows : pd.DataFrame
		Columns ``module``, ``params``, ``mult_adds``, ``elementwise``.
	scope : str
		``model`` or ``encoder``.
	"""

	def __init__(self, label, rows, resolution=None, scope='model'):
		self.label = label
		self.resolution = resolution
		self.scope = scope
		self.rows = rows.reset_index(drop=True)
		self.params = int(rows['params'].sum())
		self.mult_adds = int(rows['mult_adds'].sum())
		self.elementwise = int(rows['elementwise'].sum())
		self.convention = CONVENTION

	def __repr__(self):
		return (f"ComplexityReport({self.label}, params={self.params}, mult_adds={self.mult_adds}, "
				f"resolution={self.resolution})")

	def summary(self):
		return {'label': self.label, 'params': self.params, 'mult_adds': self.mult_adds,
				'elementwise': self.elementwise, 'resolution': self.resolution, 'scope': self.scope}


def _label(model, config):
	if getattr(model, 'has_pta', True) is False:
		return NO_PTA_LABEL
	if config is not None:
		return str(parse_config(config))
	sites = [m for _, m in model.named_modules() if isinstance(m, PtaBlock)]
	return ''.join(site.mode.value for site in sites) or model.__class__.__name__


def _target(model, scope):
	if scope in (None, 'model'):
		return model, ''
	if scope == 'encoder':
		return model.encoder, 'encoder'
	raise ConfigError(f"unknown complexity scope '{scope}' (expected 'model' or 'encoder')")


@contextlib.contextmanager
def _configured(model, config):
	if config is None:
		yield model
	else:
		with using_config(model, config):
			yield model


def _param_rows(module, prefix):
	rows = {}
	for name, child in module.named_modules(prefix, reachable=True):
		count = sum(p.size for p in child._parameters.values())
		if count:
			rows[name] = count
	return rows


def _profile(module, resolution, in_channels=3):
	if resolution < 32:
		raise ConfigError(f"counting resolution must be >= 32, got {resolution}")
	with Profiler() as profiler:
		module(Tensor.placeholder((1, in_channels, resolution, resolution)))
	costs = {}
	for scope_name, name, input_shapes, output_shape, _ in profiler.records:
		macs, elementwise = op_cost(name, input_shapes, output_shape)
		total = costs.setdefault(scope_name, [0, 0])
		total[0] += macs
		total[1] += elementwise
	return costs


def _rows(module, prefix, resolution, in_channels=3):
	params = _param_rows(module, prefix)
	costs = _profile(module, resolution, in_channels) if resolution else {}
	order = [name for name, _ in module.named_modules(prefix, reachable=True)]
	names = [name for name in order if name in params or name in costs]
	names += [name for name in costs if name not in names]
	return pd.DataFrame({'module': names,
						 'params': [params.get(n, 0) for n in names],
						 'mult_adds': [costs.get(n, (0, 0))[0] for n in names],
						 'elementwise': [costs.get(n, (0, 0))[1] for n in names]},
						columns=['module', 'params', 'mult_adds', 'elementwise']).astype(
		{'params': 'int64', 'mult_adds': 'int64', 'elementwise': 'int64'})


def count_params(model, config=None, scope=None):
	"""
	Parameters reachable under ``config`` (Both counts both branches).

	Parameters
	----------
	model : Module
	config : PtaConfig or str, optional
		Applied for the count and restored afterwards.
	scope : {'model', 'encoder'}, optional

	Returns
	-------
	ComplexityReport
		``mult_adds`` is zero and ``resolution`` is None.
	"""
	with _configured(model, config):
		module, prefix = _target(model, scope)
		label = _label(model, config)
		rows = _rows(module, prefix, None)
	return ComplexityReport(label, rows, None, scope or 'model')


def count_mult_adds(model, config=None, resolution=128, scope=None, in_channels=3):
	"""
	Parameters and Mult-Adds of one forward pass at ``resolution`` x ``resolution``.

	The counts come from a shape-only dry run of the module graph, so only
	reachable modules contribute.
	"""
	model.assign_qualnames()
	with _configured(model, config):
		module, prefix = _target(model, scope)
		label = _label(model, config)
		rows = _rows(module, prefix, resolution, in_channels)
	logger.debug("%s at %d: %d params, %d mult-adds", label, resolution, rows['params'].sum(), rows['mult_adds'].sum())
	return ComplexityReport(label, rows, resolution, scope or 'model')


def complexity_reports(model, configs, resolution=128, baseline=None):
	"""
	One report per configuration, plus the baseline network when given.

	Parameters
	----------
	model : SegModel
	configs : iterable of str
	baseline : SegModel, optional
		PTA-free clone (see :func:`~pta_unet.model.strip_pta`); reported as ``No PTA``.
	"""
	reports = [count_mult_adds(model, config, resolution) for config in configs]
	if baseline is not None:
		reports.insert(0, count_mult_adds(baseline, None, resolution))
	return reports


def classification_report(model, n_classes=2, resolution=128, config=None):
	"""
	Encoder used as a classifier: the encoder's counts plus a global average
	pool and a linear layer to ``n_classes``.

	Returns
	-------
	ComplexityReport
		Labelled ``MobileNetV2 classifier``.
	"""
	encoder = count_mult_adds(model, config, resolution, scope='encoder')
	channels = model.config.last_channels
	side = resolution // model.config.downsampling
	head = pd.DataFrame({'module': ['classifier.pool', 'classifier.fc'],
						 'params': [0, channels * n_classes + n_classes],
						 'mult_adds': [0, channels * n_classes],
						 'elementwise': [channels * side * side, 0]})
	rows = pd.concat([encoder.rows, head], ignore_index=True)
	return ComplexityReport('MobileNetV2 classifier', rows, resolution, 'encoder')
