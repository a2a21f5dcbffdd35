"""
Sampling
========

Train-time categorical distribution over PTA configurations.
"""

import math
from dataclasses import dataclass

import numpy as np

from ..constants import sampling_probabilities
from ..errors import ConfigError
from .config import parse_config


@dataclass(frozen=True)
class SamplingStrategy:
	"""
	Support configurations with their probabilities.

	Probabilities must sum to 1 exactly (``math.fsum``) and no configuration
	in the support may contain a Both branch.

	Attributes
	----------
	support : tuple of PtaConfig
	probabilities : tuple of float
	name : str
	"""
	support: tuple
	probabilities: tuple
	name: str = 'custom'

	def __post_init__(self):
		support = tuple(parse_config(c) for c in self.support)
		probabilities = tuple(float(p) for p in self.probabilities)
		if not support or len(support) != len(probabilities):
			raise ConfigError(f"strategy '{self.name}' needs one probability per config")
		if len(set(support)) != len(support):
			raise ConfigError(f"strategy '{self.name}' lists a config twice")
		if any(p < 0 for p in probabilities):
			raise ConfigError(f"strategy '{self.name}' has a negative probability")
		if math.fsum(probabilities) != 1.0:
			raise ConfigError(f"strategy '{self.name}' probabilities sum to {math.fsum(probabilities)!r}, not 1")
		both = [str(c) for c in support if c.uses_both]
		if both:
			raise ConfigError(f"strategy '{self.name}' samples Both-branch configs {both}; Both is evaluation-only")
		object.__setattr__(self, 'support', support)
		object.__setattr__(self, 'probabilities', probabilities)

	@classmethod
	def from_mapping(cls, mapping, name='custom'):
		return cls(tuple(mapping), tuple(mapping.values()), name=name)

	@classmethod
	def fixed(cls, config):
		""" Degenerate strategy always drawing ``config``. """
		config = parse_config(config)
		return cls((config,), (1.0,), name=f"fixed:{config}")

	def as_dict(self):
		return {str(c): p for c, p in zip(self.support, self.probabilities)}

	@property
	def _cumulative(self):
		cumulative = np.cumsum(self.probabilities)
		cumulative[-1] = 1.0
		return cumulative


DEFAULT_STRATEGY = SamplingStrategy.from_mapping(sampling_probabilities, name='table1')


def sample_config(strategy, rng):
	"""
	Draw one configuration.

	Parameters
	----------
	strategy : SamplingStrategy
	rng : np.random.Generator
		Consumes exactly one uniform variate per draw.

	Returns
	-------
	PtaConfig
	"""
	index = int(np.searchsorted(strategy._cumulative, rng.random(), side='right'))
	return strategy.support[min(index, len(strategy.support) - 1)]


def sample_configs(strategy, rng, n):
	""" Draw ``n`` configurations at once; same sequence as ``n`` calls to :func:`sample_config`. """
	indices = np.searchsorted(strategy._cumulative, rng.random(n), side='right')
	indices = np.minimum(indices, len(strategy.support) - 1)
	return [strategy.support[i] for i in indices]


def parse_strategy(text):
	"""
	``"table1"`` (alias ``"default"``) or ``"fixed:<CFG>"``.

	Examples
	--------
	>>> parse_strategy("fixed:lll").name
	'fixed:LLL'
	"""
	if text in ('table1', 'default'):
		return DEFAULT_STRATEGY
	if text.startswith('fixed:'):
		return SamplingStrategy.fixed(text.split(':', 1)[1])
	raise ConfigError(f"unknown sampling strategy '{text}' (expected 'table1' or 'fixed:<CFG>')")
