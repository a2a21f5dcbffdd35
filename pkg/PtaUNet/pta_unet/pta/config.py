"""
Config
======

PTA configuration triples, their string form and runtime switching.
"""

import contextlib
import logging
from dataclasses import dataclass

from ..constants import BranchMode, evaluation_configs
from ..errors import ConfigError
from ..nn import PtaBlock

logger = logging.getLogger(__name__)

N_SITES = 3


@dataclass(frozen=True)
class PtaConfig:
	"""
	Ordered branch selection for the three PTA sites, shallow to deep.

	Examples
	--------
	>>> str(PtaConfig((BranchMode.HEAVY, BranchMode.LIGHT, BranchMode.HEAVY)))
	'HLH'
	"""
	branches: tuple

	def __post_init__(self):
		branches = tuple(BranchMode(b) if not isinstance(b, BranchMode) else b for b in self.branches)
		if len(branches) != N_SITES:
			raise ConfigError(f"a PTA config has {N_SITES} branches, got {len(branches)}")
		object.__setattr__(self, 'branches', branches)

	def __str__(self):
		return ''.join(b.value for b in self.branches)

	def _to_json(self):
		return str(self)

	def __iter__(self):
		return iter(self.branches)

	def __getitem__(self, index):
		return self.branches[index]

	@property
	def uses_both(self):
		return BranchMode.BOTH in self.branches


def parse_config(text):
	"""
	Parse a 3-letter config string over ``{L, H, B}``, case-insensitively.

	Parameters
	----------
	text : str or PtaConfig

	Returns
	-------
	PtaConfig

	Raises
	------
	ConfigError
		Wrong length, or an unknown letter (the message gives its 1-based position).

	Examples
	--------
	>>> parse_config("bbb")
	PtaConfig(branches=(<BranchMode.BOTH: 'B'>, <BranchMode.BOTH: 'B'>, <BranchMode.BOTH: 'B'>))
	"""
	if isinstance(text, PtaConfig):
		return text
	if not isinstance(text, str):
		raise ConfigError(f"PTA config must be a string, got {type(text).__name__}")
	if len(text) != N_SITES:
		raise ConfigError(f"PTA config '{text}' must have exactly {N_SITES} letters, got {len(text)}")
	branches = []
	for position, letter in enumerate(text.upper(), start=1):
		try:
			branches.append(BranchMode(letter))
		except ValueError:
			raise ConfigError(f"PTA config '{text}': invalid letter '{text[position - 1]}' at position "
							  f"{position} (expected one of L, H, B)") from None
	return PtaConfig(tuple(branches))


EVAL_CONFIGS = tuple(parse_config(text) for text in evaluation_configs)


def _sites(model):
	sites = [module for _, module in model.named_modules() if isinstance(module, PtaBlock)]
	if len(sites) != N_SITES:
		raise ConfigError(f"model has {len(sites)} PTA sites, expected {N_SITES}")
	return sites


def apply_config(model, config):
	"""
	Set the active branch of every PTA site; parameters are left untouched.

	Parameters
	----------
	model : Module
		Network with exactly three :class:`PtaBlock` sites.
	config : PtaConfig or str
	"""
	config = parse_config(config)
	for site, mode in zip(_sites(model), config):
		site.mode = mode
	logger.debug("applied PTA config %s", config)


def current_config(model):
	""" Read back the configuration currently active on ``model``. """
	return PtaConfig(tuple(site.mode for site in _sites(model)))


@contextlib.contextmanager
def using_config(model, config):
	""" Apply ``config`` inside a ``with`` block and restore the previous one on exit. """
	previous = current_config(model)
	apply_config(model, config)
	try:
		yield model
	finally:
		apply_config(model, previous)
