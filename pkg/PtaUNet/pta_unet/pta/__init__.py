"""
PTA
===

Configuration parsing, runtime switching and train-time sampling of PTA
configurations.

Examples
--------
>>> from pta_unet.pta import DEFAULT_STRATEGY, parse_config, sample_config
>>> rng = np.random.default_rng(0)
>>> str(sample_config(DEFAULT_STRATEGY, rng)) in DEFAULT_STRATEGY.as_dict()
True
>>> str(parse_config("hlh"))
'HLH'
"""

from .config import PtaConfig, parse_config, apply_config, current_config, using_config, EVAL_CONFIGS, N_SITES
from .sampling import SamplingStrategy, DEFAULT_STRATEGY, sample_config, sample_configs, parse_strategy
