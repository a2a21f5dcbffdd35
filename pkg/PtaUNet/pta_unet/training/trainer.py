"""
Trainer
=======

PTA-sampling training loop and per-configuration evaluation.
"""

import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from tqdm import tqdm

from ..constants import DICE_EPS, dice_modes, evaluation_configs
from ..data import AugmentParams, augment, iterate_batches, one_hot
from ..errors import ConfigError, DataError, NumericalError
from ..pta import apply_config, current_config, parse_config, sample_config
from ..tensor import GradTape, softmax_channels
from .loss import dice_loss_tensor, dice_score_batch
from .metrics import MetricsLog
from .optim import Adam

logger = logging.getLogger(__name__)


@dataclass
class TrainConfig:
	"""
	Training hyper-parameters; defaults follow the reference protocol.

	Attributes
	----------
	epochs : int
	batch_size : int
	learning_rate : float
	betas : tuple of float
	adam_eps : float
	dice_eps : float
	seed : int
	dice_mode : {'micro', 'macro'}
	augment : bool
		Random crop and colour jitter on training samples.
	augment_params : AugmentParams
	max_iterations : int, optional
		Stop after this many optimizer steps.
	eval_configs : tuple of str
		Configurations scored on the validation split after every epoch.
	eval_batch_size : int
	"""
	epochs: int = 600
	batch_size: int = 8
	learning_rate: float = 1e-3
	betas: tuple = (0.9, 0.999)
	adam_eps: float = 1e-8
	dice_eps: float = DICE_EPS
	seed: int = 0
	dice_mode: str = 'micro'
	augment: bool = True
	augment_params: AugmentParams = field(default_factory=AugmentParams)
	max_iterations: int = None
	eval_configs: tuple = evaluation_configs
	eval_batch_size: int = 8

	def __post_init__(self):
		for name in ('epochs', 'batch_size', 'learning_rate', 'adam_eps', 'dice_eps', 'eval_batch_size'):
			if not getattr(self, name) > 0:
				raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
		if self.max_iterations is not None and self.max_iterations < 1:
			raise ConfigError(f"max_iterations must be positive, got {self.max_iterations}")
		self.eval_configs = tuple(str(parse_config(c)) for c in self.eval_configs)
		if self.dice_mode not in dice_modes:
			raise ConfigError(f"dice_mode must be one of {dice_modes}, got '{self.dice_mode}'")

	def _to_json(self):
		return asdict(self)


@dataclass
class TrainResult:
	"""
	Outcome of :func:`train`.

	Attributes
	----------
	iterations : int
	wall_time : float
		Seconds.
	losses : list of float
		Training loss of every step, in order.
	configs : list of str
		Configuration sampled at every step (``None`` without a strategy).
	records : list of dict
		Metrics log records.
	"""
	iterations: int = 0
	wall_time: float = 0.0
	losses: list = field(default_factory=list)
	configs: list = field(default_factory=list)
	records: list = field(default_factory=list)

	@property
	def final_val_dice(self):
		epochs = [r for r in self.records if r['event'] == 'epoch' and r.get('val_dice')]
		return epochs[-1]['val_dice'] if epochs else {}


def predict_proba(model, images):
	""" Softmax probabilities of a batch, without recording gradients. """
	return softmax_channels(model(images)).data


def evaluate(model, samples, config=None, batch_size=8, eps=DICE_EPS, mode='micro'):
	"""
	Mean per-sample soft Dice score of ``samples`` under ``config``.

	The model is scored in eval mode; its training flag and active
	configuration are restored afterwards.
	"""
	if not samples:
		raise DataError("cannot evaluate on an empty split")
	was_training = model.training
	previous = current_config(model) if model.has_pta else None
	if config is not None:
		apply_config(model, config)
	model.eval()
	total, count = 0.0, 0
	try:
		for _, images, masks in iterate_batches(samples, batch_size):
			probs = predict_proba(model, images)
			total += dice_score_batch(probs, one_hot(masks, probs.shape[1]), eps, mode) * len(masks)
			count += len(masks)
	finally:
		model.train(was_training)
		if previous is not None:
			apply_config(model, previous)
	return total / count


def evaluate_configs(model, samples, configs=evaluation_configs, batch_size=8, eps=DICE_EPS, mode='micro'):
	"""
	Dice score per configuration from the same weights.

	Returns
	-------
	dict
		Config string to score; a configuration whose forward pass produced
		non-finite values scores NaN (with a warning).
	"""
	scores = {}
	for config in configs:
		config = str(parse_config(config))
		try:
			scores[config] = evaluate(model, samples, config, batch_size, eps, mode)
		except NumericalError as err:
			logger.warning("evaluation of %s failed: %s", config, err)
			scores[config] = float('nan')
	return scores


def _augmenter(cfg, epoch):
	def transform(sample, index):
		return augment(sample, np.random.default_rng([cfg.seed, epoch, index]), cfg.augment_params)
	return transform


def train(model, dataset, cfg=None, strategy=None, metrics_path=None, progress=True):
	"""
	Train ``model`` in place.

	Every mini-batch draws one configuration from ``strategy``, applies it,
	runs forward and the batch-mean Dice loss, back-propagates to the
	parameters reachable under that configuration and takes one Adam step.

	Parameters
	----------
	model : SegModel
	dataset : DatasetSplit
		``train`` must be non-empty; ``val`` (optional) is scored after every
		epoch under ``cfg.eval_configs``.
	cfg : TrainConfig, optional
	strategy : SamplingStrategy, optional
		Without a strategy the model trains under its current configuration.
	metrics_path : str, optional
		Line-delimited JSON metrics file.
	progress : bool
		Show a progress bar.

	Returns
	-------
	TrainResult

	Raises
	------
	NumericalError
		The loss became non-finite; the message names the step and configuration.
	"""
	cfg = cfg or TrainConfig()
	if not dataset.train:
		raise DataError("training split is empty")
	if strategy is not None and not model.has_pta:
		raise ConfigError("a sampling strategy needs a model with PTA sites")

	seeds = np.random.SeedSequence(cfg.seed).spawn(2)
	sampler_rng = np.random.Generator(np.random.PCG64(seeds[0]))
	shuffle_rng = np.random.Generator(np.random.PCG64(seeds[1]))
	optimizer = Adam(model.parameters(), lr=cfg.learning_rate, betas=cfg.betas, eps=cfg.adam_eps)
	n_classes = model.config.n_classes
	eval_configs = cfg.eval_configs if model.has_pta else ()
	result = TrainResult()
	start = time.perf_counter()

	with MetricsLog(metrics_path) as log:
		log.write('start', generator='PCG64', seed=cfg.seed, train_config=cfg,
				  strategy=strategy.as_dict() if strategy is not None else None,
				  n_parameters=model.num_parameters(), n_train=len(dataset.train), n_val=len(dataset.val))
		for epoch in range(cfg.epochs):
			transform = _augmenter(cfg, epoch) if cfg.augment else None
			batches = iterate_batches(dataset.train, cfg.batch_size, shuffle_rng, transform)
			n_batches = -(-len(dataset.train) // cfg.batch_size)
			epoch_losses = []
			with tqdm(total=n_batches, desc=f"epoch {epoch + 1}/{cfg.epochs}", leave=False,
					  disable=not progress) as bar:
				for _, images, masks in batches:
					config = sample_config(strategy, sampler_rng) if strategy is not None else None
					loss = train_step(model, optimizer, images, masks, n_classes, cfg, config)
					if not np.isfinite(loss):
						raise NumericalError(f"non-finite loss {loss} at epoch {epoch + 1}, "
											 f"iteration {result.iterations + 1}, config {config}")
					result.iterations += 1
					result.losses.append(loss)
					result.configs.append(str(config) if config is not None else None)
					epoch_losses.append(loss)
					bar.update(1)
					bar.set_postfix(loss=f"{loss:.4f}", config=str(config or '-'))
					if cfg.max_iterations and result.iterations >= cfg.max_iterations:
						break

			val_dice = {}
			if dataset.val and eval_configs:
				val_dice = evaluate_configs(model, dataset.val, eval_configs, cfg.eval_batch_size,
											cfg.dice_eps, cfg.dice_mode)
			elif dataset.val:
				val_dice = {'plain': evaluate(model, dataset.val, None, cfg.eval_batch_size, cfg.dice_eps,
											  cfg.dice_mode)}
			log.write('epoch', epoch=epoch + 1, iterations=result.iterations,
					  wall_time_s=time.perf_counter() - start, train_loss=float(np.mean(epoch_losses)),
					  val_dice=val_dice)
			logger.info("epoch %d/%d: loss %.4f, val dice %s", epoch + 1, cfg.epochs, np.mean(epoch_losses),
						{k: round(v, 4) for k, v in val_dice.items()})
			if cfg.max_iterations and result.iterations >= cfg.max_iterations:
				break

		result.wall_time = time.perf_counter() - start
		log.write('end', iterations=result.iterations, wall_time_s=result.wall_time)
		result.records = log.records

	if model.has_pta:
		apply_config(model, 'HHH')
	model.eval()
	return result


def train_step(model, optimizer, images, masks, n_classes, cfg, config=None):
	"""
	One optimizer step on a batch.

	Returns
	-------
	float
		Batch-mean Dice loss before the update.
	"""
	if config is not None:
		apply_config(model, config)
	model.train()
	params = model.parameters(reachable=True)
	target = one_hot(masks, n_classes)
	with GradTape() as tape:
		probs = softmax_channels(model(images))
		loss = dice_loss_tensor(probs, target, cfg.dice_eps, cfg.dice_mode)
	value = float(loss.data)
	if not np.isfinite(value):
		return value
	grads = tape.backward(loss, params)
	optimizer.step(grads)
	return value
