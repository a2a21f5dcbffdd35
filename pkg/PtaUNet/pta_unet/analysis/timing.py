"""
Timing
======

Per-batch inference latency with 95% confidence intervals.
"""

import contextlib
import gc
import logging
import time

import numpy as np
from tqdm import tqdm

from ..constants import CI95_Z, NO_PTA_LABEL
from ..errors import ConfigError
from ..pta import parse_config, using_config
from ..reports import Report
from ..tensor import Tensor

logger = logging.getLogger(__name__)


def mean_ci95(samples):
	"""
	Mean and 95% half-width ``1.96 * std / sqrt(n)`` (sample std, ddof=1).

	Raises
	------
	ConfigError
		Fewer than two samples: the interval is undefined.
	"""
	samples = np.asarray(samples, dtype=np.float64)
	if samples.size < 2:
		raise ConfigError(f"a confidence interval needs at least 2 batches, got {samples.size}")
	return float(samples.mean()), float(CI95_Z * samples.std(ddof=1) / np.sqrt(samples.size))


class TimingReport(Report):
	"""
	Latency of one configuration.

	Attributes
	----------
	label : str
	batch_shape : tuple of int
	n_batches : int
	mean_ms, ci95_half_width_ms : float
	relative_percent : float or None
		``100 * mean / mean_baseline`` once :func:`relative_to` has run.
	baseline : str or None
	"""

	def __init__(self, label, batch_shape, times_ms):
		self.label = label
		self.batch_shape = tuple(batch_shape)
		self.n_batches = len(times_ms)
		self.mean_ms, self.ci95_half_width_ms = mean_ci95(times_ms)
		self.relative_percent = None
		self.baseline = None

	def __repr__(self):
		return f"TimingReport({self.label}, {self.mean_ms:.3f} ± {self.ci95_half_width_ms:.3f} ms)"

	@property
	def interval(self):
		return self.mean_ms - self.ci95_half_width_ms, self.mean_ms + self.ci95_half_width_ms

	def overlaps(self, other):
		low, high = self.interval
		other_low, other_high = other.interval
		return low <= other_high and other_low <= high


def _check_run(n_batches, warmup):
	if n_batches < 2:
		raise ConfigError(f"benchmark needs n_batches >= 2 for a confidence interval, got {n_batches}")
	if warmup < 0:
		raise ConfigError(f"warmup must be non-negative, got {warmup}")


def _row(model, config):
	""" (label, model, context factory) for one timed row. """
	if not model.has_pta:
		return NO_PTA_LABEL, model, contextlib.nullcontext
	label = str(parse_config(config or model.active_config))
	return label, model, lambda: using_config(model, label)


def _time_rows(rows, batch_shape, n_batches, warmup, seed, progress):
	"""
	Time rows round-robin: every round runs one batch of each row, starting
	from a different row each round. Returns ``{label: [ms, ...]}``.
	"""
	inputs = Tensor(np.random.default_rng(seed).random(batch_shape, dtype=np.float32))
	models = {id(model): model for _, model, _ in rows}
	was_training = {key: model.training for key, model in models.items()}
	times = {label: [] for label, _, _ in rows}
	gc_enabled = gc.isenabled()
	try:
		for model in models.values():
			model.eval()
		for label, model, configured in rows:
			with configured():
				for _ in range(warmup):
					model(inputs)
		gc.disable()
		desc = f"benchmark {'/'.join(times)}"
		for round_index in tqdm(range(n_batches), desc=desc, leave=False, disable=not progress):
			shift = round_index % len(rows)
			for label, model, configured in rows[shift:] + rows[:shift]:
				with configured():
					start = time.perf_counter()
					model(inputs)
					times[label].append((time.perf_counter() - start) * 1e3)
	finally:
		if gc_enabled:
			gc.enable()
		for key, model in models.items():
			model.train(was_training[key])
	return times


def benchmark(model, config=None, batch_shape=(8, 3, 256, 256), n_batches=1000, warmup=10, seed=0, progress=False):
	"""
	Time forward passes of random batches.

	Parameters
	----------
	model : SegModel
	config : str or PtaConfig, optional
		Applied for the run and restored afterwards; ignored for baseline models.
	batch_shape : tuple of int
	n_batches : int
		Timed batches, at least 2.
	warmup : int
		Untimed batches run first.
	seed : int
		Seed of the input generator.

	Returns
	-------
	TimingReport
	"""
	return benchmark_configs(model, [config], baseline=None, batch_shape=batch_shape, n_batches=n_batches,
							 warmup=warmup, seed=seed, progress=progress)[0]


def relative_to(reports, baseline):
	"""
	Fill ``relative_percent`` of every report against the one labelled ``baseline``.

	Raises
	------
	ConfigError
		No report carries the baseline label.
	"""
	reference = next((r for r in reports if r.label == baseline), None)
	if reference is None:
		raise ConfigError(f"baseline '{baseline}' is not among the timed rows {[r.label for r in reports]}")
	for report in reports:
		report.relative_percent = 100.0 * report.mean_ms / reference.mean_ms
		report.baseline = baseline
	return reports


def benchmark_configs(model, configs, baseline_model=None, baseline='HHH', batch_shape=(8, 3, 256, 256),
					  n_batches=1000, warmup=10, seed=0, progress=False):
	"""
	Benchmark several configurations (and optionally the PTA-free network)
	and express each mean relative to ``baseline``.

	Rows are timed interleaved, one batch of each row per round.

	Parameters
	----------
	model : SegModel
	configs : iterable of str or PtaConfig
		Repeated configurations are timed once.
	baseline_model : SegModel, optional
		PTA-free clone, reported first as the ``No PTA`` row.
	baseline : str or None
		Label of the 100% row; ``None`` skips :func:`relative_to`.
	batch_shape, n_batches, warmup, seed, progress
		As for :func:`benchmark`.

	Returns
	-------
	list of TimingReport
	"""
	_check_run(n_batches, warmup)
	rows = [_row(baseline_model, None)] if baseline_model is not None else []
	for config in configs:
		row = _row(model, config)
		if row[0] not in {label for label, _, _ in rows}:
			rows.append(row)
	times = _time_rows(rows, batch_shape, n_batches, warmup, seed, progress)
	reports = []
	for label, samples in times.items():
		report = TimingReport(label, batch_shape, samples)
		logger.info("%s: %.3f ± %.3f ms over %d batches", label, report.mean_ms, report.ci95_half_width_ms, n_batches)
		reports.append(report)
	return reports if baseline is None else relative_to(reports, baseline)
