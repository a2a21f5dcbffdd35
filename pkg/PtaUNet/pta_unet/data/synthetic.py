"""
Synthetic
=========

Desk-scale segmentation task: coloured rectangles and disks on a grey noise
background. A pixel's class is a function of its shape colour, class 0 being
the background.
"""

import numpy as np

from ..constants import synthetic_palette
from ..errors import ConfigError
from .dataset import DatasetSplit, SegSample

SHAPE_NAMES = ('red', 'green', 'blue', 'yellow', 'magenta', 'cyan', 'orange')
MAX_CLASSES = len(synthetic_palette) + 1


def synthetic_class_map(n_classes):
	""" ``(name, (r, g, b))`` per class, for writing masks to disk. """
	classes = [('background', (0, 0, 0))]
	for name, colour in zip(SHAPE_NAMES[:n_classes - 1], synthetic_palette):
		classes.append((name, tuple(int(round(255 * c)) for c in colour)))
	return classes


def make_sample(rng, size, n_classes, name=''):
	""" One sample with 1 to 3 shapes; later shapes cover earlier ones. """
	grey = rng.uniform(0.25, 0.6, size=(1, size, size))
	image = grey + rng.uniform(-0.05, 0.05, size=(3, size, size))
	mask = np.zeros((size, size), dtype=np.int64)
	rows, cols = np.mgrid[0:size, 0:size]
	for _ in range(int(rng.integers(1, 4))):
		label = int(rng.integers(1, n_classes))
		extent = int(rng.integers(max(2, size // 6), max(3, int(size / 2.5)) + 1))
		top, left = rng.integers(0, size - extent + 1, size=2)
		if rng.random() < 0.5:
			region = (rows >= top) & (rows < top + extent) & (cols >= left) & (cols < left + extent)
		else:
			radius = extent / 2.0
			region = (rows - top - radius + 0.5) ** 2 + (cols - left - radius + 0.5) ** 2 <= radius ** 2
		colour = np.asarray(synthetic_palette[label - 1])[:, None]
		image[:, region] = colour + rng.uniform(-0.05, 0.05, size=(3, int(region.sum())))
		mask[region] = label
	return SegSample(np.clip(image, 0.0, 1.0), mask, name)


def make_synthetic(n_samples, size=64, n_classes=4, seed=0, n_val=0, n_test=0):
	"""
	Generate a seeded synthetic dataset.

	Sample ``i`` of the concatenated train/val/test sequence is drawn from its
	own generator seeded with ``[seed, i]``, so the result is bitwise equal for
	equal arguments.

	Parameters
	----------
	n_samples : int
		Training samples.
	size : int
		Side of the square images; at least 16.
	n_classes : int
		Including the background, at most 8.
	seed : int
	n_val, n_test : int

	Returns
	-------
	DatasetSplit
	"""
	if size < 16:
		raise ConfigError(f"synthetic images need size >= 16, got {size}")
	if not 2 <= n_classes <= MAX_CLASSES:
		raise ConfigError(f"synthetic n_classes must lie in [2, {MAX_CLASSES}], got {n_classes}")
	if min(n_samples, n_val, n_test) < 0:
		raise ConfigError("sample counts must be non-negative")
	splits = {}
	index = 0
	for split, count in (('train', n_samples), ('val', n_val), ('test', n_test)):
		samples = []
		for _ in range(count):
			rng = np.random.default_rng([seed, index])
			samples.append(make_sample(rng, size, n_classes, name=f"{split}_{index:05d}"))
			index += 1
		splits[split] = samples
	names = tuple(name for name, _ in synthetic_class_map(n_classes))
	return DatasetSplit(class_names=names, **splits)
