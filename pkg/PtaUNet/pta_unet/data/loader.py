"""
Loader
======

Batching and one-hot encoding.
"""

import numpy as np

from ..errors import DataError, ShapeError


def one_hot(masks, n_classes, dtype=np.float32):
	"""
	(N, H, W) class indices to (N, C, H, W) one-hot.

	Examples
	--------
	>>> one_hot(np.array([[[0, 2]]]), 3)[0, :, 0, 1]
	array([0., 0., 1.], dtype=float32)
	"""
	masks = np.asarray(masks)
	if masks.size and (masks.min() < 0 or masks.max() >= n_classes):
		raise DataError(f"class indices must lie in [0, {n_classes}), got [{masks.min()}, {masks.max()}]")
	eye = np.eye(n_classes, dtype=dtype)
	return np.ascontiguousarray(np.moveaxis(eye[masks], -1, 1))


def collate(samples):
	""" Stack samples into ``(images (N, 3, H, W), masks (N, H, W))``. """
	sizes = {s.size for s in samples}
	if len(sizes) != 1:
		raise ShapeError(f"cannot batch samples of different sizes {sorted(sizes)}")
	return np.stack([s.image for s in samples]), np.stack([s.mask for s in samples])


def batch_indices(n_samples, batch_size, rng=None):
	"""
	Index arrays of consecutive batches; the last one may be short.

	With ``rng`` the order is a permutation drawn from it.
	"""
	if batch_size < 1:
		raise ValueError(f"batch_size must be positive, got {batch_size}")
	order = rng.permutation(n_samples) if rng is not None else np.arange(n_samples)
	return [order[i:i + batch_size] for i in range(0, n_samples, batch_size)]


def iterate_batches(samples, batch_size, rng=None, transform=None):
	"""
	Yield ``(indices, images, masks)`` batches.

	Parameters
	----------
	samples : list of SegSample
	batch_size : int
	rng : np.random.Generator, optional
		Shuffles the order when given.
	transform : callable, optional
		``transform(sample, index) -> SegSample`` applied per sample.
	"""
	for indices in batch_indices(len(samples), batch_size, rng):
		batch = [samples[i] if transform is None else transform(samples[i], int(i)) for i in indices]
		images, masks = collate(batch)
		yield indices, images, masks
