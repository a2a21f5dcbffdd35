"""
Dataset
=======

Segmentation samples and train/val/test splits.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from ..errors import DataError, ShapeError

logger = logging.getLogger(__name__)

SPLITS = ('train', 'val', 'test')


@dataclass
class SegSample:
	"""
	One image with its label mask.

	Attributes
	----------
	image : np.ndarray
		(3, H, W) float32 in [0, 1].
	mask : np.ndarray
		(H, W) int64 class indices.
	name : str
		File stem the sample came from (empty for in-memory samples).
	"""
	image: np.ndarray
	mask: np.ndarray
	name: str = ''

	def __post_init__(self):
		self.image = np.ascontiguousarray(self.image, dtype=np.float32)
		self.mask = np.ascontiguousarray(self.mask, dtype=np.int64)
		if self.image.ndim != 3 or self.image.shape[0] != 3:
			raise ShapeError(f"sample image must be (3, H, W), got {self.image.shape}")
		if self.mask.shape != self.image.shape[1:]:
			raise ShapeError(f"sample '{self.name}': mask shape {self.mask.shape} does not match "
							 f"image shape {self.image.shape}")

	@property
	def size(self):
		return self.mask.shape

	def check_classes(self, n_classes):
		if self.mask.size and (self.mask.min() < 0 or self.mask.max() >= n_classes):
			raise DataError(f"sample '{self.name}': class indices must lie in [0, {n_classes}), "
							f"got [{self.mask.min()}, {self.mask.max()}]")


@dataclass
class DatasetSplit:
	"""
	Train, validation and test sample lists plus the class names they index.

	Splits must be disjoint by sample name.
	"""
	train: list = field(default_factory=list)
	val: list = field(default_factory=list)
	test: list = field(default_factory=list)
	class_names: tuple = ()

	def __post_init__(self):
		seen = {}
		for split in SPLITS:
			for sample in getattr(self, split):
				if not sample.name:
					continue
				if sample.name in seen and seen[sample.name] != split:
					raise DataError(f"sample '{sample.name}' appears in both '{seen[sample.name]}' and '{split}'")
				seen[sample.name] = split
		if self.class_names:
			for split in SPLITS:
				for sample in getattr(self, split):
					sample.check_classes(len(self.class_names))

	def __getitem__(self, split):
		if split not in SPLITS:
			raise KeyError(f"unknown split '{split}' (expected one of {SPLITS})")
		return getattr(self, split)

	@property
	def n_classes(self):
		return len(self.class_names)

	@property
	def sizes(self):
		return {split: len(getattr(self, split)) for split in SPLITS}
