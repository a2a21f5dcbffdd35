"""
Data
====

CamVid-layout datasets, letterboxing, augmentation and a synthetic shapes task.

Examples
--------
>>> data = make_synthetic(8, size=64, n_classes=4, seed=0, n_val=2)
>>> data.sizes
{'train': 8, 'val': 2, 'test': 0}
>>> letterbox(SegSample(np.zeros((3, 360, 480)), np.zeros((360, 480)))).size
(256, 256)
"""

from .dataset import SegSample, DatasetSplit, SPLITS
from .transforms import (letterbox, letterbox_geometry, augment, AugmentParams, random_crop, color_jitter,
						 resize_image, resize_mask)
from .camvid import load_camvid, load_split, write_dataset, read_class_map, read_image, read_mask, unlabeled_index
from .synthetic import make_synthetic, synthetic_class_map
from .loader import one_hot, collate, batch_indices, iterate_batches
