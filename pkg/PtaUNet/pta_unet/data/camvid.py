"""
CamVid
======

Reader and writer for datasets in CamVid layout::

	<root>/class_map.txt                  name r g b, one class per line
	<root>/{train,val,test}/images/*.png
	<root>/{train,val,test}/labels/*.png  colour masks, <stem>.png or <stem>_L.png
"""

import logging
import os

import numpy as np
from PIL import Image

from ..constants import CAMVID_SPLIT_SIZES, LETTERBOX_SIZE, camvid_classes, unlabeled_names
from ..errors import DataError
from ..parser import format_class_map, parse_class_map
from .dataset import SPLITS, DatasetSplit, SegSample
from .transforms import letterbox

logger = logging.getLogger(__name__)

CLASS_MAP_FILE = 'class_map.txt'


def _pack(rgb):
	rgb = np.asarray(rgb, dtype=np.int64)
	return (rgb[..., 0] << 16) | (rgb[..., 1] << 8) | rgb[..., 2]


def read_class_map(path):
	with open(path, encoding='utf-8') as f:
		return parse_class_map(f.read(), source=path)


def unlabeled_index(classes):
	""" Index of the unlabeled class (by name), or the last class. """
	for index, (name, _) in enumerate(classes):
		if name.lower() in unlabeled_names:
			return index
	return len(classes) - 1


def read_image(path):
	""" (3, H, W) float32 in [0, 1] from an image file. """
	with Image.open(path) as img:
		data = np.asarray(img.convert('RGB'), dtype=np.float32) / 255.0
	return np.ascontiguousarray(data.transpose(2, 0, 1))


def read_mask(path, classes):
	"""
	Decode a colour mask into class indices.

	Raises
	------
	DataError
		A pixel colour that is not in ``classes``, naming the file and colour.
	"""
	with Image.open(path) as img:
		rgb = np.asarray(img.convert('RGB'))
	codes, inverse = np.unique(_pack(rgb), return_inverse=True)
	lookup = {int(code): index for index, code in enumerate(_pack([c for _, c in classes]))}
	indices = []
	for code in codes:
		if int(code) not in lookup:
			colour = (int(code) >> 16 & 255, int(code) >> 8 & 255, int(code) & 255)
			raise DataError(f"{path}: mask colour {colour} is not in the class map")
		indices.append(lookup[int(code)])
	return np.asarray(indices, dtype=np.int64)[inverse.reshape(-1)].reshape(rgb.shape[:2])


def write_image(path, image):
	data = np.clip(np.rint(np.asarray(image).transpose(1, 2, 0) * 255.0), 0, 255).astype(np.uint8)
	Image.fromarray(data).save(path)


def write_mask(path, mask, classes):
	palette = np.asarray([c for _, c in classes], dtype=np.uint8)
	Image.fromarray(palette[np.asarray(mask)]).save(path)


def _pairs(split_dir):
	images_dir = os.path.join(split_dir, 'images')
	labels_dir = os.path.join(split_dir, 'labels')
	images = sorted(f for f in os.listdir(images_dir) if f.lower().endswith('.png')) if os.path.isdir(images_dir) else []
	labels = set(os.listdir(labels_dir)) if os.path.isdir(labels_dir) else set()
	pairs = []
	for filename in images:
		stem = os.path.splitext(filename)[0]
		label = next((c for c in (f"{stem}.png", f"{stem}_L.png") if c in labels), None)
		if label is None:
			raise DataError(f"{os.path.join(images_dir, filename)}: no label file {stem}.png or {stem}_L.png "
							f"in {labels_dir}")
		labels.discard(label)
		pairs.append((stem, os.path.join(images_dir, filename), os.path.join(labels_dir, label)))
	orphans = sorted(f for f in labels if f.lower().endswith('.png'))
	if orphans:
		raise DataError(f"{labels_dir}: label {orphans[0]} has no matching image")
	return pairs


def load_split(root, split, classes, target=LETTERBOX_SIZE):
	""" Samples of one split, letterboxed to ``target`` (``None`` keeps native size). """
	split_dir = os.path.join(root, split)
	pairs = _pairs(split_dir)
	if not pairs:
		logger.warning("split '%s' under %s is empty", split, root)
		return []
	pad_class = unlabeled_index(classes)
	samples = []
	for stem, image_path, label_path in pairs:
		image = read_image(image_path)
		mask = read_mask(label_path, classes)
		if mask.shape != image.shape[1:]:
			raise DataError(f"{label_path}: mask size {mask.shape} differs from image size {image.shape[1:]}")
		sample = SegSample(image, mask, stem)
		samples.append(letterbox(sample, target, pad_class) if target else sample)
	logger.info("loaded %d samples from %s", len(samples), split_dir)
	return samples


def load_camvid(root, class_map=None, target=LETTERBOX_SIZE):
	"""
	Load every split of a CamVid-layout dataset.

	Parameters
	----------
	root : str
	class_map : str or list of (name, (r, g, b)), optional
		Path or parsed map; defaults to ``<root>/class_map.txt``, then to the
		standard 12-class CamVid map.
	target : int or None
		Letterbox size.

	Returns
	-------
	DatasetSplit
	"""
	if not os.path.isdir(root):
		raise DataError(f"dataset root {root} does not exist")
	if class_map is None:
		path = os.path.join(root, CLASS_MAP_FILE)
		classes = read_class_map(path) if os.path.isfile(path) else list(camvid_classes)
	elif isinstance(class_map, str):
		classes = read_class_map(class_map)
	else:
		classes = list(class_map)
	splits = {split: load_split(root, split, classes, target) for split in SPLITS}
	dataset = DatasetSplit(class_names=tuple(name for name, _ in classes), **splits)
	if dataset.class_names == tuple(name for name, _ in camvid_classes) and dataset.sizes != CAMVID_SPLIT_SIZES:
		logger.warning("%s uses the CamVid classes but has split sizes %s, expected %s",
					   root, dataset.sizes, CAMVID_SPLIT_SIZES)
	return dataset


def write_dataset(dataset, root, class_map):
	"""
	Write a :class:`DatasetSplit` in CamVid layout.

	Parameters
	----------
	dataset : DatasetSplit
	root : str
	class_map : list of (name, (r, g, b))
		Colours used to encode masks; written to ``<root>/class_map.txt``.
	"""
	if len(class_map) < max(dataset.n_classes, 2):
		raise DataError(f"class map has {len(class_map)} colours for {dataset.n_classes} classes")
	os.makedirs(root, exist_ok=True)
	with open(os.path.join(root, CLASS_MAP_FILE), 'w', encoding='utf-8') as f:
		f.write(format_class_map(class_map))
	for split in SPLITS:
		images_dir = os.path.join(root, split, 'images')
		labels_dir = os.path.join(root, split, 'labels')
		os.makedirs(images_dir, exist_ok=True)
		os.makedirs(labels_dir, exist_ok=True)
		for index, sample in enumerate(dataset[split]):
			stem = sample.name or f"{split}_{index:05d}"
			write_image(os.path.join(images_dir, f"{stem}.png"), sample.image)
			write_mask(os.path.join(labels_dir, f"{stem}.png"), sample.mask, class_map)
	logger.info("wrote dataset %s with splits %s", root, dataset.sizes)
	return root
