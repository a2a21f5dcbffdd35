"""
Transforms
==========

Letterboxing and training-time augmentation. Images are resampled
bilinearly, masks always with nearest neighbour.
"""

from dataclasses import dataclass

import numpy as np
from PIL import Image

from ..constants import LETTERBOX_SIZE
from .dataset import SegSample

# (R, G, B) luma weights for saturation and contrast
GRAY_WEIGHTS = np.array([0.299, 0.587, 0.114], dtype=np.float32)


def resize_image(image, size):
	""" Bilinear resize of a (3, H, W) float image to ``size = (h, w)``. """
	h, w = size
	if image.shape[1:] == (h, w):
		return image.copy()
	channels = [np.asarray(Image.fromarray(np.ascontiguousarray(channel, dtype=np.float32))
						   .resize((w, h), Image.Resampling.BILINEAR)) for channel in image]
	return np.stack(channels).astype(np.float32)


def resize_mask(mask, size):
	""" Nearest-neighbour resize of an (H, W) class-index mask. """
	h, w = size
	if mask.shape == (h, w):
		return mask.copy()
	resized = Image.fromarray(mask.astype(np.int32)).resize((w, h), Image.Resampling.NEAREST)
	return np.asarray(resized).astype(np.int64)


def letterbox_geometry(height, width, target=LETTERBOX_SIZE):
	"""
	Content size and padding of a letterboxed image.

	Returns
	-------
	((h, w), (top, bottom, left, right))

	Examples
	--------
	>>> letterbox_geometry(360, 480)
	((192, 256), (32, 32, 0, 0))
	"""
	scale = target / max(height, width)
	h = max(1, int(np.floor(height * scale + 0.5)))
	w = max(1, int(np.floor(width * scale + 0.5)))
	top, left = (target - h) // 2, (target - w) // 2
	return (h, w), (top, target - h - top, left, target - w - left)


def letterbox(sample, target=LETTERBOX_SIZE, pad_class=11):
	"""
	Scale the longer side to ``target`` and pad symmetrically to a square.

	The image pads with 0, the mask with ``pad_class`` (the unlabeled class).
	"""
	(h, w), (top, bottom, left, right) = letterbox_geometry(*sample.size, target=target)
	image = resize_image(sample.image, (h, w))
	mask = resize_mask(sample.mask, (h, w))
	image = np.pad(image, ((0, 0), (top, bottom), (left, right)))
	mask = np.pad(mask, ((top, bottom), (left, right)), constant_values=pad_class)
	return SegSample(image, mask, sample.name)


@dataclass(frozen=True)
class AugmentParams:
	"""
	Augmentation ranges.

	``crop_scale`` bounds the crop area as a fraction of the image; each
	jitter factor is drawn from ``[1 - m, 1 + m]``.
	"""
	crop_scale: tuple = (0.8, 1.0)
	brightness: float = 0.2
	contrast: float = 0.2
	saturation: float = 0.2

	@classmethod
	def identity(cls):
		return cls(crop_scale=(1.0, 1.0), brightness=0.0, contrast=0.0, saturation=0.0)


def random_crop(sample, rng, scale=(0.8, 1.0)):
	""" Crop a random window covering ``scale`` of the area and resize it back. """
	height, width = sample.size
	area = rng.uniform(*scale)
	side = np.sqrt(area)
	h = min(height, max(1, int(np.floor(height * side + 0.5))))
	w = min(width, max(1, int(np.floor(width * side + 0.5))))
	top = int(rng.integers(0, height - h + 1))
	left = int(rng.integers(0, width - w + 1))
	if (h, w) == (height, width):
		return sample
	image = resize_image(sample.image[:, top:top + h, left:left + w], (height, width))
	mask = resize_mask(sample.mask[top:top + h, left:left + w], (height, width))
	return SegSample(image, mask, sample.name)


def color_jitter(image, rng, brightness=0.2, contrast=0.2, saturation=0.2):
	""" Brightness, contrast then saturation; factors of exactly 1 leave the image untouched. """
	factors = [rng.uniform(1 - m, 1 + m) for m in (brightness, contrast, saturation)]
	out = image
	if factors[0] != 1.0:
		out = out * np.float32(factors[0])
	if factors[1] != 1.0:
		mean = np.tensordot(GRAY_WEIGHTS, out, axes=1).mean()
		out = (out - mean) * np.float32(factors[1]) + mean
	if factors[2] != 1.0:
		gray = np.tensordot(GRAY_WEIGHTS, out, axes=1)[None]
		out = (out - gray) * np.float32(factors[2]) + gray
	if out is image:
		return image
	return np.clip(out, 0.0, 1.0).astype(np.float32)


def augment(sample, rng, params=AugmentParams()):
	"""
	Random crop (image and mask together) followed by colour jitter (image only).

	Parameters
	----------
	sample : SegSample
	rng : np.random.Generator
	params : AugmentParams
	"""
	cropped = random_crop(sample, rng, params.crop_scale)
	image = color_jitter(cropped.image, rng, params.brightness, params.contrast, params.saturation)
	return SegSample(image, cropped.mask, sample.name)
