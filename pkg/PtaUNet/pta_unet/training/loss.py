"""
Loss
====

Soft Dice score and Dice loss.

``score = (2 sum(p g) + eps) / (sum(p^2) + sum(g^2) + eps)`` and
``loss = 1 - score``. In ``micro`` mode the sums run jointly over every class
and pixel of a sample; in ``macro`` mode the score is computed per class and
averaged. Batch values are the mean over samples.
"""

import numpy as np

from ..constants import DICE_EPS, dice_modes
from ..errors import ConfigError, ShapeError, shape_mismatch
from ..tensor import Function


def _check(p, g, eps, mode):
	if np.shape(p) != np.shape(g):
		raise shape_mismatch('dice', np.shape(p), np.shape(g))
	if eps <= 0:
		raise ConfigError(f"dice eps must be positive, got {eps}")
	if mode not in dice_modes:
		raise ConfigError(f"dice mode must be one of {dice_modes}, got '{mode}'")


def _sample_scores(p, g, eps, mode):
	""" Per-sample scores of (N, C, ...) arrays, computed in float64. """
	p = np.asarray(p, dtype=np.float64).reshape(p.shape[0], p.shape[1], -1)
	g = np.asarray(g, dtype=np.float64).reshape(g.shape[0], g.shape[1], -1)
	if mode == 'micro':
		axes = (1, 2)
	else:
		axes = 2
	inter = (p * g).sum(axis=axes)
	denom = (p * p).sum(axis=axes) + (g * g).sum(axis=axes)
	scores = (2.0 * inter + eps) / (denom + eps)
	return scores if mode == 'micro' else scores.mean(axis=1)


def dice_score(p, g, eps=DICE_EPS, mode='micro'):
	"""
	Dice score of one sample.

	Parameters
	----------
	p : array_like
		Predicted probabilities, class axis first (``(C, H, W)`` or ``(C,)``).
	g : array_like
		One-hot ground truth, same shape.
	eps : float
	mode : {'micro', 'macro'}

	Returns
	-------
	float

	Examples
	--------
	>>> round(dice_score([0.5, 0.5], [1.0, 0.0]), 6)
	0.666667
	"""
	p, g = np.asarray(p), np.asarray(g)
	_check(p, g, eps, mode)
	return float(_sample_scores(p[None], g[None], eps, mode)[0])


def dice_loss(p, g, eps=DICE_EPS, mode='micro'):
	""" ``1 - dice_score(p, g)``; the two always add up to exactly 1. """
	return 1.0 - dice_score(p, g, eps=eps, mode=mode)


def dice_score_batch(p, g, eps=DICE_EPS, mode='micro'):
	""" Mean per-sample Dice score of (N, C, H, W) batches. """
	p, g = np.asarray(p), np.asarray(g)
	_check(p, g, eps, mode)
	if p.ndim < 2:
		raise ShapeError(f"dice_score_batch: expected (N, C, ...), got shape {p.shape}")
	return float(_sample_scores(p, g, eps, mode).mean())


class DiceLoss(Function):
	""" Batch-mean Dice loss of probabilities against a fixed one-hot target. """
	name = 'dice_loss'

	def forward(self, p):
		g = self.attrs['target'].astype(np.float64).reshape(p.shape[0], p.shape[1], -1)
		eps, micro = self.attrs['eps'], self.attrs['mode'] == 'micro'
		self.shape, self.dtype = p.shape, p.dtype
		p = p.astype(np.float64).reshape(g.shape)
		axes = (1, 2) if micro else 2
		inter = (p * g).sum(axis=axes, keepdims=True)
		denom = (p * p).sum(axis=axes, keepdims=True) + (g * g).sum(axis=axes, keepdims=True) + eps
		scores = (2.0 * inter + eps) / denom
		self.saved = (p, g, inter, denom)
		return np.asarray(1.0 - scores.mean(), dtype=self.dtype)

	def backward(self, grad):
		p, g, inter, denom = self.saved
		n_terms = p.shape[0] if self.attrs['mode'] == 'micro' else p.shape[0] * p.shape[1]
		d_score = (2.0 * g * denom - (2.0 * inter + self.attrs['eps']) * 2.0 * p) / (denom * denom)
		gp = -float(grad) * d_score / n_terms
		return (gp.reshape(self.shape).astype(self.dtype),)

	def output_shape(self, p_shape):
		return ()


def dice_loss_tensor(probs, target, eps=DICE_EPS, mode='micro'):
	"""
	Differentiable batch Dice loss.

	Parameters
	----------
	probs : Tensor
		(N, C, H, W) softmax probabilities.
	target : np.ndarray
		One-hot ground truth of the same shape.
	"""
	_check(probs.data, target, eps, mode)
	return DiceLoss.apply(probs, target=np.asarray(target), eps=eps, mode=mode)
