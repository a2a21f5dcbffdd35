"""
Functional
==========

Forward operators of the segmentation network and their gradients.

Every operator is a :class:`~pta_unet.tensor.tensor.Function` subclass with a
thin wrapper function that validates arguments and calls ``apply``.
"""

import numpy as np

from ..errors import ConfigError, ShapeError, shape_mismatch
from .tensor import Function

np_window = np.lib.stride_tricks.sliding_window_view


# Convolution ----

def conv_output_size(size, kernel, stride, padding):
	return (size + 2 * padding - kernel) // stride + 1


def _pad(x, padding):
	if not padding:
		return x
	return np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))


def _windows(xp, kernel, stride, h_out, w_out):
	""" (N, C, h_out, w_out, k, k) strided view over a padded input. """
	win = np_window(xp, (kernel, kernel), axis=(2, 3))
	return win[:, :, :(h_out - 1) * stride + 1:stride, :(w_out - 1) * stride + 1:stride]


def _conv_ordered(x, w, stride, padding, groups, h_out, w_out):
	""" Direct convolution summing input channel, kernel row and kernel column in that order. """
	cout, cin_g, k, _ = w.shape
	xp = _pad(x, padding)
	first = np.arange(groups).repeat(cout // groups) * cin_g
	out = np.zeros((x.shape[0], cout, h_out, w_out), dtype=np.float64)
	for c in range(cin_g):
		planes = xp[:, first + c]
		for i in range(k):
			for j in range(k):
				patch = planes[:, :, i:i + (h_out - 1) * stride + 1:stride, j:j + (w_out - 1) * stride + 1:stride]
				out += patch * w[:, c, i, j][None, :, None, None]
	return out


def _conv(x, w, stride, padding, groups):
	n, c, h, wd = x.shape
	cout, cin_g, k, _ = w.shape
	h_out = conv_output_size(h, k, stride, padding)
	w_out = conv_output_size(wd, k, stride, padding)
	cout_g = cout // groups

	# float64 runs reproduce the direct-loop reference bit for bit
	if np.result_type(x, w) == np.float64:
		return _conv_ordered(x, w, stride, padding, groups, h_out, w_out)

	if k == 1 and padding == 0 and groups == 1:
		xs = x[:, :, ::stride, ::stride] if stride > 1 else x
		out = np.matmul(w.reshape(cout, c), xs.reshape(n, c, -1))
		return out.reshape(n, cout, h_out, w_out)

	xp = _pad(x, padding)
	if groups == c and cin_g == 1 and cout_g == 1:
		out = np.zeros((n, c, h_out, w_out), dtype=np.result_type(x, w))
		for i in range(k):
			for j in range(k):
				patch = xp[:, :, i:i + (h_out - 1) * stride + 1:stride, j:j + (w_out - 1) * stride + 1:stride]
				out += patch * w[:, 0, i, j][None, :, None, None]
		return out

	win = _windows(xp, k, stride, h_out, w_out)
	if groups == 1:
		cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(n, h_out * w_out, c * k * k)
		out = np.matmul(cols, w.reshape(cout, -1).T)
		return out.transpose(0, 2, 1).reshape(n, cout, h_out, w_out)

	win = win.reshape(n, groups, cin_g, h_out, w_out, k, k)
	out = np.einsum('ngchwij,gocij->ngohw', win, w.reshape(groups, cout_g, cin_g, k, k), optimize=True)
	return out.reshape(n, cout, h_out, w_out)


def _conv_weight_grad(x, w_shape, grad, stride, padding, groups):
	n, c = x.shape[:2]
	cout, cin_g, k, _ = w_shape
	h_out, w_out = grad.shape[2:]
	cout_g = cout // groups

	if k == 1 and padding == 0 and groups == 1:
		xs = x[:, :, ::stride, ::stride] if stride > 1 else x
		gw = np.matmul(grad.reshape(n, cout, -1), xs.reshape(n, c, -1).transpose(0, 2, 1)).sum(axis=0)
		return gw.reshape(w_shape)

	xp = _pad(x, padding)
	if groups == c and cin_g == 1 and cout_g == 1:
		gw = np.zeros(w_shape, dtype=grad.dtype)
		for i in range(k):
			for j in range(k):
				patch = xp[:, :, i:i + (h_out - 1) * stride + 1:stride, j:j + (w_out - 1) * stride + 1:stride]
				gw[:, 0, i, j] = np.einsum('nchw,nchw->c', grad, patch)
		return gw

	win = _windows(xp, k, stride, h_out, w_out)
	if groups == 1:
		cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(n, h_out * w_out, c * k * k)
		gw = np.matmul(grad.reshape(n, cout, -1), cols).sum(axis=0)
		return gw.reshape(w_shape)

	win = win.reshape(n, groups, cin_g, h_out, w_out, k, k)
	gw = np.einsum('ngohw,ngchwij->gocij', grad.reshape(n, groups, cout_g, h_out, w_out), win, optimize=True)
	return gw.reshape(w_shape)


def _conv_input_grad(grad, w, x_shape, stride, padding, groups):
	n, c, h, wd = x_shape
	cout, cin_g, k, _ = w.shape
	cout_g = cout // groups

	if k == 1 and padding == 0 and groups == 1 and stride == 1:
		gx = np.matmul(w.reshape(cout, c).T, grad.reshape(n, cout, -1))
		return gx.reshape(x_shape)

	h_out, w_out = grad.shape[2:]
	if stride > 1:
		dilated = np.zeros((n, cout, (h_out - 1) * stride + 1, (w_out - 1) * stride + 1), dtype=grad.dtype)
		dilated[:, :, ::stride, ::stride] = grad
	else:
		dilated = grad
	# correlation with the flipped, group-transposed kernel
	w_t = w.reshape(groups, cout_g, cin_g, k, k).transpose(0, 2, 1, 3, 4).reshape(c, cout_g, k, k)
	w_t = np.ascontiguousarray(w_t[:, :, ::-1, ::-1])
	partial = _conv(dilated, w_t, 1, k - 1, groups)

	padded = np.zeros((n, c, h + 2 * padding, wd + 2 * padding), dtype=grad.dtype)
	rows, cols = partial.shape[2:]
	padded[:, :, :rows, :cols] = partial
	return padded[:, :, padding:padding + h, padding:padding + wd]


class Conv2d(Function):
	name = 'conv2d'

	def forward(self, x, w):
		self.x, self.w = x, w
		return _conv(x, w, self.attrs['stride'], self.attrs['padding'], self.attrs['groups'])

	def backward(self, grad):
		stride, padding, groups = self.attrs['stride'], self.attrs['padding'], self.attrs['groups']
		gx = _conv_input_grad(grad, self.w, self.x.shape, stride, padding, groups)
		gw = _conv_weight_grad(self.x, self.w.shape, grad, stride, padding, groups)
		return gx, gw

	def output_shape(self, x_shape, w_shape):
		k, stride, padding = w_shape[2], self.attrs['stride'], self.attrs['padding']
		return (x_shape[0], w_shape[0],
				conv_output_size(x_shape[2], k, stride, padding),
				conv_output_size(x_shape[3], k, stride, padding))


def conv2d(input, weight, stride=1, padding=0, groups=1):
	"""
	2-D cross-correlation without bias.

	Parameters
	----------
	input : Tensor
		(N, Cin, H, W).
	weight : Tensor
		(Cout, Cin / groups, k, k).
	stride, padding, groups : int

	Returns
	-------
	Tensor
		(N, Cout, floor((H + 2 padding - k) / stride) + 1, ...).
	"""
	if stride < 1 or padding < 0 or groups < 1:
		raise ConfigError(f"conv2d: invalid stride={stride}, padding={padding}, groups={groups}")
	if input.ndim != 4 or weight.ndim != 4:
		raise shape_mismatch('conv2d', input.shape, weight.shape)
	cin, cout, k = input.shape[1], weight.shape[0], weight.shape[2]
	if cin % groups or cout % groups or weight.shape[1] * groups != cin or weight.shape[3] != k:
		raise shape_mismatch('conv2d', input.shape, weight.shape)
	if input.shape[2] + 2 * padding < k or input.shape[3] + 2 * padding < k:
		raise shape_mismatch('conv2d', input.shape, weight.shape)
	return Conv2d.apply(input, weight, stride=stride, padding=padding, groups=groups)


# Normalisation and activation ----

class BatchNorm2d(Function):
	name = 'batchnorm2d'

	def forward(self, x, gamma, beta):
		eps, training = self.attrs['eps'], self.attrs['training']
		if training:
			mean = x.mean(axis=(0, 2, 3))
			var = x.var(axis=(0, 2, 3))
			count = x.size // x.shape[1]
			momentum = self.attrs['momentum']
			running_mean, running_var = self.attrs['running_mean'], self.attrs['running_var']
			unbiased = var * (count / max(count - 1, 1))
			running_mean *= 1 - momentum
			running_mean += momentum * mean
			running_var *= 1 - momentum
			running_var += momentum * unbiased
		else:
			mean, var = self.attrs['running_mean'], self.attrs['running_var']
		self.inv_std = (1.0 / np.sqrt(var + eps)).astype(x.dtype)
		self.x_hat = (x - mean.astype(x.dtype)[None, :, None, None]) * self.inv_std[None, :, None, None]
		self.gamma = gamma
		return self.x_hat * gamma[None, :, None, None] + beta[None, :, None, None]

	def backward(self, grad):
		g_gamma = np.einsum('nchw,nchw->c', grad, self.x_hat)
		g_beta = grad.sum(axis=(0, 2, 3))
		g_hat = grad * self.gamma[None, :, None, None]
		if self.attrs['training']:
			count = grad.size // grad.shape[1]
			mean_g = g_hat.mean(axis=(0, 2, 3))[None, :, None, None]
			mean_gx = np.einsum('nchw,nchw->c', g_hat, self.x_hat)[None, :, None, None] / count
			gx = (g_hat - mean_g - self.x_hat * mean_gx) * self.inv_std[None, :, None, None]
		else:
			gx = g_hat * self.inv_std[None, :, None, None]
		return gx, g_gamma, g_beta

	def output_shape(self, x_shape, gamma_shape, beta_shape):
		return x_shape


def batchnorm2d(input, gamma, beta, running_mean, running_var, training, momentum=0.1, eps=1e-5):
	"""
	Per-channel batch normalisation.

	In training mode the batch statistics normalise the input and the running
	statistics (numpy arrays, updated in place) move towards them; in eval mode
	only the running statistics are used.
	"""
	if eps <= 0:
		raise ConfigError(f"batchnorm2d: eps must be positive, got {eps}")
	channels = input.shape[1]
	for vector in (gamma.shape, beta.shape, np.shape(running_mean), np.shape(running_var)):
		if vector != (channels,):
			raise shape_mismatch('batchnorm2d', input.shape, vector)
	return BatchNorm2d.apply(input, gamma, beta, training=training, momentum=momentum, eps=eps,
							 running_mean=running_mean, running_var=running_var)


class ReLU6(Function):
	name = 'relu6'

	def forward(self, x):
		self.mask = (x > 0) & (x < 6)
		return np.clip(x, 0, 6)

	def backward(self, grad):
		return (grad * self.mask,)

	def output_shape(self, x_shape):
		return x_shape


def relu6(input):
	""" Elementwise ``min(max(x, 0), 6)``. """
	return ReLU6.apply(input)


# Resampling ----

def bilinear_matrix(size, dtype=np.float32):
	"""
	(2 size, size) interpolation matrix for 2x upsampling with half-pixel centres.

	Output sample ``o`` reads source coordinate ``(o + 0.5) / 2 - 0.5``; taps
	falling outside the input are clamped to the border.
	"""
	matrix = np.zeros((2 * size, size), dtype=np.float64)
	for o in range(2 * size):
		src = (o + 0.5) / 2 - 0.5
		lo = int(np.floor(src))
		frac = src - lo
		matrix[o, min(max(lo, 0), size - 1)] += 1 - frac
		matrix[o, min(max(lo + 1, 0), size - 1)] += frac
	return matrix.astype(dtype)


class UpsampleBilinear2x(Function):
	name = 'upsample_bilinear2x'

	def forward(self, x):
		self.rows = bilinear_matrix(x.shape[2], x.dtype)
		self.cols = bilinear_matrix(x.shape[3], x.dtype)
		return np.matmul(np.matmul(self.rows, x), self.cols.T)

	def backward(self, grad):
		return (np.matmul(np.matmul(self.rows.T, grad), self.cols),)

	def output_shape(self, x_shape):
		n, c, h, w = x_shape
		return (n, c, 2 * h, 2 * w)


def upsample_bilinear2x(input):
	""" Bilinear 2x spatial upsampling, (N, C, H, W) -> (N, C, 2H, 2W). """
	if input.ndim != 4 or min(input.shape[2:]) < 1:
		raise ShapeError(f"upsample_bilinear2x: expected (N, C, H, W) with H, W >= 1, got {input.shape}")
	return UpsampleBilinear2x.apply(input)


# Combination ----

class ConcatChannels(Function):
	name = 'concat_channels'

	def forward(self, a, b):
		self.split = a.shape[1]
		return np.concatenate([a, b], axis=1)

	def backward(self, grad):
		return grad[:, :self.split], grad[:, self.split:]

	def output_shape(self, a_shape, b_shape):
		return (a_shape[0], a_shape[1] + b_shape[1]) + tuple(a_shape[2:])


def concat_channels(a, b):
	""" Stack two (N, C, H, W) tensors along channels. """
	if a.ndim != 4 or b.ndim != 4 or a.shape[0] != b.shape[0] or a.shape[2:] != b.shape[2:]:
		raise shape_mismatch('concat_channels', a.shape, b.shape)
	return ConcatChannels.apply(a, b)


class Add(Function):
	name = 'add'

	def forward(self, a, b):
		return a + b

	def backward(self, grad):
		return grad, grad

	def output_shape(self, a_shape, b_shape):
		return a_shape


def add(a, b):
	""" Elementwise sum of equal-shape tensors. """
	if a.shape != b.shape:
		raise shape_mismatch('add', a.shape, b.shape)
	return Add.apply(a, b)


class Mean2(Function):
	name = 'mean2'

	def forward(self, a, b):
		return (a + b) * 0.5

	def backward(self, grad):
		half = grad * 0.5
		return half, half

	def output_shape(self, a_shape, b_shape):
		return a_shape


def mean2(a, b):
	""" Elementwise ``(a + b) / 2`` of equal-shape tensors. """
	if a.shape != b.shape:
		raise shape_mismatch('mean2', a.shape, b.shape)
	return Mean2.apply(a, b)


class BiasAdd(Function):
	name = 'bias_add'

	def forward(self, x, bias):
		return x + bias[None, :, None, None]

	def backward(self, grad):
		return grad, grad.sum(axis=(0, 2, 3))

	def output_shape(self, x_shape, bias_shape):
		return x_shape


def bias_add(input, bias):
	""" Add a per-channel bias to an (N, C, H, W) tensor. """
	if bias.shape != (input.shape[1],):
		raise shape_mismatch('bias_add', input.shape, bias.shape)
	return BiasAdd.apply(input, bias)


class SoftmaxChannels(Function):
	name = 'softmax_channels'

	def forward(self, x):
		e = np.exp(x - x.max(axis=1, keepdims=True))
		self.out = e / e.sum(axis=1, keepdims=True)
		return self.out

	def backward(self, grad):
		s = self.out
		return (s * (grad - (grad * s).sum(axis=1, keepdims=True)),)

	def output_shape(self, x_shape):
		return x_shape


def softmax_channels(x):
	""" Softmax across the channel axis at every (n, h, w). """
	if x.ndim < 2:
		raise ShapeError(f"softmax_channels: expected a channel axis, got shape {x.shape}")
	return SoftmaxChannels.apply(x)


class Sum(Function):
	name = 'sum'

	def forward(self, x):
		self.shape = x.shape
		return np.asarray(x.sum(), dtype=x.dtype)

	def backward(self, grad):
		return (np.full(self.shape, grad, dtype=grad.dtype),)

	def output_shape(self, x_shape):
		return ()


def tensor_sum(x):
	""" Scalar sum of all elements. """
	return Sum.apply(x)
