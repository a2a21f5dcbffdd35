import warnings

import numpy as np
import pytest

from pta_unet.errors import AutodiffError, ConfigError, NumericalError, ShapeError
from pta_unet.tensor import (Function, GradTape, Parameter, Profiler, Tensor, add, backward, batchnorm2d, bias_add,
							 check_finite, concat_channels, conv2d, default_dtype, mean2, precision, relu6,
							 softmax_channels, tensor_sum, upsample_bilinear2x)
from pta_unet.tensor.functional import bilinear_matrix
from pta_unet.training.loss import dice_loss_tensor


class WeightedSum(Function):
	name = 'weighted_sum'

	def forward(self, x):
		return np.asarray((x * self.attrs['weights']).sum(), dtype=x.dtype)

	def backward(self, grad):
		return (grad * self.attrs['weights'],)

	def output_shape(self, x_shape):
		return ()


def weighted(x, seed=7):
	weights = np.random.default_rng(seed).normal(size=x.shape).astype(x.dtype)
	return WeightedSum.apply(x, weights=weights)


def naive_conv(x, w, stride, padding, groups):
	n, _, h, wd = x.shape
	cout, cin_g, k, _ = w.shape
	cout_g = cout // groups
	xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
	h_out = (h + 2 * padding - k) // stride + 1
	w_out = (wd + 2 * padding - k) // stride + 1
	out = np.zeros((n, cout, h_out, w_out))
	for b in range(n):
		for o in range(cout):
			g = o // cout_g
			for i in range(h_out):
				for j in range(w_out):
					total = 0.0
					for c in range(cin_g):
						for di in range(k):
							for dj in range(k):
								total += xp[b, g * cin_g + c, i * stride + di, j * stride + dj] * w[o, c, di, dj]
					out[b, o, i, j] = total
	return out


SEEDS = range(10)


# (cin, cout, kernel, stride, padding, groups)
CONV_CASES = [(3, 4, 3, 1, 1, 1),
			  (4, 6, 3, 2, 1, 2),
			  (4, 4, 3, 2, 1, 4),
			  (2, 4, 3, 1, 1, 2),
			  (5, 3, 1, 1, 0, 1),
			  (4, 8, 1, 2, 0, 1),
			  (3, 2, 3, 1, 0, 1)]


@pytest.mark.parametrize('cin, cout, k, stride, padding, groups', CONV_CASES)
def test_conv2d_matches_direct_loops(cin, cout, k, stride, padding, groups):
	rng = np.random.default_rng(0)
	x = rng.normal(size=(2, cin, 7, 6))
	w = rng.normal(size=(cout, cin // groups, k, k))
	with precision('float64'):
		out = conv2d(Tensor(x), Tensor(w), stride=stride, padding=padding, groups=groups)
	np.testing.assert_array_equal(out.data, naive_conv(x, w, stride, padding, groups))


def test_conv2d_matches_direct_loops_at_full_size():
	rng = np.random.default_rng(11)
	x = rng.normal(size=(2, 8, 16, 16))
	w = rng.normal(size=(8, 8, 3, 3))
	with precision('float64'):
		out = conv2d(Tensor(x), Tensor(w), stride=1, padding=1)
	np.testing.assert_array_equal(out.data, naive_conv(x, w, 1, 1, 1))


@pytest.mark.parametrize('seed', SEEDS)
def test_conv2d_gradients(seed, grad_precision, gradient_error):
	dtype, tolerance = grad_precision
	rng = np.random.default_rng(seed)
	cin, cout, k, stride, padding, groups = CONV_CASES[seed % len(CONV_CASES)]
	x = rng.normal(size=(2, cin, *rng.integers(4, 8, size=2)))
	w = rng.normal(size=(cout, cin // groups, k, k))
	error = gradient_error(lambda x, w: weighted(conv2d(x, w, stride, padding, groups)), [x, w], dtype)
	assert error < tolerance


@pytest.mark.parametrize('training', [True, False])
@pytest.mark.parametrize('seed', SEEDS)
def test_batchnorm_gradients(seed, training, grad_precision, gradient_error):
	dtype, tolerance = grad_precision
	rng = np.random.default_rng(seed)
	channels = int(rng.integers(2, 5))
	x = rng.normal(1.0, 2.0, size=(3, channels, 3, 3))
	gamma, beta = rng.uniform(0.5, 1.5, size=channels), rng.normal(size=channels)
	running_mean, running_var = rng.normal(size=channels), rng.uniform(0.5, 2.0, size=channels)

	def loss(x, gamma, beta):
		return weighted(batchnorm2d(x, gamma, beta, running_mean.copy(), running_var.copy(), training))

	assert gradient_error(loss, [x, gamma, beta], dtype) < tolerance


def test_batchnorm_updates_running_statistics():
	x = np.random.default_rng(3).normal(2.0, 3.0, size=(4, 2, 5, 5))
	running_mean, running_var = np.zeros(2), np.ones(2)
	with precision('float64'):
		batchnorm2d(Tensor(x), Tensor(np.ones(2)), Tensor(np.zeros(2)), running_mean, running_var, True, momentum=0.1)
	np.testing.assert_allclose(running_mean, 0.1 * x.mean(axis=(0, 2, 3)))
	np.testing.assert_allclose(running_var, 0.9 + 0.1 * x.var(axis=(0, 2, 3), ddof=1))


def test_batchnorm_eval_leaves_running_statistics():
	running_mean, running_var = np.full(2, 0.5), np.full(2, 2.0)
	out = batchnorm2d(Tensor(np.ones((1, 2, 2, 2))), Tensor(np.ones(2)), Tensor(np.zeros(2)),
					  running_mean, running_var, False)
	assert running_mean.tolist() == [0.5, 0.5]
	np.testing.assert_allclose(out.data, 0.5 / np.sqrt(2.0 + 1e-5), rtol=1e-6)


@pytest.mark.parametrize('seed', SEEDS)
def test_relu6_gradients(seed, grad_precision, gradient_error):
	dtype, tolerance = grad_precision
	x = np.random.default_rng(seed).uniform(-3, 9, size=(2, 3, 4, 4))
	# keep finite differences away from the kinks
	x[np.abs(x) < 0.01] += 0.05
	x[np.abs(x - 6) < 0.01] += 0.05
	assert gradient_error(lambda x: weighted(relu6(x)), [x], dtype) < tolerance
	assert relu6(Tensor([[-1.0, 3.0, 7.0]])).data.tolist() == [[0.0, 3.0, 6.0]]


@pytest.mark.parametrize('seed', SEEDS)
def test_upsample_gradients(seed, grad_precision, gradient_error):
	dtype, tolerance = grad_precision
	rng = np.random.default_rng(seed)
	x = rng.normal(size=(int(rng.integers(1, 3)), 2, *rng.integers(1, 6, size=2)))
	assert gradient_error(lambda x: weighted(upsample_bilinear2x(x)), [x], dtype) < tolerance


def test_upsample_interpolation():
	matrix = bilinear_matrix(4, np.float64)
	np.testing.assert_allclose(matrix.sum(axis=1), 1.0)
	# output 1 reads source 0.25, output 2 reads source 0.75
	np.testing.assert_allclose(matrix[1], [0.75, 0.25, 0.0, 0.0])
	np.testing.assert_allclose(matrix[2], [0.25, 0.75, 0.0, 0.0])
	np.testing.assert_allclose(matrix[0], [1.0, 0.0, 0.0, 0.0])

	constant = upsample_bilinear2x(Tensor(np.full((1, 1, 3, 5), 0.25)))
	assert constant.shape == (1, 1, 6, 10)
	np.testing.assert_allclose(constant.data, 0.25)


@pytest.mark.parametrize('seed', SEEDS)
def test_combination_gradients(seed, grad_precision, gradient_error):
	dtype, tolerance = grad_precision
	rng = np.random.default_rng(seed)
	a, b = rng.normal(size=(2, 3, 2, 2)), rng.normal(size=(2, 3, 2, 2))
	c, bias = rng.normal(size=(2, 1, 2, 2)), rng.normal(size=4)

	def loss(a, b, c, bias):
		mixed = concat_channels(mean2(a, add(a, b)), c)
		return weighted(bias_add(mixed, bias))

	assert gradient_error(loss, [a, b, c, bias], dtype) < tolerance


@pytest.mark.parametrize('seed', SEEDS)
def test_softmax_gradients(seed, grad_precision, gradient_error):
	dtype, tolerance = grad_precision
	rng = np.random.default_rng(seed)
	x = rng.normal(scale=3.0, size=(2, int(rng.integers(2, 6)), 3, 3))
	assert gradient_error(lambda x: weighted(softmax_channels(x)), [x], dtype) < tolerance


def test_softmax_sums_to_one():
	out = softmax_channels(Tensor(np.random.default_rng(8).normal(size=(2, 5, 3, 3)) * 20))
	np.testing.assert_allclose(out.data.sum(axis=1), 1.0, rtol=1e-6)


def test_default_precision():
	assert default_dtype() is np.float32
	with precision('float64'):
		assert Tensor([1.0]).dtype == np.float64
		assert Parameter([1.0]).dtype == np.float64
	assert Tensor([1.0]).dtype == np.float32


def test_tape_records_in_order():
	x = Parameter(np.ones((1, 1, 2, 2)))
	with GradTape() as tape:
		loss = tensor_sum(relu6(add(x, x)))
	assert len(tape) == 3
	assert [fn.name for fn, _, _ in tape.records] == ['add', 'relu6', 'sum']
	# x feeds both inputs of add
	assert tape.backward(loss)[x].tolist() == [[[[2.0, 2.0], [2.0, 2.0]]]]


def test_tape_is_one_shot():
	x = Parameter([1.0, 2.0])
	with GradTape() as tape:
		loss = x.sum()
	tape.backward(loss)
	with pytest.raises(AutodiffError):
		tape.backward(loss)

	tape.reset()
	with tape:
		loss = tensor_sum(x)
	assert tape.backward(loss)[x].tolist() == [1.0, 1.0]


def test_scalar_outputs_stay_zero_dimensional():
	assert Tensor(3.0).shape == ()
	x = Parameter(np.ones((1, 1, 2, 2)))
	with GradTape() as tape:
		loss = x.sum()
	assert loss.shape == ()
	assert tape.backward(loss)[x].shape == (1, 1, 2, 2)
	with Profiler():
		assert Tensor.placeholder((1, 1, 2, 2)).sum().shape == ()

	probs = softmax_channels(Tensor(np.random.default_rng(9).normal(size=(2, 3, 4, 4))))
	target = np.eye(3)[np.random.default_rng(10).integers(0, 3, size=(2, 4, 4))].transpose(0, 3, 1, 2)
	dice = dice_loss_tensor(probs, target)
	assert dice.shape == ()
	with warnings.catch_warnings():
		warnings.simplefilter('error')
		assert 0.0 <= float(dice.data) <= 1.0


def test_backward_needs_a_scalar_on_a_tape():
	x = Parameter(np.ones((1, 1, 2, 2)))
	with GradTape() as tape:
		out = relu6(x)
	with pytest.raises(AutodiffError):
		tape.backward(out)
	with pytest.raises(AutodiffError):
		backward(Tensor(1.0))


def test_unused_inputs_get_zero_gradients():
	x, unused = Parameter([1.0, 2.0]), Parameter([[3.0]])
	with GradTape() as tape:
		loss = x.sum()
	grads = tape.backward(loss, [x, unused])
	assert grads[unused].tolist() == [[0.0]]
	assert unused.grad.shape == (1, 1)


def test_operations_outside_a_tape_are_not_recorded():
	x = Parameter([1.0])
	out = x.sum()
	assert not out.requires_grad
	assert out._tape is None


def test_non_finite_values_raise():
	bad = Tensor(np.array([[[[np.nan]]]]))
	with pytest.raises(NumericalError):
		relu6(bad)
	with check_finite(False):
		out = add(bad, bad)
	assert np.isnan(out.data).all()


def test_conv2d_validates_arguments():
	x, w = Tensor(np.zeros((1, 3, 4, 4))), Tensor(np.zeros((2, 3, 3, 3)))
	with pytest.raises(ConfigError):
		conv2d(x, w, stride=0)
	with pytest.raises(ShapeError):
		conv2d(Tensor(np.zeros((1, 2, 4, 4))), w)
	with pytest.raises(ShapeError):
		conv2d(x, Tensor(np.zeros((2, 3, 5, 5))))
	with pytest.raises(ShapeError):
		add(Tensor(np.zeros((1, 2))), Tensor(np.zeros((2, 1))))


def test_profiler_records_shapes_without_computing():
	w = Tensor(np.ones((8, 3, 3, 3)))
	with Profiler() as profiler:
		out = conv2d(Tensor.placeholder((1, 3, 32, 32)), w, stride=2, padding=1)
		out = relu6(out)
	assert out.shape == (1, 8, 16, 16)
	assert out.data.strides == (0, 0, 0, 0)
	assert [(name, output) for _, name, _, output, _ in profiler.records] == [('conv2d', (1, 8, 16, 16)),
																			 ('relu6', (1, 8, 16, 16))]
