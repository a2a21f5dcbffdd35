import numpy as np
import pytest

from pta_unet.data import make_synthetic
from pta_unet.model import ModelConfig, build_model
from pta_unet.tensor import GradTape, Parameter, precision


@pytest.fixture
def rng():
	return np.random.default_rng(1234)


@pytest.fixture
def toy_config():
	return ModelConfig.toy(n_classes=4)


@pytest.fixture
def toy_model(toy_config):
	return build_model(seed=0, config=toy_config)


@pytest.fixture
def tiny_dataset():
	return make_synthetic(6, size=32, n_classes=4, seed=0, n_val=2, n_test=2)


def _numeric_grad(loss_fn, tensor, h=1e-6, indices=None):
	""" Central differences of ``loss_fn()`` with respect to entries of ``tensor.data``. """
	flat = tensor.data.reshape(-1)
	indices = range(flat.size) if indices is None else indices
	grad = {}
	for i in indices:
		original = flat[i]
		flat[i] = original + h
		plus = float(loss_fn().data)
		flat[i] = original - h
		minus = float(loss_fn().data)
		flat[i] = original
		grad[int(i)] = (plus - minus) / (2 * h)
	return grad


@pytest.fixture
def numeric_grad():
	return _numeric_grad


def _gradient_error(loss_fn, arrays, dtype):
	"""
	Largest deviation of the analytic gradient computed at ``dtype`` from
	float64 central differences, relative to the largest gradient entry.
	"""
	with precision(dtype):
		params = [Parameter(np.array(a)) for a in arrays]
		with GradTape() as tape:
			loss = loss_fn(*params)
		grads = tape.backward(loss, params)
		analytic = [grads[p].reshape(-1).astype(np.float64) for p in params]
	worst = 0.0
	with precision('float64'):
		params = [Parameter(np.array(a)) for a in arrays]
		for param, got in zip(params, analytic):
			numeric = _numeric_grad(lambda: loss_fn(*params), param)
			expected = np.array([numeric[i] for i in range(param.size)])
			scale = max(np.abs(expected).max(), 1e-8)
			worst = max(worst, np.abs(got - expected).max() / scale)
	return worst


@pytest.fixture
def gradient_error():
	return _gradient_error


@pytest.fixture(params=[('float32', 1e-3), ('float64', 1e-5)], ids=['float32', 'float64'])
def grad_precision(request):
	""" Engine dtype and the largest accepted relative gradient error at that dtype. """
	return request.param
