"""
Tensor
======

Dense NCHW tensor, the differentiable-operation base class and the gradient
tape that records operations for reverse-mode differentiation.
"""

import contextlib
import logging

import numpy as np

from ..errors import AutodiffError, NumericalError

logger = logging.getLogger(__name__)

_engine = {'dtype': np.float32, 'check_finite': True}
_tapes = []
_profilers = []
_scopes = []


def default_dtype():
	""" Dtype given to newly created tensors. """
	return _engine['dtype']


@contextlib.contextmanager
def precision(dtype):
	"""
	Switch the engine dtype inside a ``with`` block.

	Parameters
	----------
	dtype : str or numpy dtype
		``"float32"`` (default engine mode) or ``"float64"`` (oracle mode).

	Examples
	--------
	>>> with precision("float64"):
	...     Tensor([1.0]).dtype
	dtype('float64')
	"""
	previous = _engine['dtype']
	_engine['dtype'] = np.dtype(dtype).type
	try:
		yield
	finally:
		_engine['dtype'] = previous


@contextlib.contextmanager
def check_finite(enabled=True):
	""" Enable or disable the NaN/Inf check run after every forward operator. """
	previous = _engine['check_finite']
	_engine['check_finite'] = enabled
	try:
		yield
	finally:
		_engine['check_finite'] = previous


class Tensor:
	"""
	Dense array of reals taking part in gradient tapes.

	Attributes
	----------
	data : np.ndarray
		Contiguous values, row-major; feature maps are (N, C, H, W).
	requires_grad : bool
		Whether operations on this tensor are recorded on the active tape.
	grad : np.ndarray or None
		Gradient written by the last backward pass.
	"""

	def __init__(self, data, requires_grad=False, dtype=None):
		self.data = np.require(data, dtype=dtype or default_dtype(), requirements='C')
		self.requires_grad = requires_grad
		self.grad = None
		self._tape = None

	@classmethod
	def _wrap(cls, data, requires_grad=False):
		out = cls.__new__(cls)
		out.data = data
		out.requires_grad = requires_grad
		out.grad = None
		out._tape = None
		return out

	@classmethod
	def placeholder(cls, shape, dtype=None):
		""" Zero-stride tensor of the given shape, used by shape-only dry runs. """
		zero = np.zeros((), dtype=dtype or default_dtype())
		return cls._wrap(np.broadcast_to(zero, tuple(shape)))

	@property
	def shape(self):
		return self.data.shape

	@property
	def ndim(self):
		return self.data.ndim

	@property
	def size(self):
		return self.data.size

	@property
	def dtype(self):
		return self.data.dtype

	def numpy(self):
		return self.data

	def sum(self):
		from .functional import tensor_sum
		return tensor_sum(self)

	def backward(self, inputs=None):
		""" Shortcut for :func:`backward` on this scalar tensor. """
		return backward(self, inputs)

	def __repr__(self):
		flag = ', requires_grad=True' if self.requires_grad else ''
		return f"{self.__class__.__name__}(shape={self.shape}, dtype={self.dtype}{flag})"


class Parameter(Tensor):
	""" Trainable tensor; always requires gradients. """

	def __init__(self, data, dtype=None):
		super().__init__(data, requires_grad=True, dtype=dtype)


class Function:
	"""
	Base class for differentiable operators.

	Subclasses implement ``forward`` (numpy arrays in, array out, saving what
	``backward`` needs on ``self``), ``backward`` (gradient of the output in, a
	tuple with one gradient or ``None`` per input out) and ``output_shape``
	(used by shape-only profiling runs).
	"""
	name = 'op'

	def __init__(self, **attrs):
		self.attrs = attrs

	def forward(self, *arrays):
		raise NotImplementedError(f"{self.name}: forward not implemented")

	def backward(self, grad):
		raise NotImplementedError(f"{self.name}: backward not implemented")

	def output_shape(self, *shapes):
		raise NotImplementedError(f"{self.name}: output_shape not implemented")

	@classmethod
	def apply(cls, *tensors, **attrs):
		"""
		Run the operator on tensors and record it on the active tape.

		Returns
		-------
		Tensor
		"""
		fn = cls(**attrs)
		profiler = _profilers[-1] if _profilers else None
		if profiler is not None:
			shape = fn.output_shape(*(t.shape for t in tensors))
			out = Tensor.placeholder(shape, tensors[0].dtype)
			profiler.record(current_scope(), fn, tensors, out)
			return out

		data = fn.forward(*(t.data for t in tensors))
		if _engine['check_finite'] and not np.isfinite(data).all():
			raise NumericalError(f"{cls.name} produced non-finite values "
								 f"(scope '{current_scope()}', output shape {data.shape})")
		tape = _tapes[-1] if _tapes else None
		requires_grad = tape is not None and any(t.requires_grad for t in tensors)
		out = Tensor._wrap(np.require(data, requirements='C'), requires_grad=requires_grad)
		if requires_grad:
			tape.record(fn, tensors, out)
		return out


class GradTape:
	"""
	Ordered record of differentiable operations.

	Operations run inside ``with GradTape() as tape:`` are recorded in call
	order; :meth:`backward` replays them in exact reverse order. A tape can be
	replayed once; call :meth:`reset` before recording again.

	Examples
	--------
	>>> x = Parameter([1.0, 2.0])
	>>> with GradTape() as tape:
	...     loss = x.sum()
	>>> tape.backward(loss)[x]
	array([1., 1.], dtype=float32)
	"""

	def __init__(self):
		self.records = []
		self.consumed = False

	def __enter__(self):
		_tapes.append(self)
		return self

	def __exit__(self, *exc_info):
		_tapes.remove(self)

	def __len__(self):
		return len(self.records)

	def record(self, fn, inputs, output):
		output._tape = self
		self.records.append((fn, inputs, output))

	def reset(self):
		self.records = []
		self.consumed = False

	def backward(self, loss, inputs=None):
		"""
		Propagate gradients from a scalar loss.

		Parameters
		----------
		loss : Tensor
			Scalar recorded on this tape.
		inputs : iterable of Tensor, optional
			Tensors whose gradients are wanted. Tensors that the loss does not
			depend on receive zeros. Defaults to every leaf the loss reaches.

		Returns
		-------
		dict
			Mapping from tensor to gradient array (same shape as the tensor).
			Each tensor's ``grad`` attribute is set as well.
		"""
		if self.consumed:
			raise AutodiffError("backward already ran on this tape; call reset() before reusing it")
		if loss.size != 1:
			raise AutodiffError(f"backward needs a scalar loss, got shape {loss.shape}")

		wanted = None if inputs is None else list(inputs)
		keep = None if wanted is None else {id(t) for t in wanted}
		produced = {id(out) for _, _, out in self.records}
		grads = {id(loss): np.ones_like(loss.data)}
		tensors = {id(loss): loss}

		for fn, fn_inputs, out in reversed(self.records):
			grad = grads.get(id(out))
			if grad is None:
				continue
			if keep is None or id(out) not in keep:
				del grads[id(out)]
			for tensor, tensor_grad in zip(fn_inputs, fn.backward(grad)):
				if tensor_grad is None or not tensor.requires_grad:
					continue
				key = id(tensor)
				if key in grads:
					grads[key] = grads[key] + tensor_grad
				else:
					grads[key] = tensor_grad
					tensors[key] = tensor
		self.consumed = True

		if wanted is None:
			wanted = [tensors[key] for key in grads if key not in produced]
		result = {}
		for tensor in wanted:
			grad = grads.get(id(tensor))
			if grad is None:
				grad = np.zeros_like(tensor.data)
			tensor.grad = grad.reshape(tensor.shape)
			result[tensor] = tensor.grad
		logger.debug("backward replayed %d operations, %d gradients", len(self.records), len(result))
		return result


def backward(loss, inputs=None):
	"""
	Reverse-mode differentiation of a scalar loss on the tape that produced it.

	See Also
	--------
	GradTape.backward
	"""
	if loss._tape is None:
		raise AutodiffError("loss was not recorded on a gradient tape")
	return loss._tape.backward(loss, inputs)


@contextlib.contextmanager
def scope(name):
	""" Name the module currently issuing operations (read by profilers). """
	_scopes.append(name)
	try:
		yield
	finally:
		_scopes.pop()


def current_scope():
	return _scopes[-1] if _scopes else ''


def profiling():
	""" True while a shape-only profiler is active. """
	return bool(_profilers)


class Profiler:
	"""
	Shape-only dry run recorder.

	While active, operators compute output shapes instead of values and the
	profiler keeps one entry per call: ``(scope, op name, input shapes, output
	shape, attributes)``.
	"""

	def __init__(self):
		self.records = []

	def __enter__(self):
		_profilers.append(self)
		return self

	def __exit__(self, *exc_info):
		_profilers.remove(self)

	def record(self, scope_name, fn, inputs, output):
		self.records.append((scope_name, fn.name, tuple(t.shape for t in inputs), output.shape, fn.attrs))
