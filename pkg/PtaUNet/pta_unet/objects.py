"""
Objects
=======

Provides base class for parameterised network objects.
"""

import hashlib
from collections import OrderedDict

import numpy as np

from .errors import CheckpointError
from .tensor import Parameter, Tensor, scope, profiling


class Module:
	"""
	Object holding named parameters, buffers and child modules.

	Attributes are registered on assignment: :class:`Parameter` values become
	parameters, :class:`Module` values become children, in assignment order.
	Qualified names (``encoder.features.3.conv.0.weight``) follow that order.
	"""

	def __init__(self):
		object.__setattr__(self, '_parameters', OrderedDict())
		object.__setattr__(self, '_buffers', OrderedDict())
		object.__setattr__(self, '_modules', OrderedDict())
		object.__setattr__(self, 'training', True)
		object.__setattr__(self, 'qualname', '')

	def __setattr__(self, name, value):
		if isinstance(value, Parameter):
			self._parameters[name] = value
		elif isinstance(value, Module):
			self._modules[name] = value
		object.__setattr__(self, name, value)

	def __repr__(self):
		return f"{self.__class__.__name__}({self.extra_repr()})"

	def extra_repr(self):
		return ''

	def __call__(self, *args, **kwargs):
		if profiling():
			with scope(self.qualname):
				return self.forward(*args, **kwargs)
		return self.forward(*args, **kwargs)

	def forward(self, *args, **kwargs):
		raise NotImplementedError(f"{self.__class__.__name__} has no forward")

	def register_buffer(self, name, values):
		tensor = Tensor(values)
		self._buffers[name] = tensor
		object.__setattr__(self, name, tensor)

	def add_module(self, name, module):
		self._modules[name] = module
		object.__setattr__(self, name, module)

	# Traversal ----

	def children(self, reachable=False):
		"""
		Child modules in registration order.

		With ``reachable=True`` only children a forward pass under the current
		configuration would execute are listed.
		"""
		return iter(self._modules.items())

	def named_modules(self, prefix='', reachable=False):
		yield prefix, self
		for name, child in self.children(reachable=reachable):
			yield from child.named_modules(f"{prefix}.{name}" if prefix else name, reachable=reachable)

	def named_parameters(self, prefix='', reachable=False):
		for module_name, module in self.named_modules(prefix, reachable=reachable):
			for name, param in module._parameters.items():
				yield (f"{module_name}.{name}" if module_name else name), param

	def parameters(self, reachable=False):
		return [param for _, param in self.named_parameters(reachable=reachable)]

	def named_buffers(self, prefix='', reachable=False):
		for module_name, module in self.named_modules(prefix, reachable=reachable):
			for name, buffer in module._buffers.items():
				yield (f"{module_name}.{name}" if module_name else name), buffer

	def assign_qualnames(self):
		""" Store each module's qualified name on the module (read by profilers). """
		for name, module in self.named_modules():
			object.__setattr__(module, 'qualname', name)

	# Modes ----

	def train(self, mode=True):
		for _, module in self.named_modules():
			object.__setattr__(module, 'training', mode)
		return self

	def eval(self):
		return self.train(False)

	# State ----

	def state_dict(self):
		""" Ordered mapping of parameter and buffer names to arrays (parameters first per module). """
		state = OrderedDict()
		for module_name, module in self.named_modules():
			for name, tensor in list(module._parameters.items()) + list(module._buffers.items()):
				state[f"{module_name}.{name}" if module_name else name] = tensor.data
		return state

	def load_state_dict(self, state, strict=True):
		"""
		Copy arrays into parameters and buffers.

		Parameters
		----------
		state : Mapping[str, np.ndarray]
		strict : bool
			If True, key sets must match exactly; otherwise unknown keys are ignored
			and missing keys keep their current values.
		"""
		targets = OrderedDict()
		for module_name, module in self.named_modules():
			for name, tensor in list(module._parameters.items()) + list(module._buffers.items()):
				targets[f"{module_name}.{name}" if module_name else name] = tensor
		if strict:
			missing = [key for key in targets if key not in state]
			unexpected = [key for key in state if key not in targets]
			if missing or unexpected:
				raise CheckpointError(f"state mismatch: missing {missing[:5]}, unexpected {unexpected[:5]}")
		for key, tensor in targets.items():
			if key not in state:
				continue
			values = np.asarray(state[key])
			if values.shape != tensor.shape:
				raise CheckpointError(f"state mismatch for '{key}': expected shape {tensor.shape}, got {values.shape}")
			tensor.data = np.array(values, dtype=tensor.dtype, copy=True)

	def checksum(self):
		""" sha256 over every parameter and buffer, in state order. """
		digest = hashlib.sha256()
		for key, values in self.state_dict().items():
			digest.update(key.encode('utf-8'))
			digest.update(np.ascontiguousarray(values).tobytes())
		return digest.hexdigest()

	def num_parameters(self, reachable=False):
		return sum(param.size for param in self.parameters(reachable=reachable))


class Sequential(Module):
	""" Modules applied one after another; children are named ``0``, ``1``, ... """

	def __init__(self, *modules):
		super().__init__()
		for index, module in enumerate(modules):
			self.add_module(str(index), module)

	def __iter__(self):
		return iter(self._modules.values())

	def __len__(self):
		return len(self._modules)

	def __getitem__(self, index):
		return list(self._modules.values())[index]

	def forward(self, x):
		for module in self:
			x = module(x)
		return x
