"""
Optim
=====

Adam with bias correction.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, shape_mismatch


@dataclass
class AdamState:
	"""
	Optimizer state.

	Attributes
	----------
	step : int
		Number of :func:`adam_step` calls.
	moments : dict
		``id(param) -> [m, v, t]``: first and second moments and the number of
		updates that parameter received.
	"""
	step: int = 0
	moments: dict = field(default_factory=dict)

	def moment(self, param):
		entry = self.moments.get(id(param))
		if entry is None:
			entry = [np.zeros_like(param.data), np.zeros_like(param.data), 0]
			self.moments[id(param)] = entry
		return entry


def adam_step(params, grads, state, lr, betas=(0.9, 0.999), eps=1e-8):
	"""
	One in-place Adam update.

	Parameters
	----------
	params : list of Parameter
	grads : Mapping[Parameter, np.ndarray]
		Parameters without an entry are skipped entirely (no moment decay).
	state : AdamState
	lr : float
	"""
	beta1, beta2 = betas
	for param in params:
		grad = grads.get(param)
		if grad is None:
			continue
		if grad.shape != param.shape:
			raise shape_mismatch('adam_step', param.shape, grad.shape)
		entry = state.moment(param)
		m, v = entry[0], entry[1]
		entry[2] += 1
		t = entry[2]
		m *= beta1
		m += (1 - beta1) * grad
		v *= beta2
		v += (1 - beta2) * grad * grad
		m_hat = m / (1 - beta1 ** t)
		v_hat = v / (1 - beta2 ** t)
		param.data -= (lr * m_hat / (np.sqrt(v_hat) + eps)).astype(param.dtype)
	state.step += 1
	return state


class Adam:
	"""
	Adam bound to a parameter list.

	Examples
	--------
	>>> opt = Adam(model.parameters(), lr=1e-3)
	>>> opt.step(grads)
	"""

	def __init__(self, params, lr=1e-3, betas=(0.9, 0.999), eps=1e-8):
		if lr <= 0 or eps <= 0:
			raise ConfigError(f"Adam needs positive lr and eps, got lr={lr}, eps={eps}")
		if not all(0 <= b < 1 for b in betas):
			raise ConfigError(f"Adam betas must lie in [0, 1), got {betas}")
		self.params = list(params)
		self.lr = lr
		self.betas = tuple(betas)
		self.eps = eps
		self.state = AdamState()

	def step(self, grads):
		adam_step(self.params, grads, self.state, self.lr, self.betas, self.eps)
