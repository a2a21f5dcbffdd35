"""
Tensor
======

Dense NCHW tensors with reverse-mode automatic differentiation.

Examples
--------
>>> x = Parameter(np.ones((1, 1, 3, 3)))
>>> w = Parameter(np.ones((1, 1, 3, 3)))
>>> with GradTape() as tape:
...     loss = conv2d(x, w, padding=1).sum()
>>> tape.backward(loss)[w].shape
(1, 1, 3, 3)
"""

from .tensor import (Tensor, Parameter, Function, GradTape, Profiler, backward, precision,
					 check_finite, default_dtype, scope, profiling)
from .functional import (conv2d, batchnorm2d, relu6, upsample_bilinear2x, concat_channels, add, mean2,
						 bias_add, softmax_channels, tensor_sum, conv_output_size)
