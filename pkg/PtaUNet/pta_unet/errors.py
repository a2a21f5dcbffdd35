"""
Errors
======

Exception hierarchy shared by every sub-package.

The command-line entry point maps these classes to exit codes, so each failure
raised inside the library is one of them (or a plain ``ValueError`` that the
CLI treats as a usage error).
"""


class PtaError(Exception):
	""" Base class for all errors raised by pta_unet. """


class ShapeError(PtaError, ValueError):
	""" Tensor shapes are incompatible with the requested operation. """


class ConfigError(PtaError, ValueError):
	""" Invalid configuration string, sampling strategy or hyper-parameter. """


class DataError(PtaError):
	""" Dataset files are missing, unpaired or carry unmapped labels. """


class CheckpointError(DataError):
	""" Checkpoint manifest or payload is corrupt or does not match the model. """


class NumericalError(PtaError, ArithmeticError):
	""" NaN or Inf produced by an operator or a loss. """


class AutodiffError(PtaError, RuntimeError):
	""" Gradient tape misuse (non-scalar loss, tape already consumed). """


def shape_mismatch(op, a, b):
	""" Build a ShapeError naming both shapes. """
	return ShapeError(f"{op}: incompatible shapes {tuple(a)} and {tuple(b)}")
