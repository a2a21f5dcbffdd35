"""
Reports
=======

Provides the base class for JSON-serialisable results (metrics records,
complexity and timing reports) and the JSON handler they share.
"""

import datetime
import enum
import json

import numpy as np
import pandas as pd


class Report:
	"""
	Generalised class to store a result that can be rendered and serialised.

	Subclasses list their fields; :meth:`get_json` serialises them, recursing
	into nested reports through :func:`ComplexHandler`.
	"""

	def _to_json(self):
		return {key: value for key, value in vars(self).items() if not key.startswith('_')}

	def get_json(self):
		""" Get JSON representation of the report. """
		return dumps(self)


def ComplexHandler(obj):
	"""
	Customized handler to convert objects to JSON by recursively calling their
	``_to_json()`` method, with fallbacks for numpy, pandas, dates and enums.
	"""
	if hasattr(obj, '_to_json'):
		return _finite(obj._to_json())
	elif isinstance(obj, (datetime.datetime, datetime.date)):
		return obj.isoformat()
	elif isinstance(obj, enum.Enum):
		return obj.value
	elif isinstance(obj, np.generic):
		return _finite(obj.item())
	elif isinstance(obj, np.ndarray):
		return _finite(obj.tolist())
	elif isinstance(obj, pd.DataFrame):
		return obj.to_dict(orient='records')
	elif isinstance(obj, bytes):
		return obj.decode("utf-8")
	else:
		raise TypeError('Object of type %s with value of %s is not JSON serializable' % (type(obj), repr(obj)))


def dumps(obj):
	""" One-line JSON text (no NaN literals: non-finite floats become ``null``). """
	return json.dumps(_finite(obj), default=ComplexHandler, allow_nan=False)


def _finite(obj):
	if isinstance(obj, float) and not np.isfinite(obj):
		return None
	if isinstance(obj, dict):
		return {key: _finite(value) for key, value in obj.items()}
	if isinstance(obj, (list, tuple)):
		return [_finite(value) for value in obj]
	return obj
