"""
Metrics
=======

Line-delimited JSON training log.

Record kinds (``event`` field): ``start`` (generator, seed, configuration),
``epoch`` (epoch, iterations, wall time, train loss, validation Dice per
PTA configuration) and ``end`` (total wall time).
"""

import io
import logging

import pandas as pd

from ..parser import timestamp
from ..reports import Report, dumps

logger = logging.getLogger(__name__)


class MetricsRecord(Report):
	""" One metrics line; every record carries a UTC ``timestamp``. """

	def __init__(self, event, **fields):
		self.event = event
		self.timestamp = timestamp()
		for key, value in fields.items():
			setattr(self, key, value)


class MetricsLog:
	"""
	Collects records in memory and, with a ``path``, appends them to a file.

	Examples
	--------
	>>> with MetricsLog("metrics.jsonl") as log:
	...     log.write("start", seed=0)
	"""

	def __init__(self, path=None):
		self.path = path
		self.records = []
		self._file = None

	def __enter__(self):
		if self.path:
			self._file = open(self.path, 'w', encoding='utf-8')
		return self

	def __exit__(self, *exc_info):
		if self._file is not None:
			self._file.close()
			self._file = None

	def write(self, event, **fields):
		record = MetricsRecord(event, **fields)
		line = record.get_json()
		self.records.append(record._to_json())
		if self._file is not None:
			self._file.write(line + '\n')
			self._file.flush()
		logger.debug("metrics %s", line)
		return record


def read_metrics(path):
	"""
	Load a metrics log.

	Returns
	-------
	pd.DataFrame
		One row per record; nested ``val_dice`` mappings stay as dict cells.
	"""
	with open(path, encoding='utf-8') as f:
		text = f.read()
	if not text.strip():
		return pd.DataFrame()
	return pd.read_json(io.StringIO(text), lines=True, precise_float=True, convert_dates=False)
