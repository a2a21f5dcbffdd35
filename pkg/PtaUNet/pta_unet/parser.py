"""
Parser
======

Provides useful functions to parse and format text artefacts (timestamps,
checkpoint manifests, class colour maps).
"""

import datetime
from collections import OrderedDict

import pytz

from .errors import CheckpointError, DataError

# Timestamps ----

def utc_now():
	return datetime.datetime.now(pytz.utc)


def timestamp():
	""" Current UTC time in ISO-8601 form, as written into manifests and metrics records. """
	return utc_now().isoformat()


def parse_date(date_text):
	""" Parse an ISO-8601 timestamp into an aware UTC datetime (naive input is taken as UTC). """
	from dateutil.parser import parse as date_parse, ParserError

	try:
		parsed = date_parse(date_text)
	except (ParserError, OverflowError) as err:
		raise ValueError(f"invalid timestamp '{date_text}'") from err
	if parsed.tzinfo is None:
		return pytz.utc.localize(parsed)
	return parsed.astimezone(pytz.utc)

# Manifests ----

def parse_manifest(text, source='manifest'):
	"""
	Parse ``key = value`` lines into an ordered mapping.

	Blank lines and lines starting with ``#`` are skipped. Duplicate keys and
	lines without ``=`` raise :class:`CheckpointError` naming the line.
	"""
	entries = OrderedDict()
	for number, line in enumerate(text.splitlines(), start=1):
		line = line.strip()
		if not line or line.startswith('#'):
			continue
		key, sep, value = line.partition('=')
		key = key.strip()
		if not sep or not key:
			raise CheckpointError(f"{source}:{number}: expected 'key = value', got {line!r}")
		if key in entries:
			raise CheckpointError(f"{source}:{number}: duplicate key '{key}'")
		entries[key] = value.strip()
	return entries


def format_manifest(entries):
	return ''.join(f"{key} = {value}\n" for key, value in entries.items())


def parse_shape(text):
	""" ``"32x3x3x3"`` -> ``(32, 3, 3, 3)``; ``""`` is a scalar. """
	return tuple(int(dim) for dim in text.split('x')) if text else ()


def format_shape(shape):
	return 'x'.join(str(dim) for dim in shape)


def parse_int_tuple(text):
	""" ``"256,128,64"`` -> ``(256, 128, 64)``. """
	return tuple(int(item) for item in text.split(',')) if text else ()

# Class maps ----

def parse_class_map(text, source='class_map.txt'):
	"""
	Parse a class colour map: one ``name r g b`` line per class, in index order.

	Class names may contain spaces (``sign symbol 192 128 128``).

	Returns
	-------
	list of (str, (int, int, int))
	"""
	classes = []
	for number, line in enumerate(text.splitlines(), start=1):
		line = line.strip()
		if not line or line.startswith('#'):
			continue
		parts = line.split()
		try:
			rgb = tuple(int(v) for v in parts[-3:])
		except ValueError:
			rgb = ()
		if len(parts) < 4 or len(rgb) != 3 or not all(0 <= v <= 255 for v in rgb):
			raise DataError(f"{source}:{number}: expected 'name r g b', got {line!r}")
		classes.append((' '.join(parts[:-3]), rgb))
	if len(classes) < 2:
		raise DataError(f"{source}: a class map needs at least 2 classes, got {len(classes)}")
	if len({rgb for _, rgb in classes}) != len(classes):
		raise DataError(f"{source}: two classes share a colour")
	return classes


def format_class_map(classes):
	return ''.join(f"{name} {r} {g} {b}\n" for name, (r, g, b) in classes)
