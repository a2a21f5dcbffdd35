"""
Checkpoint
==========

Directory checkpoint: a ``key = value`` text manifest and one raw payload of
little-endian float32 tensors in manifest order.

Manifest keys
-------------
``schema_version``, ``created`` (UTC ISO-8601), ``model.*`` (the
:class:`ModelConfig`), ``pta.sites`` (site names shallow to deep), ``pta.active``
(configuration at save time), ``payload.file``, ``payload.bytes``,
``payload.sha256``, ``tensor.count`` and one ``tensor.<i> = name|kind|shape|offset``
line per tensor (``kind`` is ``param`` or ``buffer``).
"""

import hashlib
import logging
import os

import numpy as np

from ..errors import CheckpointError
from ..pta import apply_config
from ..parser import (format_manifest, format_shape, parse_date, parse_int_tuple, parse_manifest, parse_shape,
					  timestamp)
from .model import ModelConfig, SegModel

logger = logging.getLogger(__name__)

SCHEMA_VERSION = '1'
MANIFEST_FILE = 'manifest.txt'
PAYLOAD_FILE = 'tensors.bin'
PAYLOAD_DTYPE = np.dtype('<f4')


def _config_entries(config):
	stage_table = ';'.join(','.join(str(v) for v in row) for row in config.stage_table)
	return {'model.n_classes': str(config.n_classes),
			'model.width_mult': repr(float(config.width_mult)),
			'model.decoder_channels': ','.join(str(c) for c in config.decoder_channels),
			'model.last_channels': str(config.last_channels),
			'model.stage_table': stage_table,
			'model.pta_stages': ','.join(str(i) for i in config.pta_stages)}


def _config_from_entries(entries):
	try:
		return ModelConfig(n_classes=int(entries['model.n_classes']),
						   width_mult=float(entries['model.width_mult']),
						   decoder_channels=parse_int_tuple(entries['model.decoder_channels']),
						   last_channels=int(entries['model.last_channels']),
						   stage_table=tuple(parse_int_tuple(row) for row in entries['model.stage_table'].split(';')),
						   pta_stages=parse_int_tuple(entries['model.pta_stages']))
	except KeyError as err:
		raise CheckpointError(f"manifest is missing key {err.args[0]!r}") from None
	except ValueError as err:
		raise CheckpointError(f"manifest model section is invalid: {err}") from None


def save_checkpoint(model, path):
	"""
	Write ``model`` to the directory ``path`` (created if needed).

	Returns
	-------
	str
		Path of the manifest file.
	"""
	os.makedirs(path, exist_ok=True)
	params = {id(p) for p in model.parameters()}
	entries = {'schema_version': SCHEMA_VERSION, 'created': timestamp()}
	entries.update(_config_entries(model.config))
	entries['pta.enabled'] = str(model.has_pta).lower()
	entries['pta.sites'] = ','.join(model.site_names)
	entries['pta.active'] = str(model.active_config) if model.has_pta else ''

	chunks = []
	offset = 0
	lines = {}
	index = 0
	for module_name, module in model.named_modules():
		for name, tensor in list(module._parameters.items()) + list(module._buffers.items()):
			kind = 'param' if id(tensor) in params else 'buffer'
			data = np.ascontiguousarray(tensor.data, dtype=PAYLOAD_DTYPE)
			key = f"{module_name}.{name}" if module_name else name
			lines[f"tensor.{index}"] = f"{key}|{kind}|{format_shape(data.shape)}|{offset}"
			chunks.append(data.tobytes())
			offset += data.nbytes
			index += 1
	payload = b''.join(chunks)

	entries['payload.file'] = PAYLOAD_FILE
	entries['payload.bytes'] = str(len(payload))
	entries['payload.sha256'] = hashlib.sha256(payload).hexdigest()
	entries['tensor.count'] = str(index)
	entries.update(lines)

	with open(os.path.join(path, PAYLOAD_FILE), 'wb') as f:
		f.write(payload)
	manifest = os.path.join(path, MANIFEST_FILE)
	with open(manifest, 'w', encoding='utf-8') as f:
		f.write(format_manifest(entries))
	logger.info("saved checkpoint %s (%d tensors, %d bytes)", path, index, len(payload))
	return manifest


def read_manifest(path):
	""" Parsed manifest of the checkpoint directory ``path``. """
	manifest = os.path.join(path, MANIFEST_FILE)
	if not os.path.isfile(manifest):
		raise CheckpointError(f"no checkpoint manifest at {manifest}")
	with open(manifest, encoding='utf-8') as f:
		entries = parse_manifest(f.read(), source=manifest)
	version = entries.get('schema_version')
	if version != SCHEMA_VERSION:
		raise CheckpointError(f"{manifest}: unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
	if 'created' in entries:
		try:
			parse_date(entries['created'])
		except ValueError as err:
			raise CheckpointError(f"{manifest}: {err}") from None
	return entries


def _tensor_table(entries, manifest):
	try:
		count = int(entries['tensor.count'])
	except (KeyError, ValueError):
		raise CheckpointError(f"{manifest}: missing or invalid tensor.count") from None
	table = []
	for index in range(count):
		line = entries.get(f"tensor.{index}")
		fields = line.split('|') if line else []
		if len(fields) != 4:
			raise CheckpointError(f"{manifest}: malformed or missing entry tensor.{index}")
		name, kind, shape, offset = fields
		try:
			table.append((name, kind, parse_shape(shape), int(offset)))
		except ValueError:
			raise CheckpointError(f"{manifest}: malformed shape or offset in tensor.{index}") from None
	return table


def load_checkpoint(path):
	"""
	Rebuild the model stored in ``path``.

	The payload size and sha256 are checked before any tensor is read; the
	tensor table must match the rebuilt model's names and shapes exactly.

	Returns
	-------
	SegModel
		In eval mode, with the saved PTA configuration applied.

	Raises
	------
	CheckpointError
	"""
	entries = read_manifest(path)
	manifest = os.path.join(path, MANIFEST_FILE)
	config = _config_from_entries(entries)
	table = _tensor_table(entries, manifest)

	payload_path = os.path.join(path, entries.get('payload.file', PAYLOAD_FILE))
	if not os.path.isfile(payload_path):
		raise CheckpointError(f"{manifest}: payload file {payload_path} is missing")
	with open(payload_path, 'rb') as f:
		payload = f.read()
	if str(len(payload)) != entries.get('payload.bytes'):
		raise CheckpointError(f"{manifest}: payload has {len(payload)} bytes, manifest says {entries.get('payload.bytes')}")
	if hashlib.sha256(payload).hexdigest() != entries.get('payload.sha256'):
		raise CheckpointError(f"{manifest}: payload sha256 does not match the manifest")

	pta = entries.get('pta.enabled', 'true') == 'true'
	model = SegModel(config, np.random.default_rng(0), pta=pta)
	state = {}
	for name, kind, shape, offset in table:
		count = int(np.prod(shape, dtype=np.int64))
		end = offset + count * PAYLOAD_DTYPE.itemsize
		if offset < 0 or end > len(payload):
			raise CheckpointError(f"{manifest}: tensor '{name}' lies outside the payload")
		state[name] = np.frombuffer(payload, dtype=PAYLOAD_DTYPE, count=count, offset=offset).reshape(shape)
	model.load_state_dict(state, strict=True)
	model.eval()
	if pta and entries.get('pta.active'):
		apply_config(model, entries['pta.active'])
	logger.info("loaded checkpoint %s (%d tensors)", path, len(table))
	return model
