"""
Tables
======

Plain-text and line-delimited JSON renderings of complexity, timing and Dice
results, one row per configuration.
"""

import io

import numpy as np
import pandas as pd

from ..reports import dumps

TABLE_COLUMNS = ('config', 'params', 'mult_adds', 'elementwise', 'resolution', 'mean_ms', 'ci95_ms',
				 'relative_percent', 'dice')


def results_frame(complexity=(), timing=(), dice=None):
	"""
	Merge reports into one frame keyed by configuration label.

	Parameters
	----------
	complexity : iterable of ComplexityReport
	timing : iterable of TimingReport
	dice : Mapping[str, float], optional

	Returns
	-------
	pd.DataFrame
		Rows in first-seen label order; columns with no value in any row are dropped.
	"""
	rows = {}

	def row(label):
		return rows.setdefault(label, {'config': label})

	for report in complexity:
		entry = row(report.label)
		entry.update(params=report.params, mult_adds=report.mult_adds if report.resolution else None,
					 elementwise=report.elementwise if report.resolution else None, resolution=report.resolution)
	for report in timing:
		row(report.label).update(mean_ms=report.mean_ms, ci95_ms=report.ci95_half_width_ms,
								 relative_percent=report.relative_percent)
	for label, score in (dice or {}).items():
		row(label)['dice'] = score
	frame = pd.DataFrame(list(rows.values()), columns=list(TABLE_COLUMNS))
	return frame.dropna(axis=1, how='all')


def _format(frame):
	text = pd.DataFrame({'Config': frame['config']})
	if 'params' in frame:
		text['#Params (M)'] = frame['params'].map(lambda v: f"{v / 1e6:.2f}" if pd.notna(v) else '')
	if 'mult_adds' in frame:
		text['Multiply-Adds (M)'] = frame['mult_adds'].map(lambda v: f"{v / 1e6:.2f}" if pd.notna(v) else '')
	if 'mean_ms' in frame:
		text['Inference Time (ms)'] = [f"{m:.2f} ± {c:.2f}" if pd.notna(m) else ''
									   for m, c in zip(frame['mean_ms'], frame['ci95_ms'])]
	if 'relative_percent' in frame:
		text['Relative (%)'] = frame['relative_percent'].map(lambda v: f"{v:.2f}" if pd.notna(v) else '')
	if 'dice' in frame:
		text['Dice'] = frame['dice'].map(lambda v: f"{v:.4f}" if pd.notna(v) else '')
	return text


def render_text(frame, title=None):
	""" Aligned plain-text table. """
	body = _format(frame).to_string(index=False)
	return f"{title}\n{body}" if title else body


def to_jsonl(frame):
	""" One JSON object per row; missing cells are omitted. """
	lines = []
	for record in frame.to_dict(orient='records'):
		lines.append(dumps({k: v for k, v in record.items() if not (v is None or (isinstance(v, float) and np.isnan(v)))}))
	return '\n'.join(lines) + '\n' if lines else ''


def parse_jsonl(text):
	""" Inverse of :func:`to_jsonl`. """
	if not text.strip():
		return pd.DataFrame()
	return pd.read_json(io.StringIO(text), lines=True, precise_float=True, dtype=False)


def render_tables(complexity=(), timing=(), dice=None, title=None):
	"""
	Render results both ways.

	Returns
	-------
	(str, str)
		Plain-text table and line-delimited JSON.
	"""
	frame = results_frame(complexity, timing, dice)
	return render_text(frame, title), to_jsonl(frame)


def comparison_table(reports):
	"""
	Model-level comparison (for instance an encoder-only classifier against
	the full segmentation network).

	Returns
	-------
	pd.DataFrame
		Columns ``model``, ``params``, ``mult_adds``, ``resolution``.
	"""
	return pd.DataFrame([{'model': r.label, 'params': r.params, 'mult_adds': r.mult_adds,
						  'resolution': r.resolution} for r in reports])


def render_comparison(reports, title=None):
	frame = comparison_table(reports)
	text = pd.DataFrame({'Model': frame['model'],
						 '#Params (M)': frame['params'].map(lambda v: f"{v / 1e6:.2f}"),
						 'Multiply-Adds (M)': frame['mult_adds'].map(lambda v: f"{v / 1e6:.2f}")})
	body = text.to_string(index=False)
	return f"{title}\n{body}" if title else body


def training_summary(records):
	"""
	Reduce a metrics log to training time and best validation Dice.

	Parameters
	----------
	records : list of dict or pd.DataFrame
		Metrics records (see :mod:`pta_unet.training.metrics`).

	Returns
	-------
	dict
		``minutes`` (total training wall time), ``iterations``, ``epochs``,
		``best_dice`` (best epoch score per configuration) and ``best`` (the
		highest of those).
	"""
	frame = records if isinstance(records, pd.DataFrame) else pd.DataFrame(list(records))
	if frame.empty or 'event' not in frame:
		return {'minutes': 0.0, 'iterations': 0, 'epochs': 0, 'best_dice': {}, 'best': None}
	epochs = frame[frame['event'] == 'epoch']
	end = frame[frame['event'] == 'end']
	if len(end):
		seconds = float(end['wall_time_s'].iloc[-1])
	elif len(epochs):
		seconds = float(epochs['wall_time_s'].iloc[-1])
	else:
		seconds = 0.0
	best = {}
	for scores in epochs.get('val_dice', pd.Series(dtype=object)):
		if not isinstance(scores, dict):
			continue
		for config, score in scores.items():
			if score is not None and np.isfinite(score):
				best[config] = max(best.get(config, -np.inf), float(score))
	iterations = int(epochs['iterations'].iloc[-1]) if len(epochs) else 0
	return {'minutes': seconds / 60.0, 'iterations': iterations, 'epochs': len(epochs),
			'best_dice': best, 'best': max(best.values()) if best else None}


def render_training_summary(summary, label='U-Net+PTA'):
	frame = pd.DataFrame([{'Model': label, 'Training time (min)': f"{summary['minutes']:.2f}",
						   'Iterations': summary['iterations'],
						   'Best Dice': f"{summary['best']:.4f}" if summary['best'] is not None else ''}])
	return frame.to_string(index=False)
