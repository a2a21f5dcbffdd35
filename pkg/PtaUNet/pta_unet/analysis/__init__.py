"""
Analysis
========

Parameter and Mult-Add accounting, latency benchmarks and result tables.

Examples
--------
>>> model = build_model(seed=0)
>>> reports = complexity_reports(model, EVAL_CONFIGS, resolution=128, baseline=strip_pta(model))
>>> text, jsonl = render_tables(reports)
>>> print(text)  # doctest: +SKIP
 Config #Params (M) Multiply-Adds (M)
 No PTA        6.63 ...
"""

from .complexity import (ComplexityReport, count_params, count_mult_adds, complexity_reports,
						 classification_report, conv_mult_adds, op_cost, CONVENTION)
from .timing import TimingReport, benchmark, benchmark_configs, relative_to, mean_ci95
from .tables import (results_frame, render_text, render_tables, to_jsonl, parse_jsonl, comparison_table,
					 render_comparison, training_summary, render_training_summary)
