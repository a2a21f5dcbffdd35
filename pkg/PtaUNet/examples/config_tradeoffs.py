#!/usr/bin/env python3
"""
Example script comparing the cost of every PTA configuration of one network
"""

import sys
import os

# Add the parent directory to the Python path to import the package
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
from pta_unet import build_model, strip_pta, ModelConfig, EVAL_CONFIGS
from pta_unet.analysis import benchmark_configs, complexity_reports, render_tables


def compare_configs(toy=True, resolution=64, batches=20):
    """Print parameters, Mult-Adds and latency for each configuration"""
    config = ModelConfig.toy(4) if toy else ModelConfig()
    model = build_model(seed=0, config=config).eval()
    baseline = strip_pta(model)
    configs = [str(c) for c in EVAL_CONFIGS]

    complexity = complexity_reports(model, configs, resolution, baseline=baseline)
    timing = benchmark_configs(model, configs, baseline_model=baseline, baseline='HHH',
                               batch_shape=(1, 3, resolution, resolution), n_batches=batches, warmup=2)

    text, _ = render_tables(complexity, timing, title=f"{'Toy' if toy else 'Full'} network at {resolution}x{resolution}")
    print(text)

    # Savings of the light branches against the heavy default
    heavy = next(r for r in complexity if r.label == 'HHH')
    print("\nParameters saved against HHH:")
    for report in complexity:
        if report.label in ('No PTA', 'HHH'):
            continue
        print(f"{report.label}: {heavy.params - report.params:+,d}")


if __name__ == "__main__":
    toy = True
    resolution = 64

    # Parse command-line arguments
    for arg in sys.argv[1:]:
        if arg == "--full":
            toy = False
        else:
            try:
                resolution = int(arg)
            except ValueError:
                print(f"Invalid resolution: {arg}")
                sys.exit(1)

    compare_configs(toy=toy, resolution=resolution)
