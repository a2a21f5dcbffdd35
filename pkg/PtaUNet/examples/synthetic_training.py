#!/usr/bin/env python3
"""
Example script training a narrow U-Net+PTA on synthetic shapes and scoring
every configuration afterwards
"""

import sys
import os

# Add the parent directory to the Python path to import the package
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
from pta_unet import build_model, make_synthetic, train, evaluate_configs, ModelConfig, TrainConfig, DEFAULT_STRATEGY


def train_and_score(epochs=5, debug=False):
    """Train with PTA sampling, then report Dice per configuration"""
    dataset = make_synthetic(64, size=64, n_classes=4, seed=0, n_val=16)
    model = build_model(seed=0, config=ModelConfig.toy(dataset.n_classes))
    cfg = TrainConfig(epochs=epochs, batch_size=8, eval_configs=('HHH', 'LLL'))

    result = train(model, dataset, cfg, strategy=DEFAULT_STRATEGY)
    print(f"Trained {result.iterations} iterations in {result.wall_time:.1f}s")
    print(f"Final loss: {result.losses[-1]:.4f}")

    if debug:
        # Show how often each configuration was drawn
        counts = {}
        for config in result.configs:
            counts[config] = counts.get(config, 0) + 1
        print("\nSampled configurations:")
        for config, count in sorted(counts.items(), key=lambda item: -item[1]):
            print(f"{config}: {count}")

    scores = evaluate_configs(model, dataset.val)
    print("\nValidation Dice:")
    for config, score in scores.items():
        print(f"{config}: {score:.4f}")


if __name__ == "__main__":
    epochs = 5
    debug_mode = False

    # Parse command-line arguments
    for i, arg in enumerate(sys.argv[1:]):
        if arg == "--debug":
            debug_mode = True
        elif i == 0:
            try:
                epochs = int(arg)
            except ValueError:
                print(f"Invalid epoch count: {arg}")
                sys.exit(1)

    train_and_score(epochs, debug=debug_mode)
