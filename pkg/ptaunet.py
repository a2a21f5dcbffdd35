import logging
import os
import sys

# Single-thread deterministic mode unless PTA_UNET_THREADS is set; must precede the numpy import
_threads = os.environ.get("PTA_UNET_THREADS", "1")
for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "VECLIB_MAXIMUM_THREADS",
             "NUMEXPR_NUM_THREADS"):
    os.environ.setdefault(_var, _threads)

import typer

# Newer typer releases bundle their own click; older ones depend on the click package
try:
    from typer._click import exceptions as click_exceptions
except ImportError:
    from click import exceptions as click_exceptions

# Add the PtaUNet directory to the Python path
sys.path.append(os.path.join(os.path.dirname(__file__), "PtaUNet"))

from pta_unet.analysis import (benchmark_configs, classification_report, complexity_reports, count_mult_adds,
                               render_comparison, render_tables, render_training_summary, training_summary)
from pta_unet.constants import NO_PTA_LABEL, evaluation_configs, exit_codes
from pta_unet.data import load_camvid, make_synthetic, synthetic_class_map, write_dataset
from pta_unet.errors import ConfigError, DataError, NumericalError
from pta_unet.model import ModelConfig, build_model, load_checkpoint, read_manifest, save_checkpoint, strip_pta
from pta_unet.parser import parse_date
from pta_unet.pta import parse_config, parse_strategy
from pta_unet.training import TrainConfig, evaluate, evaluate_configs, read_metrics, train

logger = logging.getLogger("ptaunet")

# Initialize command-line app
app = typer.Typer(name="ptaunet", add_completion=False,
                  help="Train, evaluate and profile U-Net+PTA segmentation models.")


@app.callback()
def configure(verbose: bool = typer.Option(False, "--verbose", "-v", help="Log at DEBUG level.")):
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")


# Helpers ----

def _configs(text):
    """ ``all`` or one configuration string, as canonical strings. """
    if text.lower() == "all":
        return list(evaluation_configs)
    return [str(parse_config(text))]


def _dataset(data, synthetic, samples, val, test, size, classes, seed, resolution):
    if bool(data) == bool(synthetic):
        raise click_exceptions.UsageError("give exactly one of --data <root> or --synthetic")
    if synthetic:
        return make_synthetic(samples, size=size, n_classes=classes, seed=seed, n_val=val, n_test=test)
    return load_camvid(data, target=resolution)


def _model(ckpt, seed, toy, n_classes):
    if ckpt:
        return load_checkpoint(ckpt)
    config = ModelConfig.toy(n_classes) if toy else ModelConfig(n_classes=n_classes)
    return build_model(seed=seed, config=config).eval()


def _emit(text, jsonl, json_path):
    typer.echo(text)
    if json_path:
        with open(json_path, "w", encoding="utf-8") as f:
            f.write(jsonl)
        logger.info("wrote %s", json_path)


# Commands ----

@app.command(name="train", help="Train with PTA sampling and write a checkpoint plus a metrics log.")
def train_command(
        data: str = typer.Option(None, "--data", help="CamVid-layout dataset root."),
        synthetic: bool = typer.Option(False, "--synthetic", help="Use the synthetic shapes dataset."),
        epochs: int = typer.Option(600, "--epochs"),
        batch_size: int = typer.Option(8, "--batch-size"),
        lr: float = typer.Option(1e-3, "--lr"),
        seed: int = typer.Option(0, "--seed"),
        out: str = typer.Option("checkpoint", "--out", help="Checkpoint directory."),
        sampling: str = typer.Option("table1", "--sampling", help="table1 (alias default) or fixed:<CFG>."),
        metrics: str = typer.Option(None, "--metrics", help="Metrics log path (default <out>/metrics.jsonl)."),
        max_iterations: int = typer.Option(None, "--max-iterations"),
        augment: bool = typer.Option(True, "--augment/--no-augment"),
        dice_mode: str = typer.Option("micro", "--dice-mode", help="micro or macro."),
        toy: bool = typer.Option(False, "--toy", help="Narrow network for desk-scale runs."),
        resolution: int = typer.Option(256, "--resolution", help="Letterbox size for --data."),
        samples: int = typer.Option(500, "--synthetic-samples"),
        val: int = typer.Option(100, "--synthetic-val"),
        size: int = typer.Option(64, "--synthetic-size"),
        classes: int = typer.Option(4, "--synthetic-classes"),
        progress: bool = typer.Option(True, "--progress/--no-progress")):
    dataset = _dataset(data, synthetic, samples, val, 0, size, classes, seed, resolution)
    strategy = parse_strategy(sampling)
    cfg = TrainConfig(epochs=epochs, batch_size=batch_size, learning_rate=lr, seed=seed, augment=augment,
                      max_iterations=max_iterations, dice_mode=dice_mode)
    model = _model(None, seed, toy, dataset.n_classes)
    os.makedirs(out, exist_ok=True)
    metrics = metrics or os.path.join(out, "metrics.jsonl")
    result = train(model, dataset, cfg, strategy=strategy, metrics_path=metrics, progress=progress)
    save_checkpoint(model, out)
    summary = training_summary(result.records)
    typer.echo(render_training_summary(summary))
    if result.final_val_dice:
        text, _ = render_tables(dice=result.final_val_dice, title="Validation Dice")
        typer.echo(text)


@app.command(name="eval", help="Dice score per PTA configuration from one checkpoint.")
def eval_command(
        ckpt: str = typer.Option(..., "--ckpt"),
        data: str = typer.Option(None, "--data"),
        synthetic: bool = typer.Option(False, "--synthetic"),
        config: str = typer.Option("all", "--config", help="LLL ... BBB, or all."),
        split: str = typer.Option("val", "--split", help="val or test."),
        with_baseline: bool = typer.Option(False, "--with-baseline", help="Add the No-PTA clone row."),
        batch_size: int = typer.Option(8, "--batch-size"),
        dice_mode: str = typer.Option("micro", "--dice-mode"),
        seed: int = typer.Option(0, "--seed", help="Seed of the synthetic dataset."),
        resolution: int = typer.Option(256, "--resolution"),
        samples: int = typer.Option(500, "--synthetic-samples"),
        val: int = typer.Option(100, "--synthetic-val"),
        size: int = typer.Option(64, "--synthetic-size"),
        classes: int = typer.Option(4, "--synthetic-classes"),
        json_path: str = typer.Option(None, "--json", help="Write line-delimited JSON here.")):
    configs = _configs(config)
    model = load_checkpoint(ckpt)
    dataset = _dataset(data, synthetic, samples, val, val, size, classes, seed, resolution)
    if split not in ("val", "test"):
        raise click_exceptions.UsageError(f"--split must be val or test, got '{split}'")
    split_samples = dataset[split]
    if not split_samples:
        raise DataError(f"split '{split}' is empty")
    scores = {}
    if with_baseline:
        scores[NO_PTA_LABEL] = evaluate(strip_pta(model), split_samples, None, batch_size, mode=dice_mode)
    scores.update(evaluate_configs(model, split_samples, configs, batch_size, mode=dice_mode))
    text, jsonl = render_tables(dice=scores, title=f"Dice score ({split}, {dice_mode})")
    _emit(text, jsonl, json_path)


@app.command(name="complexity", help="Parameters and Multiply-Adds per PTA configuration.")
def complexity_command(
        ckpt: str = typer.Option(None, "--ckpt", help="Checkpoint; a fresh model is built without it."),
        config: str = typer.Option("all", "--config"),
        resolution: int = typer.Option(128, "--resolution", help="Square input side used for counting."),
        seed: int = typer.Option(0, "--seed"),
        toy: bool = typer.Option(False, "--toy"),
        classes: int = typer.Option(12, "--classes"),
        classifier: bool = typer.Option(False, "--classifier",
                                        help="Also compare against the encoder used as a 2-class classifier."),
        json_path: str = typer.Option(None, "--json")):
    model = _model(ckpt, seed, toy, classes)
    configs = _configs(config)
    baseline = strip_pta(model) if config.lower() == "all" else None
    reports = complexity_reports(model, configs, resolution, baseline=baseline)
    text, jsonl = render_tables(complexity=reports, title=f"Complexity at {resolution}x{resolution}")
    _emit(text, jsonl, json_path)
    if classifier:
        full = count_mult_adds(strip_pta(model), None, resolution)
        full.label = "U-Net (No PTA)"
        typer.echo(render_comparison([classification_report(model, 2, resolution, config="HHH"), full],
                                     title="Classification vs segmentation"))


@app.command(name="benchmark", help="Inference latency per PTA configuration with 95% confidence intervals.")
def benchmark_command(
        ckpt: str = typer.Option(None, "--ckpt"),
        config: str = typer.Option("all", "--config"),
        batches: int = typer.Option(1000, "--batches"),
        batch_size: int = typer.Option(8, "--batch-size"),
        resolution: int = typer.Option(256, "--resolution"),
        warmup: int = typer.Option(10, "--warmup"),
        baseline: str = typer.Option("HHH", "--baseline", help="Row used as the 100% reference."),
        seed: int = typer.Option(0, "--seed"),
        toy: bool = typer.Option(False, "--toy"),
        classes: int = typer.Option(12, "--classes"),
        json_path: str = typer.Option(None, "--json")):
    if batches < 2:
        raise ConfigError(f"--batches must be at least 2 for a confidence interval, got {batches}")
    model = _model(ckpt, seed, toy, classes)
    configs = _configs(config)
    baseline = baseline if baseline == NO_PTA_LABEL else str(parse_config(baseline))
    if baseline != NO_PTA_LABEL and baseline not in configs:
        configs.insert(0, baseline)
    clone = strip_pta(model) if config.lower() == "all" or baseline == NO_PTA_LABEL else None
    reports = benchmark_configs(model, configs, baseline_model=clone, baseline=baseline,
                                batch_shape=(batch_size, 3, resolution, resolution), n_batches=batches,
                                warmup=warmup, seed=seed)
    text, jsonl = render_tables(timing=reports, title=f"Inference time, batch {batch_size}x{resolution}x{resolution}")
    _emit(text, jsonl, json_path)


@app.command(name="synth-data", help="Write the synthetic shapes dataset in CamVid layout.")
def synth_data_command(
        out: str = typer.Option(..., "--out"),
        samples: int = typer.Option(500, "--samples"),
        val: int = typer.Option(100, "--val"),
        test: int = typer.Option(0, "--test"),
        size: int = typer.Option(64, "--size"),
        classes: int = typer.Option(4, "--classes"),
        seed: int = typer.Option(0, "--seed")):
    dataset = make_synthetic(samples, size=size, n_classes=classes, seed=seed, n_val=val, n_test=test)
    write_dataset(dataset, out, synthetic_class_map(classes))
    typer.echo(f"wrote {dataset.sizes} to {out}")


@app.command(name="inspect", help="Summarise a checkpoint manifest and/or a metrics log.")
def inspect_command(
        ckpt: str = typer.Option(None, "--ckpt"),
        metrics: str = typer.Option(None, "--metrics")):
    if not ckpt and not metrics:
        raise click_exceptions.UsageError("give --ckpt and/or --metrics")
    if ckpt:
        entries = read_manifest(ckpt)
        model = load_checkpoint(ckpt)
        created = parse_date(entries["created"]).strftime("%Y-%m-%d %H:%M:%S %Z") if "created" in entries else "?"
        typer.echo(f"checkpoint: {ckpt}")
        typer.echo(f"created:    {created}")
        typer.echo(f"classes:    {entries['model.n_classes']}  width: {entries['model.width_mult']}")
        typer.echo(f"decoder:    {entries['model.decoder_channels']}")
        typer.echo(f"PTA sites:  {entries.get('pta.sites') or '-'}  active: {entries.get('pta.active') or '-'}")
        typer.echo(f"tensors:    {entries['tensor.count']}  payload: {entries['payload.bytes']} bytes")
        typer.echo(f"parameters: {model.num_parameters()}  checksum: {model.checksum()[:16]}")
    if metrics:
        typer.echo(render_training_summary(training_summary(read_metrics(metrics))))


def main(argv=None):
    """
    Run the command line and map failures to exit codes: 1 usage or
    configuration, 2 data or checkpoint, 3 numerical.
    """
    try:
        result = app(args=argv, prog_name="ptaunet", standalone_mode=False)
    except click_exceptions.Exit as err:
        return err.exit_code
    except (click_exceptions.ClickException, click_exceptions.Abort) as err:
        message = err.format_message() if isinstance(err, click_exceptions.ClickException) else 'aborted'
        typer.echo(f"error: {message}", err=True)
        return exit_codes["usage"]
    except NumericalError as err:
        typer.echo(f"numerical error: {err}", err=True)
        return exit_codes["numerical"]
    except DataError as err:
        typer.echo(f"data error: {err}", err=True)
        return exit_codes["data"]
    except (ConfigError, ValueError) as err:
        typer.echo(f"error: {err}", err=True)
        return exit_codes["usage"]
    return result if isinstance(result, int) else exit_codes["ok"]


if __name__ == "__main__":
    # Run the command line
    sys.exit(main())
