"""
Command-line entry point
decompose, train, compare, bench, gradcheck and export as reproducible commands
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from cli.io import (read_json, read_signal_csv, write_dataset_csv, write_json, write_signal_csv,
                    write_table_csv)
from harness.benchmark import run_benchmark
from harness.datasets import gen_dataset, spike_signal
from harness.gradcheck_suite import run_gradcheck_suite
from harness.metrics import band_energy, band_fraction, spike_energy_fraction
from harness.model import build_model
from harness.runner import make_splits, rank_results, run_comparison
from harness.training import evaluate, train
from pooling.methods import parse_pool_spec
from tlp.checkpoint import (build_checkpoint, load_checkpoint, load_tlp_params, save_checkpoint,
                             tlp_prefixes)
from tlp.lifting import haar_predict, haar_update, inverse_lift, lift
from utils.config import AppConfig, load_config, setup_logging
from utils.error_handler import (EXIT_NUMERICAL, EXIT_OK, ConfigurationError, ErrorHandler, LiftPoolError,
                                 UsageError)

logger = logging.getLogger(__name__)

COMMANDS = ("decompose", "train", "compare", "bench", "gradcheck", "export")


class CommandConfig(BaseModel):
    """Fully resolved settings of one CLI run"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    command: Literal["decompose", "train", "compare", "bench", "gradcheck", "export"]
    out: str = "out"
    seed: int = 0
    pool: str = "tlp"
    input: Optional[str] = None
    checkpoint: Optional[str] = None
    layer: Optional[Literal["pool1", "pool2"]] = None
    inverse: bool = False
    levels: int = Field(1, ge=1)
    spikes: bool = False
    length: int = Field(128, ge=2)
    split: Literal["train", "dev", "test"] = "train"
    size: Optional[int] = Field(None, ge=4)
    count: int = Field(20, ge=1)
    eps: float = Field(1e-6, gt=0.0)
    accuracy_from: Optional[str] = None
    log_level: Optional[str] = None
    app: AppConfig = Field(default_factory=AppConfig)


class LiftPoolArgumentParser(argparse.ArgumentParser):
    """argparse that raises UsageError instead of exiting"""

    def error(self, message):
        raise UsageError(message)


def _csv_list(cast):
    def parse(text: str):
        try:
            return [cast(item.strip()) for item in text.split(",") if item.strip()]
        except ValueError as e:
            raise argparse.ArgumentTypeError(f"invalid list {text!r}: {e}")
    return parse


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="YAML config (default: config/config.yaml or $LIFTPOOL_CONFIG)")
    parser.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"])
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="out", help="output directory")


def _add_training(parser: argparse.ArgumentParser):
    parser.add_argument("--kernel-size", type=int, help="predictor/updater kernel width K")
    parser.add_argument("--fusion", choices=["sum", "concat", "bottleneck", "only_s"])
    parser.add_argument("--predictor-arch", choices=["depthwise", "plain"])
    parser.add_argument("--weighting-mode", choices=["independent", "shared", "none"])
    parser.add_argument("--locations", choices=["both", "first", "second", "none"])
    parser.add_argument("--alpha-u", type=float)
    parser.add_argument("--alpha-p", type=float)
    parser.add_argument("--lr", type=float)
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--batch-size", type=int)
    parser.add_argument("--task", choices=["band-mix", "spike-pattern"])
    parser.add_argument("--noise", type=float)


def build_parser() -> LiftPoolArgumentParser:
    parser = LiftPoolArgumentParser(prog="liftpool", description="Temporal Lift Pooling toolkit")
    commands = parser.add_subparsers(dest="command", parser_class=LiftPoolArgumentParser)

    p = commands.add_parser("decompose", help="split a signal into s/d sub-bands")
    _add_common(p)
    p.add_argument("--input", help="signal CSV (header channel,t0,t1,...)")
    p.add_argument("--checkpoint", help="use the learned predictor/updater of a checkpoint instead of Haar; "
                   "the input needs as many channels as the layer was trained on (model.hidden_channels)")
    p.add_argument("--layer", choices=["pool1", "pool2"],
                   help="TLP layer of the checkpoint to use (default: the first one stored)")
    p.add_argument("--inverse", action="store_true", help="also write reconstructed.csv")
    p.add_argument("--levels", type=int, default=1, help="repeat the lift on s")
    p.add_argument("--spikes", action="store_true", help="decompose a generated sinusoid-plus-spikes signal")
    p.add_argument("--length", type=int, default=128, help="length of the generated --spikes signal")

    p = commands.add_parser("train", help="train one model")
    _add_common(p)
    _add_training(p)
    p.add_argument("--pool", default="tlp", help="max, avg, lp:<p>, mixed, stochastic, soft or tlp")
    p.add_argument("--checkpoint", help="checkpoint path (default: <out>/checkpoint.json)")

    p = commands.add_parser("compare", help="train every pool spec on every seed and rank them")
    _add_common(p)
    _add_training(p)
    p.add_argument("--pools", type=_csv_list(str))
    p.add_argument("--seeds", type=_csv_list(int))
    p.add_argument("--threads", type=int)

    p = commands.add_parser("bench", help="FLOPs, memory and throughput per pool spec")
    _add_common(p)
    p.add_argument("--pools", type=_csv_list(str))
    p.add_argument("--sizes", type=_csv_list(int))
    p.add_argument("--repetitions", type=int)
    p.add_argument("--warmup", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--accuracy-from", help="results.json of a compare run")

    p = commands.add_parser("gradcheck", help="finite-difference gradient suite")
    _add_common(p)
    p.add_argument("--count", type=int, default=20, help="number of seeds, starting at --seed")
    p.add_argument("--eps", type=float, default=1e-6)

    p = commands.add_parser("export", help="write a synthetic dataset split as CSV")
    _add_common(p)
    p.add_argument("--task", choices=["band-mix", "spike-pattern"])
    p.add_argument("--split", choices=["train", "dev", "test"], default="train")
    p.add_argument("--size", type=int, help="number of samples (default: the split size in config)")
    p.add_argument("--noise", type=float)
    return parser


def _resolve_app(args: argparse.Namespace, base: AppConfig) -> AppConfig:
    get = lambda name: getattr(args, name, None)
    return base.with_overrides(
        tlp={"kernel_size": get("kernel_size"), "fusion": get("fusion"),
             "predictor_arch": get("predictor_arch"), "weighting_mode": get("weighting_mode")},
        model={"locations": get("locations")},
        training={"alpha_u": get("alpha_u"), "alpha_p": get("alpha_p"), "lr": get("lr"),
                  "epochs": get("epochs"),
                  "batch_size": get("batch_size") if args.command != "bench" else None},
        dataset={"task": get("task"), "noise": get("noise")},
        compare={"pools": get("pools") if args.command == "compare" else None,
                 "seeds": get("seeds"), "threads": get("threads")},
        benchmark={"pools": get("pools") if args.command == "bench" else None, "sizes": get("sizes"),
                   "repetitions": get("repetitions"), "warmup": get("warmup"),
                   "batch_size": get("batch_size") if args.command == "bench" else None},
    )


def parse_args(argv: Optional[List[str]]) -> CommandConfig:
    """Parse argv into a resolved CommandConfig; any problem is a UsageError"""
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv:
        raise UsageError(f"a subcommand is required: one of {', '.join(COMMANDS)}")
    args = build_parser().parse_args(argv)
    if args.command is None:
        raise UsageError(f"a subcommand is required: one of {', '.join(COMMANDS)}")

    try:
        pools = [args.pool] if args.command == "train" else (getattr(args, "pools", None) or [])
        for spec in pools:
            parse_pool_spec(spec)
        app = _resolve_app(args, load_config(args.config))
        return CommandConfig(
            command=args.command,
            out=args.out,
            seed=args.seed,
            pool=getattr(args, "pool", "tlp"),
            input=getattr(args, "input", None),
            checkpoint=getattr(args, "checkpoint", None),
            inverse=getattr(args, "inverse", False),
            levels=getattr(args, "levels", 1),
            spikes=getattr(args, "spikes", False),
            layer=getattr(args, "layer", None),
            length=getattr(args, "length", 128),
            split=getattr(args, "split", "train"),
            size=getattr(args, "size", None),
            count=getattr(args, "count", 20),
            eps=getattr(args, "eps", 1e-6),
            accuracy_from=getattr(args, "accuracy_from", None),
            log_level=args.log_level,
            app=app,
        )
    except ConfigurationError as e:
        raise UsageError(str(e)) from e
    except ValueError as e:
        raise UsageError(f"invalid arguments: {e}") from e


# ==================== COMMANDS ====================

def _band_summary(x) -> dict:
    return {
        "low": band_energy(x, "low"),
        "high": band_energy(x, "high"),
        "high_fraction": band_fraction(x),
    }


def cmd_decompose(cfg: CommandConfig) -> int:
    out = Path(cfg.out)
    summary = {}
    if cfg.spikes:
        signal, spikes = spike_signal(cfg.length, seed=cfg.seed)
        signal = signal[None, :]
        write_signal_csv(out / "input.csv", signal)
        summary["spikes"] = spikes.tolist()
    elif cfg.input:
        signal = read_signal_csv(cfg.input)
    else:
        raise UsageError("decompose needs --input <signal.csv> or --spikes")

    if cfg.checkpoint:
        checkpoint = load_checkpoint(cfg.checkpoint)
        prefixes = tlp_prefixes(checkpoint)
        layer = cfg.layer or (prefixes[0] if prefixes else None)
        params = load_tlp_params(checkpoint, layer)
        if signal.shape[0] != params.channels:
            raise UsageError(f"TLP layer {layer} of {cfg.checkpoint} works on {params.channels} channels, "
                             f"the input has {signal.shape[0]}")
        predictor, updater = params.predictor, params.updater
        summary["filters"] = "learned"
        summary["layer"] = layer
    else:
        predictor, updater = haar_predict, haar_update
        summary["filters"] = "haar"

    summary["input"] = _band_summary(signal)
    summary["levels"] = []
    current = signal
    lengths, pairs = [], []
    for level in range(1, cfg.levels + 1):
        if current.shape[-1] < 2:
            raise UsageError(f"signal too short for {cfg.levels} levels")
        lengths.append(current.shape[-1])
        pair = lift(current, predictor, updater)
        pairs.append(pair)
        suffix = "" if level == 1 else str(level)
        write_signal_csv(out / f"s{suffix}.csv", pair.s.data)
        write_signal_csv(out / f"d{suffix}.csv", pair.d.data)
        entry = {"level": level, "s": _band_summary(pair.s.data), "d": _band_summary(pair.d.data)}
        if cfg.spikes and level == 1:
            entry["d_energy_near_spikes"] = spike_energy_fraction(pair.d.data, summary["spikes"])
        summary["levels"].append(entry)
        current = pair.s.data[0]

    write_json(out / "bands.json", summary)

    if cfg.inverse:
        s = pairs[-1].s
        for pair, length in zip(reversed(pairs), reversed(lengths)):
            s = inverse_lift(s, pair.d, predictor, updater, length=length)
        write_signal_csv(out / "reconstructed.csv", s.data)
        error = float(np.max(np.abs(s.data[0] - signal)))
        logger.info(f"Reconstruction max abs error: {error:.3e}")

    logger.info(f"Decomposed {signal.shape[0]}x{signal.shape[1]} signal into {cfg.levels} level(s): {out}")
    return EXIT_OK


def cmd_train(cfg: CommandConfig) -> int:
    app = cfg.app
    out = Path(cfg.out)
    splits = make_splits(app, cfg.seed)
    model = build_model(cfg.pool, splits.train.channels, app.model.classes, cfg.seed, app.model, app.tlp)
    result = train(model, splits.train, app.training, seed=cfg.seed, dev=splits.dev,
                   metrics_path=out / "metrics.csv", progress=_progress())
    test_acc = evaluate(model, splits.test)

    checkpoint = build_checkpoint(
        model.named_parameters(), app.tlp, app.training.alpha_u, app.training.alpha_p,
        model={
            "pool_spec": cfg.pool,
            "channels": splits.train.channels,
            "classes": app.model.classes,
            "hidden_channels": app.model.hidden_channels,
            "encoder_widths": list(app.model.encoder_widths),
            "locations": app.model.locations,
            "seed": cfg.seed,
        },
    )
    save_checkpoint(cfg.checkpoint or out / "checkpoint.json", checkpoint)
    final = result.final
    write_json(out / "summary.json", {
        "pool": cfg.pool,
        "seed": cfg.seed,
        "parameters": model.parameter_count(),
        "epochs": len(result.log),
        "test_acc": test_acc,
        "dev_acc": final.dev_acc if final else None,
    })
    logger.info(f"Trained {cfg.pool}: test accuracy {test_acc:.3f}")
    return EXIT_OK


def cmd_compare(cfg: CommandConfig) -> int:
    app = cfg.app
    out = Path(cfg.out)
    results = run_comparison(app)
    ranked = rank_results(results)
    write_table_csv(out / "comparison.csv", ["rank", "pool", "mean_acc", "std_acc", "runs"],
                    [[r.rank, r.pool_spec, r.mean_acc, r.std_acc, r.runs] for r in ranked])
    write_json(out / "results.json", {key: results[key].to_dict() for key in sorted(results)})
    for row in ranked:
        logger.info(f"#{row.rank} {row.pool_spec}: {row.mean_acc:.3f} ± {row.std_acc:.3f} ({row.runs} runs)")
    return EXIT_OK


def cmd_bench(cfg: CommandConfig) -> int:
    app = cfg.app
    out = Path(cfg.out)
    accuracies = None
    if cfg.accuracy_from:
        accuracies = {}
        for entry in read_json(cfg.accuracy_from).values():
            accuracies.setdefault(entry["pool_spec"], []).append(entry["test_acc"])
    bench = app.benchmark
    report = run_benchmark(
        bench.pools, bench.sizes, repetitions=bench.repetitions, warmup=bench.warmup, seed=cfg.seed,
        batch_size=bench.batch_size, channels=app.dataset.channels, classes=app.model.classes,
        model_config=app.model, tlp_config=app.tlp, accuracies=accuracies,
    )
    write_json(out / "report.json", report.to_dict())
    write_json(out / "timing.json", report.timing_dict())
    for key, value in report.tlp_overhead.items():
        logger.info(f"TLP adds {value['added_flops']} FLOPs at {key} "
                    f"({100 * value['share_of_tlp_model']:.2f}% of the model)")
    return EXIT_OK


def cmd_gradcheck(cfg: CommandConfig) -> int:
    report = run_gradcheck_suite(range(cfg.seed, cfg.seed + cfg.count), eps=cfg.eps,
                                 progress=_progress())
    write_json(Path(cfg.out) / "gradcheck.json", {
        "passed": report.passed,
        "seeds": cfg.count,
        "worst": report.worst(),
    })
    for failure in report.failures:
        logger.error(f"gradcheck {failure.check}[{failure.tensor}] seed {failure.seed}: "
                     f"{failure.error:.2e} >= {failure.tolerance:.0e}")
    return EXIT_OK if report.passed else EXIT_NUMERICAL


def cmd_export(cfg: CommandConfig) -> int:
    ds = cfg.app.dataset
    size = cfg.size or {"train": ds.train_size, "dev": ds.dev_size, "test": ds.test_size}[cfg.split]
    dataset = gen_dataset(ds.task, cfg.seed, size, cfg.split, length=ds.length, channels=ds.channels,
                          noise=ds.noise)
    write_dataset_csv(Path(cfg.out) / f"{ds.task}_{cfg.split}.csv", dataset)
    return EXIT_OK


HANDLERS = {
    "decompose": cmd_decompose,
    "train": cmd_train,
    "compare": cmd_compare,
    "bench": cmd_bench,
    "gradcheck": cmd_gradcheck,
    "export": cmd_export,
}


def _progress() -> bool:
    return logging.getLogger().isEnabledFor(logging.INFO)


def dispatch(cfg: CommandConfig) -> int:
    """Run one command; returns its exit code"""
    return HANDLERS[cfg.command](cfg)


def main(argv: Optional[List[str]] = None) -> int:
    try:
        cfg = parse_args(argv)
        setup_logging(cfg.app, cfg.log_level)
        logger.info(f"Resolved config: {cfg.model_dump_json()}")
        return dispatch(cfg)
    except SystemExit as e:
        return int(e.code or 0)
    except (LiftPoolError, OSError, FloatingPointError) as e:
        print(ErrorHandler.handle_exception(e), file=sys.stderr)
        return ErrorHandler.exit_code(e)


if __name__ == "__main__":
    sys.exit(main())
