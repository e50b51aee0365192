"""Command-line entry point.

Subcommands: train, reconstruct, sample, eval, mosaic, info. Exit codes:
0 success, 1 usage error, 2 runtime error. Per-epoch progress goes to
stdout as ``epoch=<i> mse=<v> pl=<v> time_ms=<v>`` (and to --log when
given); EBM_LOG_LEVEL in {error, warn, info, debug} controls diagnostic
verbosity on stderr. All file outputs are written atomically.
"""

import argparse
import logging
import math as _stdmath
import os
import sys

import numpy as np

from . import dataset as ds
from .dbn import Dbn
from .errors import EnergyModelError
from .metrics import pseudo_likelihood
from .persistence import atomic_write_bytes, load, save
from .rbm import Rbm, RbmConfig
from .variants import DropoutRbm, GaussianRbm, SigmoidRbm
from .visual import (export_history_csv, plot_history, tensor_to_image,
                     weight_mosaic, write_pgm)

logger = logging.getLogger(__name__)

_LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}

_MODEL_KINDS = ("rbm", "dropout-rbm", "gaussian-rbm", "sigmoid-rbm", "dbn")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}error: {message}")


def _parse_pair(text: str, flag: str):
    parts = text.split(",")
    if len(parts) != 2:
        raise UsageError(f"error: {flag} expects two comma-separated integers")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError:
        raise UsageError(f"error: {flag} expects integers, got {text!r}")


def _parse_sizes(text: str):
    try:
        return [int(p) for p in text.split(",")]
    except ValueError:
        raise UsageError(f"error: --layer-sizes expects integers, got {text!r}")


def build_parser() -> _Parser:
    parser = _Parser(prog="ebm", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True,
                                parser_class=_Parser)

    train = sub.add_parser("train", help="train a model on an IDX dataset")
    train.add_argument("--model", required=True, choices=_MODEL_KINDS)
    train.add_argument("--data", required=True)
    train.add_argument("--labels")
    train.add_argument("--visible", type=int)
    train.add_argument("--hidden", type=int)
    train.add_argument("--layer-sizes", help="comma-separated, e.g. 784,128,64")
    train.add_argument("--steps", type=int, default=1)
    train.add_argument("--lr", type=float, default=0.1)
    train.add_argument("--momentum", type=float, default=0.0)
    train.add_argument("--decay", type=float, default=0.0)
    train.add_argument("--temperature", type=float, default=1.0)
    train.add_argument("--drop-rate", type=float, default=0.5)
    train.add_argument("--batch-size", type=int, default=128)
    train.add_argument("--epochs", type=int, default=1)
    train.add_argument("--binarize", type=float, default=None,
                       help="binarization threshold in (0, 1)")
    train.add_argument("--standardize", action="store_true")
    train.add_argument("--seed", type=int, default=0)
    train.add_argument("--out", required=True)
    train.add_argument("--log", help="append per-epoch lines to this file")
    train.add_argument("--report-dir",
                       help="write history CSV and rendered metric figures here")
    train.add_argument("--fine-tune-epochs", type=int, default=0)
    train.add_argument("--fine-tune-lr", type=float, default=0.1)
    train.add_argument("--classes", type=int)

    rec = sub.add_parser("reconstruct", help="reconstruct a dataset")
    rec.add_argument("--model-file", required=True)
    rec.add_argument("--data", required=True)
    rec.add_argument("--binarize", type=float, default=None)
    rec.add_argument("--batch-size", type=int, default=128)
    rec.add_argument("--out-mse", default="-",
                     help="'-' prints rec_mse to stdout, else a file path")
    rec.add_argument("--dump-images", help="write per-sample PGMs here")

    sample = sub.add_parser("sample", help="run Gibbs chains and dump PGMs")
    sample.add_argument("--model-file", required=True)
    sample.add_argument("--out-dir", required=True)
    sample.add_argument("--count", type=int, default=16)
    sample.add_argument("--gibbs-steps", type=int, default=100)
    sample.add_argument("--init", choices=("random", "data"), default="random")
    sample.add_argument("--data")
    sample.add_argument("--binarize", type=float, default=None)
    sample.add_argument("--shape", help="image shape r,c when not implied by data")

    ev = sub.add_parser("eval", help="report mse and pseudo-likelihood")
    ev.add_argument("--model-file", required=True)
    ev.add_argument("--data", required=True)
    ev.add_argument("--labels")
    ev.add_argument("--binarize", type=float, default=None)
    ev.add_argument("--batch-size", type=int, default=128)

    mosaic = sub.add_parser("mosaic", help="render weight filters as a PGM")
    mosaic.add_argument("--model-file", required=True)
    mosaic.add_argument("--out", required=True)
    mosaic.add_argument("--tile", help="tile shape r,c (default: square)")
    mosaic.add_argument("--grid", help="grid shape gr,gc (default: near-square)")
    mosaic.add_argument("--pad", type=int, default=1)
    mosaic.add_argument("--layer", type=int, default=0,
                        help="layer index for DBN models")

    info = sub.add_parser("info", help="print a model file's header")
    info.add_argument("--model-file", required=True)

    return parser


# -- shared helpers ---------------------------------------------------------


def _load_data(args, model=None) -> ds.DatasetHandle:
    d = ds.load_idx_images(args.data)
    if getattr(args, "labels", None):
        d = d.with_labels(ds.load_idx_labels(args.labels))
    if isinstance(model, GaussianRbm):
        return ds.standardize_with(d, model.feature_mean, model.feature_std)
    if getattr(args, "binarize", None) is not None:
        return ds.binarize(d, args.binarize)
    if model is None and getattr(args, "standardize", False):
        d, _, _ = ds.standardize(d)
    return d


class _EpochPrinter:
    def __init__(self, log_path=None):
        self.log_file = open(log_path, "a") if log_path else None

    def emit(self, line: str) -> None:
        print(line)
        if self.log_file is not None:
            self.log_file.write(line + "\n")
            self.log_file.flush()

    def epoch(self, record) -> None:
        self.emit(f"epoch={record.epoch_index} mse={record.mse:.9g} "
                  f"pl={record.pl:.9g} time_ms={record.wall_time_ms}")

    def fine_tune(self, record) -> None:
        self.emit(f"fine_tune_epoch={record.epoch_index} "
                  f"cross_entropy={record.cross_entropy:.9g} "
                  f"accuracy={record.accuracy:.9g}")

    def close(self) -> None:
        if self.log_file is not None:
            self.log_file.close()


def _default_tile(n_visible: int):
    side = int(_stdmath.isqrt(n_visible))
    if side * side == n_visible:
        return side, side
    return 1, n_visible


def _default_grid(n_hidden: int):
    cols = int(_stdmath.ceil(_stdmath.sqrt(n_hidden)))
    rows = int(_stdmath.ceil(n_hidden / cols))
    return rows, cols


def _image_shape(args, model, data=None):
    if getattr(args, "shape", None):
        return _parse_pair(args.shape, "--shape")
    if data is not None and data.feature_shape[0] > 1:
        return data.feature_shape
    m = model.layers[0].n_visible if isinstance(model, Dbn) else model.n_visible
    return _default_tile(m)


# -- subcommands -------------------------------------------------------------


def _cmd_train(args) -> int:
    data = _load_data(args)
    printer = _EpochPrinter(args.log)
    try:
        if args.model == "dbn":
            if not args.layer_sizes:
                raise UsageError("error: --model dbn requires --layer-sizes")
            sizes = _parse_sizes(args.layer_sizes)
            if sizes[0] != data.num_features:
                raise ValueError(
                    f"layer size {sizes[0]} != {data.num_features} data features"
                )
            model = Dbn(sizes, steps=args.steps, learning_rate=args.lr,
                        momentum=args.momentum, decay=args.decay,
                        temperature=args.temperature, seed=args.seed)
            model.fit_greedy(data, args.batch_size, args.epochs,
                             callback=lambda _layer, r: printer.epoch(r))
            if args.fine_tune_epochs > 0:
                if args.classes is None:
                    raise UsageError(
                        "error: fine-tuning requires --classes")
                model.fine_tune(data, args.batch_size, args.fine_tune_epochs,
                                args.classes, learning_rate=args.fine_tune_lr,
                                callback=printer.fine_tune)
        else:
            visible = args.visible if args.visible is not None else data.num_features
            if visible != data.num_features:
                raise ValueError(
                    f"--visible {visible} != {data.num_features} data features"
                )
            if args.hidden is None:
                raise UsageError("error: --hidden is required for RBM models")
            config = RbmConfig(
                n_visible=visible, n_hidden=args.hidden, steps=args.steps,
                learning_rate=args.lr, momentum=args.momentum,
                decay=args.decay, temperature=args.temperature, seed=args.seed,
            )
            if args.model == "rbm":
                model = Rbm(config)
            elif args.model == "dropout-rbm":
                model = DropoutRbm(config, args.drop_rate)
            elif args.model == "gaussian-rbm":
                if data.mode != ds.MODE_STANDARDIZED:
                    raise UsageError(
                        "error: --model gaussian-rbm requires --standardize")
                model = GaussianRbm(config)
            else:
                model = SigmoidRbm(config)
            model.fit(data, args.batch_size, args.epochs, callback=printer.epoch)
        save(model, args.out)
        logger.info("model written to %s", args.out)
        if args.report_dir:
            _write_report(model, args.report_dir)
        return 0
    finally:
        printer.close()


def _write_report(model, report_dir) -> None:
    os.makedirs(report_dir, exist_ok=True)
    if isinstance(model, Dbn):
        for i, layer in enumerate(model.layers):
            export_history_csv(layer.history,
                               os.path.join(report_dir, f"history_layer{i}.csv"))
            plot_history(layer.history,
                         os.path.join(report_dir, f"history_layer{i}.png"),
                         title=f"layer {i}")
        if model.history.fine_tune_epochs:
            plot_history(model.history,
                         os.path.join(report_dir, "fine_tune.png"),
                         title="fine-tuning")
    else:
        export_history_csv(model.history, os.path.join(report_dir, "history.csv"))
        plot_history(model.history, os.path.join(report_dir, "history.png"))
    logger.info("report written to %s", report_dir)


def _cmd_reconstruct(args) -> int:
    model = load(args.model_file)
    data = _load_data(args, model)
    if isinstance(model, Dbn):
        rec_mse, recon = model.reconstruct(data.samples)
    else:
        rec_mse, recon = model.reconstruct(data, args.batch_size)
    line = f"rec_mse={rec_mse:.9g}"
    if args.out_mse == "-":
        print(line)
    else:
        atomic_write_bytes(args.out_mse, (line + "\n").encode("ascii"))
    if args.dump_images:
        os.makedirs(args.dump_images, exist_ok=True)
        shape = data.feature_shape
        for i in range(recon.shape[0]):
            img = tensor_to_image(recon[i], shape)
            write_pgm(img, os.path.join(args.dump_images,
                                        f"reconstruction_{i:05d}.pgm"))
    return 0


def _cmd_sample(args) -> int:
    model = load(args.model_file)
    if isinstance(model, Dbn):
        raise ValueError("sample supports RBM models; got a DBN")
    if args.count < 1 or args.gibbs_steps < 1:
        raise ValueError("--count and --gibbs-steps must be >= 1")
    data = None
    if args.init == "data":
        if not args.data:
            raise UsageError("error: --init data requires --data")
        data = _load_data(args, model)
        v = data.samples[:args.count]
    elif isinstance(model, GaussianRbm):
        v = np.zeros((args.count, model.n_visible))
    else:
        v = (model.rng.uniform(args.count * model.n_visible)
             .reshape(args.count, model.n_visible) < 0.5).astype(np.float64)
    pv = None
    for _ in range(args.gibbs_steps):
        _ph, _h, pv, v = model.gibbs_step(v)
    os.makedirs(args.out_dir, exist_ok=True)
    shape = _image_shape(args, model, data)
    for i in range(pv.shape[0]):
        write_pgm(tensor_to_image(pv[i], shape),
                  os.path.join(args.out_dir, f"sample_{i:05d}.pgm"))
    return 0


def _cmd_eval(args) -> int:
    model = load(args.model_file)
    data = _load_data(args, model)
    if isinstance(model, Dbn):
        rec_mse, _ = model.reconstruct(data.samples)
        pl_model = model.layers[0]
    else:
        rec_mse, _ = model.reconstruct(data, args.batch_size)
        pl_model = model
    if data.mode == ds.MODE_STANDARDIZED:
        pl = float("nan")
    else:
        shadow = (data.samples > 0.5).astype(np.float64)
        pl = pseudo_likelihood(pl_model, shadow, pl_model.rng)
    line = f"mse={rec_mse:.9g} pl={pl:.9g}"
    if isinstance(model, Dbn) and model.head is not None and data.labels is not None:
        predicted, _ = model.predict(data.samples)
        line += f" accuracy={float(np.mean(predicted == data.labels)):.9g}"
    print(line)
    return 0


def _cmd_mosaic(args) -> int:
    model = load(args.model_file)
    if isinstance(model, Dbn):
        if not 0 <= args.layer < len(model.layers):
            raise ValueError(f"--layer {args.layer} out of range")
        rbm = model.layers[args.layer]
    else:
        rbm = model
    tile = (_parse_pair(args.tile, "--tile") if args.tile
            else _default_tile(rbm.n_visible))
    grid = (_parse_pair(args.grid, "--grid") if args.grid
            else _default_grid(rbm.n_hidden))
    img = weight_mosaic(rbm.W, tile, grid, pad=args.pad)
    write_pgm(img, args.out)
    return 0


def _cmd_info(args) -> int:
    model = load(args.model_file)
    print(f"kind={model.kind}")
    if isinstance(model, Dbn):
        print(f"layer_sizes={','.join(str(s) for s in model.layer_sizes)}")
        cfg = model.layers[0].config
        print(f"pretrained={model.pretrained}")
        print(f"epochs_trained={sum(len(l.history.epochs) for l in model.layers)}")
        print(f"fine_tune_epochs={len(model.history.fine_tune_epochs)}")
        if model.head is not None:
            print(f"classes={model.head.num_classes}")
    else:
        cfg = model.config
        print(f"n_visible={cfg.n_visible}")
        print(f"n_hidden={cfg.n_hidden}")
        print(f"epochs_trained={len(model.history.epochs)}")
        if isinstance(model, DropoutRbm):
            print(f"drop_rate={model.drop_rate:.9g}")
            print(f"inference_scaled={model.inference_scaled}")
    print(f"steps={cfg.steps}")
    print(f"learning_rate={cfg.learning_rate:.9g}")
    print(f"momentum={cfg.momentum:.9g}")
    print(f"decay={cfg.decay:.9g}")
    print(f"temperature={cfg.temperature:.9g}")
    print(f"seed={cfg.seed}")
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "reconstruct": _cmd_reconstruct,
    "sample": _cmd_sample,
    "eval": _cmd_eval,
    "mosaic": _cmd_mosaic,
    "info": _cmd_info,
}


def run(argv) -> int:
    """Parse argv (without the program name) and execute; returns exit code."""
    level = os.environ.get("EBM_LOG_LEVEL", "info").lower()
    logging.basicConfig(
        level=_LOG_LEVELS.get(level, logging.INFO),
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return 0 if exc.code in (0, None) else 1
    try:
        return _COMMANDS[args.subcommand](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (EnergyModelError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
