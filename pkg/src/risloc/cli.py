"""Command-line pipeline: generate / train / eval / gradcheck.

Every subcommand exits 0 on success and 1 with a one-line diagnostic on
failure.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import dataset as ds
from .config import load_run_config
from .layers import (BatchNorm2d, Conv2d, Dense, GlobalAvgPool, MaxPool2d,
                     ReLU, Sequential, finite_diff_gradcheck)
from .network import (NetworkSpec, build_network, load_checkpoint,
                      save_checkpoint)
from .training import TrainConfig, evaluate_rmse, export_metrics, train

LAYER_TOLERANCE = 1e-5
NETWORK_TOLERANCE = 1e-4


def _cmd_generate(args) -> int:
    cfg = load_run_config(args.config)
    train_set, test_set, manifest = ds.build_dataset(
        cfg.scene, cfg.grid, cfg.split_fraction, cfg.split_seed)
    ds.serialize(train_set, test_set, manifest, args.out)
    print(f"wrote {manifest.sample_count} samples "
          f"({manifest.train_count} train) to {args.out}")
    return 0


def _cmd_train(args) -> int:
    train_set, test_set, manifest = ds.deserialize(args.data)
    spec = NetworkSpec(variant=args.spec, block_count=args.blocks,
                       input_shape=manifest.input_shape)
    model = build_network(spec, seed=args.seed)
    config = TrainConfig(epochs=args.epochs, batch_size=args.batch_size,
                         learning_rate=args.lr, seed=args.seed)
    model, history = train(model, train_set, test_set, manifest, config)
    save_checkpoint(model, args.out)
    export_metrics(history, args.metrics)
    print(f"final test RMSE {history[-1].test_rmse_m:.4f} m; "
          f"checkpoint {args.out}, metrics {args.metrics}")
    return 0


def _cmd_eval(args) -> int:
    _, test_set, manifest = ds.deserialize(args.data)
    model = load_checkpoint(args.ckpt)
    print(f"{evaluate_rmse(model, test_set, manifest):.6f}")
    return 0


def _gradcheck_cases():
    rng = np.random.default_rng(7)

    def conv():
        return Conv2d(3, 4, 3, stride=1, padding=1,
                      rng=np.random.default_rng(1), dtype=np.float64)

    cases = [
        ("conv2d", conv(), (2, 3, 6, 6)),
        ("batchnorm2d", BatchNorm2d(3, dtype=np.float64), (4, 3, 5, 5)),
        ("relu", ReLU(), (2, 3, 6, 6)),
        ("maxpool2d", MaxPool2d(2, stride=2), (2, 3, 6, 6)),
        ("global_avgpool", Sequential(GlobalAvgPool()), (2, 4, 5, 5)),
        ("fully_connected", Dense(10, 4, rng=np.random.default_rng(2),
                                  dtype=np.float64), (6, 10)),
    ]
    for name, layer, shape in cases:
        yield name, layer, rng.standard_normal(shape), LAYER_TOLERANCE
    net = build_network(NetworkSpec(variant="rcnr", block_count=4), seed=3,
                        dtype=np.float64)
    yield ("rcnr_4_blocks", net,
           rng.standard_normal((2, 2, 16, 16)), NETWORK_TOLERANCE)


def _cmd_gradcheck(args) -> int:
    worst_fail = None
    for name, layer, x, tol in _gradcheck_cases():
        err = finite_diff_gradcheck(layer, x, rng=np.random.default_rng(11))
        status = "ok" if err < tol else "FAIL"
        print(f"{name}: max relative error {err:.3e} (tolerance {tol:.0e}) {status}")
        if err >= tol:
            worst_fail = name
    if worst_fail is not None:
        raise RuntimeError(f"gradient check failed for {worst_fail}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="risloc",
        description="RIS-aided fingerprint positioning pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="synthesize a fingerprint dataset")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("train", help="train a positioning network")
    p.add_argument("--data", required=True)
    p.add_argument("--spec", choices=["rcnr", "cnn"], default="rcnr")
    p.add_argument("--blocks", type=int, choices=[3, 4], default=4)
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--metrics", required=True, help="metrics CSV path")
    p.add_argument("--epochs", type=int, default=60)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="print test RMSE in meters")
    p.add_argument("--data", required=True)
    p.add_argument("--ckpt", required=True)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("gradcheck",
                       help="finite-difference gradient verification")
    p.set_defaults(func=_cmd_gradcheck)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as e:  # one-line diagnostic, nonzero exit
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
