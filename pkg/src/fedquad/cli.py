"""Command-line front end: train, verify, synth.

train runs secure training over a CSV dataset split by a partition spec
(or over a seeded synthetic dataset) and emits line-delimited JSON
metrics, one record per iteration plus one summary record. verify runs
the named self-check battery and exits nonzero if any check fails. synth
writes a synthetic dataset, its partition spec, and the generating
weights to a directory.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .baseline import MODEL_LINEAR, MODEL_LOGISTIC_TAYLOR, mse_loss, taylor_loss
from .data import (
    load_csv,
    load_partition_spec,
    partition_dataset,
    save_partition_spec,
    synthesize,
    write_csv,
)
from .fixedpoint import FixedPointConfig
from .protocol import TrainingConfig, exact_codec, iteration_record, run_training
from .verify import run_all_checks

MODEL_BY_FLAG = {"linear": MODEL_LINEAR, "logistic": MODEL_LOGISTIC_TAYLOR}


def _parse_feature_counts(text: str) -> list[int]:
    try:
        counts = [int(part) for part in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated integers, got {text!r}"
        ) from None
    if not counts or any(c < 1 for c in counts):
        raise argparse.ArgumentTypeError(
            f"every client needs at least one feature, got {text!r}"
        )
    return counts


def _add_codec_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data-bits", type=int, default=12,
                        help="fractional bits for features and labels")
    parser.add_argument("--weight-bits", type=int, default=12,
                        help="fractional bits for weights")
    parser.add_argument("--exact", action="store_true",
                        help="lossless codec for integer data (overrides bit flags)")
    parser.add_argument("--tagged", action="store_true",
                        help="tag ciphertexts and keys with the iteration index")


def _codec_for(args: argparse.Namespace, model_kind: str) -> FixedPointConfig:
    if args.exact:
        return exact_codec(model_kind)
    return FixedPointConfig(data_bits=args.data_bits, weight_bits=args.weight_bits)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fedquad",
        description="Secure vertical federated training simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="run secure training and emit metrics")
    train.add_argument("--dataset", help="CSV file with a header row")
    train.add_argument("--partition", help="JSON partition spec")
    train.add_argument("--synthetic", action="store_true",
                       help="generate a seeded dataset instead of loading files")
    train.add_argument("--rows", type=int, default=64,
                       help="synthetic dataset rows")
    train.add_argument("--features-per-client", type=_parse_feature_counts,
                       default=[2, 2, 2], metavar="N,N,...",
                       help="synthetic per-client feature counts")
    train.add_argument("--model", choices=sorted(MODEL_BY_FLAG), default="linear")
    train.add_argument("--iters", type=int, default=10)
    train.add_argument("--batch-size", type=int, default=8)
    train.add_argument("--lr", type=float, default=0.1)
    train.add_argument("--lambda", dest="reg_lambda", type=float, default=0.0,
                       help="L2 regularization strength")
    train.add_argument("--seed", type=int, default=0)
    _add_codec_flags(train)
    train.add_argument("--out", help="metrics file (default: stdout)")

    verify = sub.add_parser("verify", help="run the self-check battery")
    verify.add_argument("--seed", type=int, default=0)
    verify.add_argument("--tagged", action="store_true",
                        help="run the attack probe with iteration tags")
    verify.add_argument("--debug-reuse-instance", action="store_true",
                        help="deliberately reuse one FE instance across "
                             "iterations (negative control; verify must fail)")
    verify.add_argument("--out", help="write the report here as well as stdout")

    synth = sub.add_parser("synth", help="write a synthetic dataset to a directory")
    synth.add_argument("--model", choices=sorted(MODEL_BY_FLAG), default="linear")
    synth.add_argument("--rows", type=int, default=64)
    synth.add_argument("--features-per-client", type=_parse_feature_counts,
                       default=[2, 2, 2], metavar="N,N,...")
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--out", required=True, help="output directory")
    return parser


def _load_shards(args: argparse.Namespace, model_kind: str):
    if args.synthetic:
        if args.dataset or args.partition:
            raise SystemExit("--synthetic cannot be combined with --dataset/--partition")
        dataset = synthesize(model_kind, args.rows, args.features_per_client,
                             args.seed)
        return partition_dataset(dataset.header, dataset.rows, dataset.spec)
    if not args.dataset or not args.partition:
        raise SystemExit("train needs either --synthetic or both --dataset and --partition")
    header, rows = load_csv(args.dataset)
    spec = load_partition_spec(args.partition)
    return partition_dataset(header, rows, spec)


def cmd_train(args: argparse.Namespace) -> int:
    model_kind = MODEL_BY_FLAG[args.model]
    shards, central = _load_shards(args, model_kind)
    config = TrainingConfig(
        model_kind=model_kind,
        iterations=args.iters,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        reg_lambda=args.reg_lambda,
        seed=args.seed,
        codec=_codec_for(args, model_kind),
        tagged=args.tagged,
    )
    result = run_training(shards, config)

    weights = result.state.weights
    if model_kind == MODEL_LINEAR:
        final_loss = mse_loss(central.X, central.y, weights)
    else:
        final_loss = taylor_loss(central.X, central.y, weights)
    lines = [json.dumps({"record": "iteration", **iteration_record(m)},
                        sort_keys=True)
             for m in result.metrics]
    summary = {
        "record": "summary",
        "model": args.model,
        "iterations": config.iterations,
        "batch_size": config.batch_size,
        "seed": config.seed,
        "data_bits": config.codec.data_bits,
        "weight_bits": config.codec.weight_bits,
        "final_loss": final_loss,
        "final_weights": [float(v) for v in weights],
    }
    lines.append(json.dumps(summary, sort_keys=True))
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    results = run_all_checks(seed=args.seed, tagged=args.tagged,
                             reuse_fe_instance=args.debug_reuse_instance)
    lines = []
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"{status} {r.name}: {r.detail}")
    failed = [r.name for r in results if not r.passed]
    lines.append(f"{len(results) - len(failed)}/{len(results)} checks passed")
    report = "\n".join(lines) + "\n"
    sys.stdout.write(report)
    if args.out:
        Path(args.out).write_text(report)
    return 1 if failed else 0


def cmd_synth(args: argparse.Namespace) -> int:
    model_kind = MODEL_BY_FLAG[args.model]
    dataset = synthesize(model_kind, args.rows, args.features_per_client, args.seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_csv(out_dir / "dataset.csv", dataset.header, dataset.rows)
    save_partition_spec(dataset.spec, out_dir / "partition.json")
    truth = {
        "model": args.model,
        "seed": args.seed,
        "true_weights": [float(v) for v in dataset.true_weights],
    }
    (out_dir / "truth.json").write_text(json.dumps(truth, indent=2, sort_keys=True) + "\n")
    sys.stdout.write(f"wrote dataset.csv, partition.json, truth.json to {out_dir}\n")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"train": cmd_train, "verify": cmd_verify, "synth": cmd_synth}
    return handlers[args.command](args)


if __name__ == "__main__":
    raise SystemExit(main())
