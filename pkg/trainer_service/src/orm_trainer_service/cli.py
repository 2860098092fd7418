"""Train and serve from the command line."""

from __future__ import annotations

import argparse
import sys

from .errors import TrainerError
from .service import serve
from .training import TrainerConfig, train


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="orm-trainer")
    sub = parser.add_subparsers(dest="command", required=True)

    train_cmd = sub.add_parser("train", help="fine-tune on a step-tag training file")
    train_cmd.add_argument("--train-file", required=True)
    train_cmd.add_argument("--out", required=True)
    train_cmd.add_argument("--base-model", default="tiny-causal-v1")
    train_cmd.add_argument("--epochs", type=int, default=3)
    train_cmd.add_argument("--batch-size", type=int, default=64)
    train_cmd.add_argument("--learning-rate", type=float, default=5e-4)
    train_cmd.add_argument("--lora-rank", type=int, default=8)
    train_cmd.add_argument("--lora-alpha", type=float, default=16.0)
    train_cmd.add_argument("--lora-dropout", type=float, default=0.0)
    train_cmd.add_argument("--seed", type=int, default=0)

    serve_cmd = sub.add_parser("serve", help="serve POST /score and GET /health")
    serve_cmd.add_argument("--model-dir", required=True)
    serve_cmd.add_argument("--port", type=int, default=8765)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "train":
            out_dir = train(
                TrainerConfig(
                    train_file=args.train_file,
                    output_dir=args.out,
                    base_model=args.base_model,
                    epochs=args.epochs,
                    batch_size=args.batch_size,
                    learning_rate=args.learning_rate,
                    lora_rank=args.lora_rank,
                    lora_alpha=args.lora_alpha,
                    lora_dropout=args.lora_dropout,
                    seed=args.seed,
                )
            )
            print(f"model written to {out_dir}")
            return 0
        serve(args.model_dir, args.port)
        return 0
    except (TrainerError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
