import argparse
import sys
from pathlib import Path
from typing import List, Optional

from src.constants import (
    ATTENTION_DIM, BEAM_SIZE, DECODER_HIDDEN, EMBEDDING_DIM, ENCODER_HIDDEN, ENCODER_LAYERS, MAX_DECODE_LEN,
    PROJECTION_DIM, SUMMARY_SENTENCES,
)
from src.errors import error_category
from src.models import ModelConfig, ModelVariant, RunConfig, SplitSpec, TrainConfig
from src.pipeline import cmd_baseline, cmd_eval, cmd_gen_synthetic, cmd_ingest, cmd_summarize, cmd_train
from src.utils.logger import get_logger

logger = get_logger("summarizer")

SPLITS = ("train", "dev", "test", "all")
ARCHITECTURE_FLAGS = ("variant", "emb_dim", "hidden", "dec_hidden", "layers", "attn_dim", "proj_dim")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="summarizer",
                                     description="Background-aware radiology impression summarization.")
    commands = parser.add_subparsers(dest="command", required=True)

    ingest = commands.add_parser("ingest", help="filter a raw JSONL corpus into the canonical format")
    ingest.add_argument("raw", type=Path)
    ingest.add_argument("out", type=Path)
    ingest.add_argument("--top-body-parts", type=int, default=None)
    ingest.add_argument("--cap-per-body-part", type=int, default=None)
    ingest.add_argument("--seed", type=int, default=1)

    train = commands.add_parser("train", help="train a summarizer and write its best checkpoint")
    train.add_argument("corpus", type=Path)
    train.add_argument("checkpoint", type=Path)
    # Architecture flags default to None so a resumed run can tell which ones were given.
    train.add_argument("--variant", choices=[v.value for v in ModelVariant], default=None,
                       help=f"default: {ModelVariant.BACKGROUND_GATED.value}")
    train.add_argument("--emb-dim", type=int, default=None, help=f"default: {EMBEDDING_DIM}")
    train.add_argument("--hidden", type=int, default=None, help=f"default: {ENCODER_HIDDEN}")
    train.add_argument("--dec-hidden", type=int, default=None, help=f"default: {DECODER_HIDDEN}")
    train.add_argument("--layers", type=int, default=None, help=f"default: {ENCODER_LAYERS}")
    train.add_argument("--attn-dim", type=int, default=None, help=f"default: {ATTENTION_DIM}")
    train.add_argument("--proj-dim", type=int, default=None, help=f"default: {PROJECTION_DIM}")
    train.add_argument("--lr", type=float, default=1e-3)
    train.add_argument("--batch-size", type=int, default=8)
    train.add_argument("--epochs", type=int, default=30)
    train.add_argument("--patience", type=int, default=5)
    train.add_argument("--seed", type=int, default=1)
    train.add_argument("--holdout-body-part", default=None)
    train.add_argument("--vectors", type=Path, default=None)
    train.add_argument("--resume", type=Path, default=None)

    evaluate = commands.add_parser("eval", help="decode a split and report ROUGE")
    evaluate.add_argument("checkpoint", type=Path)
    evaluate.add_argument("corpus", type=Path)
    evaluate.add_argument("--split", choices=SPLITS, default="test")
    evaluate.add_argument("--beam", type=int, default=BEAM_SIZE)
    evaluate.add_argument("--max-len", type=int, default=MAX_DECODE_LEN)
    evaluate.add_argument("--output", type=Path, default=None)
    evaluate.add_argument("--predictions", type=Path, default=None)

    summarize = commands.add_parser("summarize", help="summarize one JSON report read from standard input")
    summarize.add_argument("checkpoint", type=Path)
    summarize.add_argument("--beam", type=int, default=BEAM_SIZE)
    summarize.add_argument("--max-len", type=int, default=MAX_DECODE_LEN)

    baseline = commands.add_parser("baseline", help="score an extractive baseline")
    baseline.add_argument("method")
    baseline.add_argument("corpus", type=Path)
    baseline.add_argument("--split", choices=SPLITS, default="test")
    baseline.add_argument("--seed", type=int, default=1)
    baseline.add_argument("--sentences", type=int, default=SUMMARY_SENTENCES)
    baseline.add_argument("--prepend-background", action="store_true")
    baseline.add_argument("--output", type=Path, default=None)
    baseline.add_argument("--predictions", type=Path, default=None)

    synthetic = commands.add_parser("gen-synthetic", help="write a synthetic laterality corpus")
    synthetic.add_argument("out", type=Path)
    synthetic.add_argument("--n", type=int, default=1000)
    synthetic.add_argument("--seed", type=int, default=1)
    return parser


def run(args: argparse.Namespace) -> None:
    if args.command == "ingest":
        RunConfig(command=args.command, corpus_path=args.raw, output_path=args.out, seed=args.seed)
        tally = cmd_ingest(args.raw, args.out, args.top_body_parts, args.cap_per_body_part, args.seed)
        print(tally.to_string() if not tally.empty else "0 records kept")

    elif args.command == "train":
        RunConfig(command=args.command, corpus_path=args.corpus, checkpoint_path=args.checkpoint,
                  seed=args.seed, vectors_path=args.vectors)
        if args.resume is not None and not args.resume.is_file():
            raise FileNotFoundError(f"No such file: {args.resume}")
        architecture = {name: getattr(args, name) for name in ARCHITECTURE_FLAGS if getattr(args, name) is not None}
        model_config = ModelConfig(**architecture, init_seed=args.seed)
        train_config = TrainConfig(learning_rate=args.lr, batch_size=args.batch_size, max_epochs=args.epochs,
                                   patience=args.patience, seed=args.seed)
        split_spec = SplitSpec(seed=args.seed, holdout_body_part=args.holdout_body_part)
        cmd_train(args.corpus, args.checkpoint, model_config, train_config, split_spec,
                  vectors_path=args.vectors, resume_path=args.resume)

    elif args.command == "eval":
        RunConfig(command=args.command, corpus_path=args.corpus, checkpoint_path=args.checkpoint,
                  beam=args.beam, max_len=args.max_len, output_path=args.output)
        report = cmd_eval(args.checkpoint, args.corpus, args.split, args.beam, args.max_len,
                          args.output, args.predictions)
        print(report.model_dump_json(indent=2))

    elif args.command == "summarize":
        RunConfig(command=args.command, checkpoint_path=args.checkpoint, beam=args.beam, max_len=args.max_len)
        print(cmd_summarize(args.checkpoint, sys.stdin.read(), args.beam, args.max_len))

    elif args.command == "baseline":
        RunConfig(command=args.command, corpus_path=args.corpus, seed=args.seed, output_path=args.output)
        report = cmd_baseline(args.method, args.corpus, args.split, SplitSpec(seed=args.seed),
                              args.prepend_background, args.sentences, args.output, args.predictions)
        print(report.model_dump_json(indent=2))

    elif args.command == "gen-synthetic":
        count = cmd_gen_synthetic(args.out, args.n, args.seed)
        print(f"{count} reports written to {args.out}")


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        run(args)
    except Exception as e:
        logger.debug(f"{args.command} failed", exc_info=True)
        message = " ".join(str(e).split())
        print(f"error: {error_category(e)}: {message}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
