"""Command-line entry points: ``bench``, ``train`` and ``eval``."""

import argparse
import logging
import sys
from pathlib import Path

from mocha_attention import bench, report
from mocha_attention.transducer.model import MECHANISMS

logger = logging.getLogger("mocha_attention")


def _positive(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mocha-attn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bench", help="attention-only decoding speed benchmark")
    b.add_argument("--mechanism", choices=MECHANISMS,
                   help="time a single mechanism (default: soft, monotonic and mocha w=2,4,8)")
    b.add_argument("--chunk-size", type=_positive, help="chunk width, mocha only")
    b.add_argument("--min-len", type=_positive, default=10)
    b.add_argument("--max-len", type=_positive, default=100)
    b.add_argument("--step", type=_positive, default=10)
    b.add_argument("--trials", type=_positive, default=100)
    b.add_argument("--dim", type=_positive, default=256)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", default="bench.csv")
    b.add_argument("--plot", help="also write an SVG scaling plot")

    t = sub.add_parser("train", help="train the toy transducer")
    t.add_argument("--task", choices=("copy", "pair_swap"), default="copy")
    t.add_argument("--mechanism", choices=MECHANISMS, default="mocha")
    t.add_argument("--chunk-size", type=_positive, help="chunk width, mocha only (default 2)")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--steps", type=_positive, default=20000)
    t.add_argument("--learning-rate", type=float, default=3e-3)
    t.add_argument("--target-accuracy", type=float,
                   help="stop early once held-out teacher-forced accuracy reaches this")
    t.add_argument("--out-dir", help="run directory (default runs/<task>_<mechanism>_s<seed>)")

    e = sub.add_parser("eval", help="evaluate a trained run directory")
    e.add_argument("--model-dir", required=True)
    e.add_argument("--emit-alignments", type=int, nargs="?", const=5, default=0, metavar="N",
                   help="write alignments/step_<i>.svg for N held-out examples (default 5)")
    e.add_argument("--samples", type=_positive, default=200)
    return parser


def _check_chunk_size(parser, args):
    if args.chunk_size is not None and args.mechanism != "mocha":
        which = args.mechanism or "the default mechanism grid"
        parser.error(f"--chunk-size only applies to --mechanism mocha, not {which}")


def cmd_bench(args) -> int:
    if args.min_len > args.max_len:
        raise SystemExit(f"--min-len {args.min_len} exceeds --max-len {args.max_len}")
    lengths = range(args.min_len, args.max_len + 1, args.step)
    if args.mechanism is None:
        mechanisms = bench.DEFAULT_MECHANISMS
    elif args.mechanism == "mocha":
        mechanisms = [("mocha", args.chunk_size or 2)]
    else:
        mechanisms = [(args.mechanism, 1 if args.mechanism == "monotonic" else 0)]

    def progress(r):
        logger.info("%-14s T=%3d mean %.3es sd %.1es", r.label, r.T, r.mean_seconds, r.stddev_seconds)

    records = bench.run_speed_benchmark(args.dim, lengths, mechanisms, args.trials, args.seed, progress)
    report.emit_csv(records, args.out)
    if args.plot:
        report.emit_scaling_plot(records, args.plot)
    return 0


def cmd_train(args) -> int:
    from mocha_attention.transducer import ModelConfig, TaskSpec, TrainConfig, save_run, train

    chunk = args.chunk_size or 2
    out_dir = args.out_dir or f"runs/{args.task}_{args.mechanism}_s{args.seed}"
    task = TaskSpec(kind=args.task)
    config = ModelConfig(mechanism=args.mechanism, chunk_size=chunk, seed=args.seed)
    train_config = TrainConfig(
        steps=args.steps, learning_rate=args.learning_rate, target_accuracy=args.target_accuracy
    )
    result = train(task, config, train_config)
    save_run(out_dir, task, config, train_config, result)
    step, loss, acc = result.curve[-1]
    print(f"{out_dir}: step {step} loss {loss:.4f} teacher-forced accuracy {acc:.4f}")
    return 0


def cmd_eval(args) -> int:
    from mocha_attention.transducer import greedy_transduce, load_run, make_dataset
    from mocha_attention.transducer.train import held_out, sequence_accuracy, teacher_forced_accuracy

    run_dir = Path(args.model_dir)
    task, model = load_run(run_dir)
    pairs = make_dataset(held_out(task, args.samples, offset=2_000_003))
    tf_acc = teacher_forced_accuracy(model, pairs)
    seq_acc = sequence_accuracy(model, pairs)
    lines = [f"teacher_forced_accuracy={tf_acc!r}", f"sequence_accuracy={seq_acc!r}", f"samples={len(pairs)}"]
    (run_dir / "eval.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print("\n".join(lines))
    if args.emit_alignments:
        align_dir = run_dir / "alignments"
        align_dir.mkdir(exist_ok=True)
        for i, (source, target) in enumerate(pairs[:args.emit_alignments]):
            out = greedy_transduce(model, source, max_len=len(target) + 4)
            report.emit_alignment_plot(out.trace, align_dir / f"step_{i}.svg")
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command in ("bench", "train"):
            _check_chunk_size(parser, args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    handlers = {"bench": cmd_bench, "train": cmd_train, "eval": cmd_eval}
    try:
        return handlers[args.command](args)
    except SystemExit as exc:
        if isinstance(exc.code, str):
            print(f"error: {exc.code}", file=sys.stderr)
            return 2
        return exc.code or 0
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
