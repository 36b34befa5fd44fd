"""Full decoding-speed grid (soft, monotonic, MoChA w=2,4,8 at T = U = 10..100).

    python3 scripts/run_benchmark.py --trials 100 --out bench.csv --plot bench.svg
"""

import argparse
import logging

from mocha_attention import bench, report


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--trials", type=int, default=100)
    parser.add_argument("--dim", type=int, default=256)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--matcha", action="store_true", help="also time MAtChA")
    parser.add_argument("--out", default="bench.csv")
    parser.add_argument("--plot", default="bench.svg")
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    mechanisms = list(bench.DEFAULT_MECHANISMS) + ([("matcha", 0)] if args.matcha else [])
    records = bench.run_speed_benchmark(
        args.dim, bench.DEFAULT_LENGTHS, mechanisms, args.trials, args.seed,
        progress=lambda r: logging.info("%-12s T=%3d %.3es", r.label, r.T, r.mean_seconds),
    )
    report.emit_csv(records, args.out)
    report.emit_scaling_plot(records, args.plot)
    print(f"wrote {args.out} and {args.plot}")


if __name__ == "__main__":
    main()
