"""Run the annealed, greedy-evolutionary, and random strategies at equal
oracle budget and report the per-seed best scores with medians.

Example:
    python3 scripts/strategy_comparison.py --rounds 500 --pop 32 --init-pop 256
"""

import argparse

from densewire import experiments, graphs


def parse_space(text):
    if text.startswith("single:"):
        return graphs.single_cell_template(int(text.split(":", 1)[1]))
    return graphs.preset_space(text)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--space", default="imagenet")
    parser.add_argument("--strategies", default="mh-es,es,rs")
    parser.add_argument("--rounds", type=int, default=500)
    parser.add_argument("--pop", type=int, default=32)
    parser.add_argument("--init-pop", type=int, default=256)
    parser.add_argument("--t0", type=float, default=0.3)
    parser.add_argument("--seeds", default="0,1,2,3,4,5,6,7,8,9")
    parser.add_argument("--salt", type=int, default=0)
    parser.add_argument("--out", help="write per-seed scores to this CSV")
    args = parser.parse_args()

    cfg = experiments.StrategyComparisonConfig(
        template=parse_space(args.space),
        strategies=tuple(args.strategies.split(",")),
        rounds=args.rounds,
        population=args.pop,
        init_population=args.init_pop,
        t0=args.t0,
        seeds=tuple(int(s) for s in args.seeds.split(",")),
        salt=args.salt,
    )
    result = experiments.strategy_comparison(cfg)

    for strategy in cfg.strategies:
        scores = " ".join(f"{s:.6f}" for s in result.scores[strategy])
        print(f"{strategy:>6}  {scores}")
    for strategy in cfg.strategies:
        print(f"median {strategy:>6}  {result.median(strategy):.6f}")

    if args.out:
        lines = ["strategy,seed,best_score"]
        for strategy in cfg.strategies:
            for seed, score in zip(cfg.seeds, result.scores[strategy]):
                lines.append(f"{strategy},{seed},{score!r}")
        with open(args.out, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
