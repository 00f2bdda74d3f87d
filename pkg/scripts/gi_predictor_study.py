"""Compare surrogate rank correlation with and without relabeling-augmented
training data, over several seeds.

Example:
    python3 scripts/gi_predictor_study.py --samples 200 --epochs 150
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
    parser.add_argument("--samples", type=int, default=200)
    parser.add_argument("--augment-factor", type=int, default=8)
    parser.add_argument("--seeds", default="0,1,2,3,4")
    parser.add_argument("--epochs", type=int, default=150)
    parser.add_argument("--batch-size", type=int, default=128)
    parser.add_argument("--salt", type=int, default=0)
    parser.add_argument("--out", help="write per-seed rows to this CSV")
    args = parser.parse_args()

    cfg = experiments.GIStudyConfig(
        template=parse_space(args.space),
        n_samples=args.samples,
        augment_factor=args.augment_factor,
        seeds=tuple(int(s) for s in args.seeds.split(",")),
        epochs=args.epochs,
        batch_size=args.batch_size,
        salt=args.salt,
    )
    result = experiments.gi_augmentation_study(cfg)

    print("seed  tau_plain  tau_augmented  improvement")
    for row in result.rows:
        print(f"{row.seed:>4}  {row.tau_plain:>9.4f}  {row.tau_augmented:>13.4f}"
              f"  {row.improvement:>+11.4f}")
    print(f"median plain       {result.median_plain:.4f}")
    print(f"median augmented   {result.median_augmented:.4f}")
    print(f"median improvement {result.median_improvement:+.4f}")

    if args.out:
        lines = ["seed,tau_plain,tau_augmented,improvement"]
        for row in result.rows:
            lines.append(f"{row.seed},{row.tau_plain!r},{row.tau_augmented!r},"
                         f"{row.improvement!r}")
        with open(args.out, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
