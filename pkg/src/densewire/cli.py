"""Command-line surface: sampling, augmentation, predictor pipeline, search,
enumeration, chain verification, and store utilities.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import graphs, isomorphism, mcmc, oracles, predictor, sampling, search, store
from .errors import DensewireError


def _parse_space(text: str) -> graphs.SpaceTemplate:
    """Preset name, or single:N for a one-cell space with N vertices."""
    if text.startswith("single:"):
        n = int(text.split(":", 1)[1])
        return graphs.single_cell_template(n)
    return graphs.preset_space(text)


def _load_meta(path: str) -> graphs.MetaGraph:
    return graphs.loads(Path(path).read_text())


def _build_oracle(args) -> object:
    return oracles.parse_oracle(
        args.oracle,
        epochs=getattr(args, "oracle_epochs", 1),
        data_fraction=getattr(args, "oracle_data_fraction", 0.02),
        timeout=getattr(args, "oracle_timeout", oracles.DEFAULT_TIMEOUT),
    )


def _add_oracle_flags(sub, default=None) -> None:
    sub.add_argument("--oracle", required=default is None, default=default,
                     help="synthetic-a[:salt] | synthetic-b[:salt] | "
                          "predictor:ckpt.npz | external:<command>")
    sub.add_argument("--oracle-epochs", type=int, default=1,
                     help="external oracle training epochs per request")
    sub.add_argument("--oracle-data-fraction", type=float, default=0.02,
                     help="external oracle training-data fraction per request")
    sub.add_argument("--oracle-timeout", type=float, default=oracles.DEFAULT_TIMEOUT,
                     help="external oracle per-request timeout in seconds")


def cmd_sample(args) -> int:
    template = _parse_space(args.space)
    oracle = _build_oracle(args)
    metas = sampling.sample_random(template, args.n, seed=args.seed)
    records = []
    try:
        for meta in metas:
            perf = oracles.evaluate(oracle, meta)
            records.append(store.make_record(meta, perf, "measured", seed=args.seed))
    finally:
        if hasattr(oracle, "close"):
            oracle.close()
    store.append_records(args.out, records)
    print(f"wrote {len(records)} measured records to {args.out}")
    return 0


def cmd_augment(args) -> int:
    records = store.load_records(getattr(args, "in"))
    out: list[store.ArchRecord] = list(records)
    added = 0
    for i, rec in enumerate(records):
        if rec.source != "measured":
            continue
        rng = np.random.default_rng((args.seed, i))
        for variant in isomorphism.augment(rec.meta, args.factor, rng):
            out.append(store.make_record(variant, rec.perf, "augmented", seed=args.seed))
            added += 1
    store.append_records(args.out, out)
    print(f"wrote {len(out)} records ({added} augmented) to {args.out}")
    return 0


def cmd_train_predictor(args) -> int:
    records = store.load_records(args.store)
    train_data, test_data = sampling.build_dataset(
        records, augment_factor=args.augment_factor, split_seed=args.seed
    )
    cfg = predictor.TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        weight_decay=args.weight_decay,
        seed=args.seed,
    )
    model = predictor.train(train_data, cfg)
    model.save(args.checkpoint)
    metrics = predictor.evaluate_model(model, test_data)
    print(f"train size {len(train_data)}  test size {len(test_data)}")
    print(f"pearson {metrics.pearson!r}")
    print(f"kendall {metrics.kendall!r}")
    print(f"mse {metrics.mse!r}")
    return 0


def cmd_predict(args) -> int:
    model = predictor.PredictorModel.load(args.checkpoint)
    meta = _load_meta(args.meta)
    print(repr(predictor.predict(model, meta)))
    return 0


def cmd_search(args) -> int:
    template = _parse_space(args.space)
    oracle = _build_oracle(args)
    cfg = search.SearchConfig(
        rounds=args.rounds,
        population=args.pop,
        init_population=args.init_pop,
        t0=args.t0,
        seed=args.seed,
        strategy=args.strategy,
    )
    try:
        result = search.run_search(cfg, oracle, template)
    finally:
        if hasattr(oracle, "close"):
            oracle.close()
    if args.trace:
        result.trace.write_csv(args.trace)
    if args.best_out:
        Path(args.best_out).write_text(graphs.dumps(result.best_meta) + "\n")
    print(f"best score {result.best_score!r}")
    return 0


def cmd_enumerate(args) -> int:
    template = _parse_space(args.space)
    states = sampling.enumerate_space(template)
    print(f"valid states {len(states)}")
    if args.by_class:
        classes = sampling.enumerate_space(template, group_by_canonical=True)
        print(f"canonical classes {len(classes)}")
    return 0


def cmd_verify_mcmc(args) -> int:
    template = _parse_space(args.space)
    oracle = _build_oracle(args)
    space = mcmc.StateSpace.from_template(template, oracle)
    spec = mcmc.ChainSpec(
        temperature=args.temperature, steps=args.steps,
        burn_in=args.burn_in, seed=args.seed,
    )
    diag = mcmc.chain_diagnostics(space, spec)
    print(f"states {len(space)}")
    print(f"stationary gap {diag.stationary_gap!r}")
    print(f"detailed balance gap {diag.detailed_balance_gap!r}")
    print(f"spectral gap {diag.spectral_gap!r}")
    print(f"tv distance {diag.tv_distance!r}")
    if args.report:
        lines = ["state,perf,pi,frequency"]
        for i in range(len(space)):
            lines.append(
                f"{i},{space.perfs[i]!r},{diag.pi[i]!r},{diag.frequencies[i]!r}"
            )
        Path(args.report).write_text("\n".join(lines) + "\n")
    return 0


def cmd_export_dot(args) -> int:
    meta = _load_meta(args.meta)
    text = graphs.to_dot(meta)
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text, end="")
    return 0


def cmd_stats(args) -> int:
    records = store.load_records(args.store)
    for key, value in store.summarize(records).items():
        print(f"{key} {value}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="densewire",
        description="Dense-connectivity architecture sampling, prediction, and search.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="sample distinct graphs, score, and store them")
    p.add_argument("--space", default="imagenet")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    _add_oracle_flags(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("augment", help="add isomorphic variants to a store")
    p.add_argument("--in", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--factor", type=int, default=11)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("train-predictor", help="train the surrogate on a store")
    p.add_argument("--store", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--augment-factor", type=int, default=11)
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--weight-decay", type=float, default=1e-4)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=cmd_train_predictor)

    p = sub.add_parser("predict", help="score one meta-graph document")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--meta", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("search", help="run a search strategy against an oracle")
    p.add_argument("--strategy", choices=search.STRATEGIES, default="mh-es")
    p.add_argument("--space", default="imagenet")
    p.add_argument("--rounds", type=int, default=10_000)
    p.add_argument("--pop", type=int, default=96)
    p.add_argument("--init-pop", type=int, default=4096)
    p.add_argument("--t0", type=float, default=0.001)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--trace", help="write the per-round trace CSV here")
    p.add_argument("--best-out", help="write the best meta-graph document here")
    _add_oracle_flags(p)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("enumerate", help="count the valid states of a tiny space")
    p.add_argument("--space", required=True)
    p.add_argument("--by-class", action="store_true")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("verify-mcmc", help="exact-chain diagnostics on a tiny space")
    p.add_argument("--space", required=True)
    p.add_argument("--temperature", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--burn-in", type=int, default=0)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--report", help="write per-state CSV here")
    _add_oracle_flags(p, default="synthetic-a")
    p.set_defaults(func=cmd_verify_mcmc)

    p = sub.add_parser("export-dot", help="render a meta-graph document as graphviz")
    p.add_argument("--meta", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_export_dot)

    p = sub.add_parser("stats", help="summarize a record store")
    p.add_argument("--store", required=True)
    p.set_defaults(func=cmd_stats)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DensewireError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())
