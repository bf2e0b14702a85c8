"""Command line entry point: ``subwsi <command> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import RunConfig, SubstitutesConfig, load_config, load_grid
from .combine import CombineConfig
from .data import SyntheticSpec, make_synthetic, read_dataset, write_corpus, dataset_tsv
from .errors import WsiError
from .pipeline import (
    analyze_predictions,
    compare_submissions,
    grid_search,
    run_pipeline,
    write_grid,
)

EXIT_OK, EXIT_FATAL, EXIT_PARTIAL = 0, 1, 2

log = logging.getLogger("subwsi")


def _config(args) -> RunConfig:
    cfg = load_config(args.config)
    overrides = {}
    if getattr(args, "dataset", None):
        overrides["dataset_path"] = str(args.dataset)
    if getattr(args, "output", None):
        overrides["output_dir"] = str(args.output)
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "workers", None) is not None:
        overrides["workers"] = args.workers
    for item in getattr(args, "set", None) or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise WsiError(f"--set expects key=value, got {item!r}")
        overrides[key.strip()] = _parse_value(value.strip())
    return cfg.with_overrides(overrides) if overrides else cfg


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def cmd_ingest_check(args) -> int:
    ds = read_dataset(args.dataset)
    print(json.dumps(ds.summary(), indent=2, sort_keys=True))
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _config(args)
    result = run_pipeline(cfg)
    if result.report is not None:
        agg = result.report.aggregate
        print(f"ARI {agg['weighted_ari']:.4f}  V-M {agg['v_measure']:.4f}  F {agg['paired_f']:.4f}  "
              f"#Cl {agg['mean_num_clusters']:.2f}")
    print(f"outputs written to {cfg.output_dir}")
    if result.outcomes and len(result.failed_words) == len(result.outcomes):
        print("error: every word failed", file=sys.stderr)
        return EXIT_FATAL
    if result.partial:
        log.warning("failed words: %s", ", ".join(result.failed_words))
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_grid(args) -> int:
    cfg = _config(args)
    grid = load_grid(args.grid)
    if args.objective:
        grid = type(grid)(grid.values, args.objective)
    result = grid_search(cfg, grid)
    write_grid(result, cfg.output_dir)
    best = result.rows[0] if result.rows else {}
    print(f"{len(result.rows)} grid points evaluated; best {grid.objective} = {best.get('ari' if grid.objective == 'ari' else 'max_ari')}")
    print(f"outputs written to {cfg.output_dir}")
    failed = [r for r in result.rows if r.get("status") != "ok"]
    return EXIT_PARTIAL if failed else EXIT_OK


def cmd_compare(args) -> int:
    cfg = _config(args) if args.config else None
    report = compare_submissions(read_dataset(args.pred_a), read_dataset(args.pred_b), read_dataset(args.gold), cfg)
    text = json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    if args.output:
        Path(args.output).parent.mkdir(parents=True, exist_ok=True)
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_analyze(args) -> int:
    cfg = _config(args)
    preds = read_dataset(args.predictions)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in analyze_predictions(cfg, preds).items():
        (out / name).write_text(text, encoding="utf-8")
    print(f"outputs written to {out}")
    return EXIT_OK


def synthetic_config(seed: int) -> RunConfig:
    """Run configuration that fits the synthetic data written by ``make-synthetic``."""
    return RunConfig(
        dataset_path="dataset.tsv",
        substitutes=SubstitutesConfig(corpus_path="corpus.txt", smoothing_k=0.01),
        combine=CombineConfig("bayes-comb", top_k=10, zipf_z=2.0),
        seed=seed,
        output_dir="wsi-output",
    )


def cmd_make_synthetic(args) -> int:
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    spec = SyntheticSpec(
        seed=args.seed,
        corpus_tokens=args.corpus_tokens,
        num_pseudowords=args.pseudowords,
        examples_per_sense=args.examples_per_sense,
        outlier_rate=args.outlier_rate,
    )
    syn = make_synthetic(spec)
    write_corpus(syn.corpus, out / "corpus.txt")
    (out / "dataset.tsv").write_text(dataset_tsv(syn.dataset.rows), encoding="utf-8")
    (out / "config.toml").write_text(synthetic_config(args.seed).to_toml(), encoding="utf-8")
    print(f"wrote corpus.txt, dataset.tsv and config.toml to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="subwsi", description="Word sense induction by clustering LM substitutes.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = p.add_subparsers(dest="command", required=True)

    def run_flags(sp, config_required=True):
        sp.add_argument("--config", required=config_required, help="TOML run configuration")
        sp.add_argument("--dataset", help="override dataset_path")
        sp.add_argument("--output", help="override output_dir")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--workers", type=int)
        sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config key, e.g. combine.top_k=50 (repeatable)")

    sp = sub.add_parser("ingest-check", help="validate a dataset TSV and print a summary")
    sp.add_argument("dataset")
    sp.set_defaults(func=cmd_ingest_check)

    sp = sub.add_parser("run", help="run the pipeline and write predictions and reports")
    run_flags(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("grid", help="grid search over hyperparameters")
    run_flags(sp)
    sp.add_argument("--grid", required=True, help="TOML grid file")
    sp.add_argument("--objective", choices=("ari", "maxARI"))
    sp.set_defaults(func=cmd_grid)

    sp = sub.add_parser("compare", help="compare two submissions against gold")
    sp.add_argument("pred_a")
    sp.add_argument("pred_b")
    sp.add_argument("gold")
    run_flags(sp, config_required=False)
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("make-synthetic", help="write a synthetic pseudoword corpus, dataset and config")
    sp.add_argument("--output", required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--corpus-tokens", type=int, default=SyntheticSpec.corpus_tokens)
    sp.add_argument("--pseudowords", type=int, default=SyntheticSpec.num_pseudowords)
    sp.add_argument("--examples-per-sense", type=int, default=SyntheticSpec.examples_per_sense)
    sp.add_argument("--outlier-rate", type=float, default=0.0)
    sp.set_defaults(func=cmd_make_synthetic)

    sp = sub.add_parser("analyze", help="discriminative substitutes and listings for a predictions file")
    run_flags(sp)
    sp.add_argument("--predictions", required=True)
    sp.set_defaults(func=cmd_analyze)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (WsiError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
