"""End-to-end runs: substitutes -> representatives -> vectors -> clusters -> scores."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import __version__
from .analysis import build_sense_profiles, discriminative_table, nc_difference_report, rows_to_csv, substitute_listing
from .cluster import ClusteringResult, cluster_word, max_ari_word
from .combine import Representative, combine_bayes, make_representatives
from .config import GridSpec, RunConfig
from .data import Dataset, predictions_by_word, read_corpus, read_dataset, write_predictions
from .errors import ConfigError, DomainError, NoSubstitutesError, WsiError
from .metrics import EvalReport, WordScores, aggregate, baselines, evaluate_word
from .sources import (
    Direction,
    Occurrence,
    SubstituteDistribution,
    predict_substitutes,
    read_distribution_file,
    train_toy_lm,
)
from .vectorize import Lemmatizer, vectorize_word

log = logging.getLogger(__name__)

Distributions = dict[str, tuple[SubstituteDistribution, SubstituteDistribution]]


def compute_distributions(cfg: RunConfig, dataset: Dataset) -> Distributions:
    """Forward and backward substitutes for every occurrence of ``dataset``."""
    sc = cfg.substitutes
    if sc.source == "toy-lm":
        corpus = read_corpus(sc.corpus_path)
        fwd_lm = train_toy_lm(corpus, sc.order, Direction.FORWARD, sc.smoothing_k)
        bwd_lm = train_toy_lm(corpus, sc.order, Direction.BACKWARD, sc.smoothing_k)
        return {
            o.context_id: (
                predict_substitutes(fwd_lm, o, sc.top_k, sc.use_pattern, sc.pattern_text),
                predict_substitutes(bwd_lm, o, sc.top_k, sc.use_pattern, sc.pattern_text),
            )
            for o in dataset.occurrences
        }
    by_key = {(d.context_id, d.direction): d for d in read_distribution_file(sc.distributions_path)}
    out = {}
    for o in dataset.occurrences:
        pair = []
        for direction in (Direction.FORWARD, Direction.BACKWARD):
            # a missing side is treated as an empty distribution; the word fails later if it matters
            pair.append(by_key.get((o.context_id, direction)) or SubstituteDistribution(o.context_id, direction, ()))
        out[o.context_id] = tuple(pair)
    return out


@dataclass
class WordOutcome:
    word: str
    occurrence_ids: list[str]
    predictions: dict[str, str] = field(default_factory=dict)
    num_clusters: int = 0
    scores: WordScores | None = None
    max_ari: float | None = None
    max_ari_config: dict | None = None
    flags: list[str] = field(default_factory=list)
    error: str | None = None
    discriminative: list[dict] = field(default_factory=list)
    listing: list[dict] = field(default_factory=list)
    representatives: list[Representative] = field(default_factory=list, repr=False)
    clustering: ClusteringResult | None = field(default=None, repr=False)

    @property
    def ok(self) -> bool:
        return self.error is None


def word_representatives(
    occs: Sequence[Occurrence], dists: Distributions, cfg: RunConfig
) -> tuple[list[Representative], list[str]]:
    reps, flags = [], []
    for o in occs:
        fwd, bwd = dists[o.context_id]
        try:
            rs = make_representatives(fwd, bwd, cfg.combine, o.position)
        except NoSubstitutesError as exc:
            flags.append(f"{o.context_id}: {exc}")
            rs = [Representative(o.context_id, ())]
        if any(r.fallback for r in rs):
            flags.append(f"{o.context_id}: no shared substitutes, used the union ordered by summed probability")
        reps.extend(rs)
    return reps, flags


def process_word(
    word: str,
    occs: Sequence[Occurrence],
    dists: Distributions,
    cfg: RunConfig,
    lem: Lemmatizer,
    target_nc: int | None = None,
) -> WordOutcome:
    out = WordOutcome(word, [o.context_id for o in occs])
    try:
        reps, flags = word_representatives(occs, dists, cfg)
        out.flags.extend(flags)
        vectors, _ = vectorize_word(reps, lem, word, cfg.vectorize)
        owners = [r.context_id for r in reps]
        has_gold = all(o.gold_sense_id is not None for o in occs)
        gold = {o.context_id: o.gold_sense_id for o in occs} if has_gold else None
        res = cluster_word(
            vectors,
            owners,
            cfg.select.cluster_config(),
            cfg.select.selector,
            word=word,
            target_nc=target_nc,
            gold=gold,
        )
        out.clustering = res
        out.flags.extend(res.flags)
        out.predictions = {cid: str(int(lab)) for cid, lab in zip(res.occurrence_ids, res.labels)}
        out.num_clusters = len(set(out.predictions.values()))
        if cfg.eval.gold:
            if len(occs) >= 2:
                out.scores = evaluate_word(word, [gold[c] for c in out.occurrence_ids],
                                           [out.predictions[c] for c in out.occurrence_ids])
            else:
                out.flags.append("fewer than two examples; excluded from evaluation")
        if cfg.eval.max_ari and len(occs) >= 2:
            m = max_ari_word(vectors, owners, gold, cfg.eval.max_ari_grid())
            out.max_ari, out.max_ari_config = m.best_ari, m.best_config
        if cfg.analysis.discriminative:
            if cfg.analysis.profile_source == "gold" and gold is not None:
                senses = gold
            else:
                senses = out.predictions
            by_occ: dict[str, list[Representative]] = {}
            for r in reps:
                by_occ.setdefault(r.context_id, []).append(r)
            profiles = build_sense_profiles(
                word, by_occ, senses, lem, lem(word) if cfg.vectorize.exclude_target else None
            )
            out.discriminative = discriminative_table({word: profiles}, cfg.analysis.min_count, cfg.analysis.top_n)
        if cfg.analysis.listing:
            out.listing = _listing(occs, dists, cfg)
        if cfg.analysis.dump_representatives:
            out.representatives = reps
    except WsiError as exc:
        log.warning("word %s failed: %s", word, exc)
        out.error = f"{type(exc).__name__}: {exc}"
    return out


def _listing(occs, dists, cfg) -> list[dict]:
    rows = []
    for o in occs:
        fwd, bwd = dists[o.context_id]
        try:
            combined = [t for t, _ in combine_bayes(fwd, bwd, cfg.combine.zipf_z)]
        except NoSubstitutesError:
            combined = []
        rows.append(substitute_listing(o.context_id, combined, fwd.tokens, bwd.tokens))
    return rows


def _job(args):
    return process_word(*args)


@dataclass
class RunResult:
    config: RunConfig
    outcomes: list[WordOutcome]
    report: EvalReport | None = None
    baselines: tuple[EvalReport, EvalReport] | None = None

    @property
    def failed_words(self) -> list[str]:
        return [o.word for o in self.outcomes if not o.ok]

    @property
    def partial(self) -> bool:
        return bool(self.failed_words)

    @property
    def predictions(self) -> dict[str, str]:
        return {cid: lab for o in self.outcomes for cid, lab in o.predictions.items()}


def previous_cluster_counts(path: str | Path) -> dict[str, int]:
    ds = read_dataset(path)
    return {w: len(set(p.values())) for w, p in predictions_by_word(ds).items()}


def execute(
    cfg: RunConfig,
    dataset: Dataset | None = None,
    dists: Distributions | None = None,
    prev_nc: Mapping[str, int] | None = None,
) -> RunResult:
    """Run the whole pipeline in memory."""
    dataset = dataset if dataset is not None else read_dataset(cfg.dataset_path)
    if cfg.needs_gold() and not dataset.has_gold:
        raise ConfigError("this configuration needs gold senses but the dataset lacks them")
    if cfg.select.selector in ("prevnc", "prevnc2") and prev_nc is None:
        if not cfg.select.prev_predictions_path:
            raise ConfigError(f"selector {cfg.select.selector} needs select.prev_predictions_path")
        prev_nc = previous_cluster_counts(cfg.select.prev_predictions_path)
    dists = dists if dists is not None else compute_distributions(cfg, dataset)
    lem = Lemmatizer.from_file(cfg.vectorize.lemmatizer_path or None)

    jobs = []
    for word, occs in dataset.by_word.items():
        target = None
        if prev_nc is not None:
            target = prev_nc.get(word)
        jobs.append((word, occs, {o.context_id: dists[o.context_id] for o in occs}, cfg, lem, target))
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            outcomes = list(pool.map(_job, jobs))
    else:
        outcomes = [_job(j) for j in jobs]
    outcomes.sort(key=lambda o: o.word)

    result = RunResult(cfg, outcomes)
    scored = [o.scores for o in outcomes if o.ok and o.scores is not None]
    if cfg.eval.gold and scored:
        meta = {"partial": result.partial, "failed_words": result.failed_words}
        result.report = aggregate(scored, meta)
        if cfg.eval.max_ari:
            mx = [(o.max_ari, o.scores.num_examples) for o in outcomes if o.ok and o.max_ari is not None]
            if mx:
                vals, sizes = np.array(mx, dtype=float).T
                result.report.aggregate["max_ari"] = float(np.dot(vals, sizes) / sizes.sum())
            for o in outcomes:
                if o.ok and o.max_ari is not None and o.word in result.report.per_word:
                    result.report.per_word[o.word]["max_ari"] = o.max_ari
                    result.report.per_word[o.word]["max_ari_nc"] = o.max_ari_config["nc"]
    if cfg.eval.baselines and dataset.has_gold:
        gold = {w: [o.gold_sense_id for o in occs] for w, occs in dataset.by_word.items() if len(occs) >= 2}
        result.baselines = baselines(gold)
    return result


def write_outputs(result: RunResult, dataset: Dataset, output_dir: str | Path) -> list[Path]:
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = result.config
    written = []

    def put(name, text):
        p = out / name
        p.write_text(text, encoding="utf-8")
        written.append(p)

    write_predictions(dataset, result.predictions, out / "predictions.tsv")
    written.append(out / "predictions.tsv")
    if result.report is not None:
        put("report.json", result.report.to_json() + "\n")
        put("report.csv", result.report.to_csv())
    if result.baselines is not None:
        per_word, per_instance = result.baselines
        put("baselines.json", json.dumps(
            {"one_cluster_per_word": per_word.aggregate, "one_cluster_per_instance": per_instance.aggregate},
            indent=2, sort_keys=True) + "\n")
    if cfg.eval.max_ari:
        rows = [
            {"word": o.word, "max_ari": o.max_ari, **o.max_ari_config}
            for o in result.outcomes if o.ok and o.max_ari is not None
        ]
        put("max_ari.csv", rows_to_csv(rows, ["word", "max_ari", "affinity", "linkage", "nc"]))
        if result.report is not None:
            words = [o.word for o in result.outcomes if o.ok and o.max_ari is not None and o.scores is not None]
            by_word = {o.word: o for o in result.outcomes}
            nc = nc_difference_report(
                [(by_word[w].scores.gold_nc, by_word[w].num_clusters, by_word[w].max_ari_config["nc"]) for w in words],
                words,
            )
            put("nc_difference.csv", nc.to_csv())
    if cfg.analysis.discriminative:
        rows = [r for o in result.outcomes for r in o.discriminative]
        put("discriminative.csv", rows_to_csv(rows, ["word", "sense", "other_sense", "lemma", "freq1", "freq2", "ratio"]))
    if cfg.analysis.listing:
        rows = [r for o in result.outcomes for r in o.listing]
        put("substitutes.csv", rows_to_csv(rows, ["context_id", "combined", "forward", "backward"]))
    if cfg.analysis.dump_representatives:
        lines = [
            json.dumps({"context_id": r.context_id, "substitutes": list(r.substitutes)}, ensure_ascii=False)
            for o in result.outcomes for r in o.representatives
        ]
        put("representatives.jsonl", "".join(x + "\n" for x in lines))
    manifest = {
        "version": __version__,
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "words": len(result.outcomes),
        "failed_words": {o.word: o.error for o in result.outcomes if not o.ok},
        "partial": result.partial,
        "flags": {o.word: o.flags for o in result.outcomes if o.flags},
    }
    put("manifest.json", json.dumps(manifest, indent=2, sort_keys=True, ensure_ascii=False) + "\n")
    put("config.toml", cfg.to_toml())
    return written


def run_pipeline(cfg: RunConfig, output_dir: str | Path | None = None) -> RunResult:
    dataset = read_dataset(cfg.dataset_path)
    result = execute(cfg, dataset)
    write_outputs(result, dataset, output_dir or cfg.output_dir)
    return result


def evaluate_predictions(dataset: Dataset) -> EvalReport:
    """Score the ``predict_sense_id`` column of a dataset against its gold senses."""
    if not dataset.has_gold:
        raise ConfigError("dataset has no gold senses")
    scores = []
    for word, occs in dataset.by_word.items():
        if len(occs) < 2:
            continue
        preds = predictions_by_word(dataset)[word]
        scores.append(evaluate_word(word, [o.gold_sense_id for o in occs], [preds[o.context_id] for o in occs]))
    return aggregate(scores)


# -- grid search ----------------------------------------------------------------

GRID_METRICS = ("ari", "max_ari", "v_measure", "paired_f", "avg", "mean_num_clusters")


@dataclass
class GridResult:
    rows: list[dict]
    keys: list[str]
    objective: str
    best_config: RunConfig | None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, quoting=csv.QUOTE_NONNUMERIC, lineterminator="\n")
        cols = ["rank", "point", *self.keys, *GRID_METRICS, "status"]
        w.writerow(cols)
        for r in self.rows:
            w.writerow([_csv_value(r.get(c, "")) for c in cols])
        return buf.getvalue()


def _csv_value(v):
    if isinstance(v, bool):
        return str(v).lower()
    if v is None:
        return ""
    return v


def grid_search(cfg: RunConfig, grid: GridSpec, dataset: Dataset | None = None) -> GridResult:
    dataset = dataset if dataset is not None else read_dataset(cfg.dataset_path)
    if not dataset.has_gold:
        raise ConfigError("grid search needs gold senses")
    cache: dict[str, Distributions] = {}
    rows = []
    for idx, point in enumerate(grid.points()):
        row: dict = {"point": idx, **point}
        try:
            pcfg = cfg.with_overrides(point)
            pcfg = pcfg.with_overrides({"eval.gold": True, "eval.max_ari": True})
            key = json.dumps(dataclasses.asdict(pcfg.substitutes), sort_keys=True)
            if key not in cache:
                cache[key] = compute_distributions(pcfg, dataset)
            res = execute(pcfg, dataset, cache[key])
            if res.report is None:
                raise DomainError("no word could be evaluated")
            agg = res.report.aggregate
            row.update(
                ari=agg["weighted_ari"],
                max_ari=agg.get("max_ari"),
                v_measure=agg["v_measure"],
                paired_f=agg["paired_f"],
                avg=agg["avg"],
                mean_num_clusters=agg["mean_num_clusters"],
                status="partial" if res.partial else "ok",
                _config=pcfg,
            )
        except (WsiError, ValueError) as exc:
            row.update(status=f"failed: {exc}")
        rows.append(row)

    metric = "ari" if grid.objective == "ari" else "max_ari"

    def sort_key(r):
        v = r.get(metric)
        return (v is None, -(v if v is not None else 0.0), r["point"])

    rows.sort(key=sort_key)
    for rank, r in enumerate(rows, 1):
        r["rank"] = rank
    best = rows[0].get("_config") if rows and rows[0].get(metric) is not None else None
    if best is not None:
        best = best.with_overrides({"eval.max_ari": cfg.eval.max_ari})
    for r in rows:
        r.pop("_config", None)
    return GridResult(rows, list(grid.values), grid.objective, best)


def write_grid(result: GridResult, output_dir: str | Path) -> None:
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "grid.csv").write_text(result.to_csv(), encoding="utf-8")
    if result.best_config is not None:
        (out / "best_config.toml").write_text(result.best_config.to_toml(), encoding="utf-8")


# -- submission comparison --------------------------------------------------------


def _check_ids(gold: Dataset, *others: tuple[str, Dataset]) -> None:
    ids = {o.context_id for o in gold.occurrences}
    problems = []
    for name, ds in others:
        got = {o.context_id for o in ds.occurrences}
        if got != ids:
            missing = sorted(ids - got)
            extra = sorted(got - ids)
            problems.append(f"{name}: missing {missing[:20]} extra {extra[:20]}")
    if problems:
        raise DomainError("context ids differ from gold; " + "; ".join(problems))


def _with_gold(pred: Dataset, gold: Dataset) -> Dataset:
    gold_map = {o.context_id: o.gold_sense_id for o in gold.occurrences}
    occs = [dataclasses.replace(o, gold_sense_id=gold_map[o.context_id]) for o in pred.occurrences]
    rows = [dict(r, gold_sense_id=gold_map[r["context_id"]] or "") for r in pred.rows]
    return Dataset(occs, rows)


def compare_submissions(
    pred_a: Dataset, pred_b: Dataset, gold: Dataset, cfg: RunConfig | None = None
) -> dict:
    """Score two submissions against gold, optionally rerunning our engine with b's counts."""
    if not gold.has_gold:
        raise ConfigError("gold file has no gold senses")
    _check_ids(gold, ("a", pred_a), ("b", pred_b))
    rep_a = evaluate_predictions(_with_gold(pred_a, gold))
    rep_b = evaluate_predictions(_with_gold(pred_b, gold))
    per_word = {}
    for word in sorted(rep_a.per_word):
        a, b = rep_a.per_word[word], rep_b.per_word[word]
        per_word[word] = {
            **{f"a_{k}": a[k] for k in ("ari", "v_measure", "paired_f", "num_clusters")},
            **{f"b_{k}": b[k] for k in ("ari", "v_measure", "paired_f", "num_clusters")},
            **{f"delta_{k}": b[k] - a[k] for k in ("ari", "v_measure", "paired_f", "num_clusters")},
            "gold_nc": a["gold_nc"],
        }
    out = {
        "per_word": per_word,
        "a": rep_a.aggregate,
        "b": rep_b.aggregate,
        "delta": {k: rep_b.aggregate[k] - rep_a.aggregate[k]
                  for k in ("weighted_ari", "v_measure", "paired_f", "avg", "mse_nc", "mean_num_clusters")},
    }
    if cfg is not None:
        b_nc = {w: len(set(p.values())) for w, p in predictions_by_word(pred_b).items()}
        dists = compute_distributions(cfg, gold)
        for selector in ("prevnc", "prevnc2"):
            rcfg = cfg.with_overrides({"select.selector": selector, "eval.gold": True})
            res = execute(rcfg, gold, dists, prev_nc=b_nc)
            out[selector] = {
                "aggregate": res.report.aggregate if res.report else None,
                "per_word_nc": {o.word: o.num_clusters for o in res.outcomes if o.ok},
                "target_nc": b_nc,
                "failed_words": res.failed_words,
            }
    return out


def analyze_predictions(cfg: RunConfig, predictions: Dataset) -> dict[str, str]:
    """Analysis artifacts for an existing predictions file, as CSV texts keyed by file name.

    Sense profiles come from the predicted labels unless the configuration asks
    for gold profiles and gold senses are present.
    """
    dists = compute_distributions(cfg, predictions)
    lem = Lemmatizer.from_file(cfg.vectorize.lemmatizer_path or None)
    preds = predictions_by_word(predictions)
    use_gold = cfg.analysis.profile_source == "gold" and predictions.has_gold
    disc, listing = [], []
    for word, occs in predictions.by_word.items():
        try:
            reps, _ = word_representatives(occs, dists, cfg)
        except WsiError as exc:
            log.warning("word %s skipped: %s", word, exc)
            continue
        by_occ: dict[str, list[Representative]] = {}
        for r in reps:
            by_occ.setdefault(r.context_id, []).append(r)
        senses = {o.context_id: o.gold_sense_id for o in occs} if use_gold else preds[word]
        profiles = build_sense_profiles(word, by_occ, senses, lem, lem(word) if cfg.vectorize.exclude_target else None)
        disc.extend(discriminative_table({word: profiles}, cfg.analysis.min_count, cfg.analysis.top_n))
        listing.extend(_listing(occs, dists, cfg))
    out = {
        "discriminative.csv": rows_to_csv(disc, ["word", "sense", "other_sense", "lemma", "freq1", "freq2", "ratio"]),
        "substitutes.csv": rows_to_csv(listing, ["context_id", "combined", "forward", "backward"]),
    }
    if predictions.has_gold and all(p for w in preds.values() for p in w.values()):
        out["report.csv"] = evaluate_predictions(predictions).to_csv()
    return out
