"""Command-line entry point.

Subcommands cover the full pipeline: ingest, annotate, stats, split,
train-baseline, eval-clf, agreement, deid, and report. Settings resolve
flag > config file > built-in default; every output carries a provenance
header (tool version, config hash, seed) so runs are reproducible
byte-for-byte. Exit codes: 0 success, 1 usage error, 2 data error, 3
endpoint error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__, agreement, annotate, corpus, deid, metrics, scorer
from .errors import DataError, EndpointError, FileUnreadable, FormatError, PrivsenseError

DEFAULT_SEED = 0  # explicit constant; never derived from the clock
DEFAULT_FRACTIONS = (0.9, 0.05, 0.05)


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the CLI contract wants 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def load_config(path) -> dict[str, str]:
    """Flat key = value config file; # starts a comment."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise FileUnreadable(f"cannot read config {path}: {e}") from e
    out: dict[str, str] = {}
    for i, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"expected key = value, got {line!r}", row=i)
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


class Settings:
    """Resolves option values with flag > config > default precedence."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.config = load_config(args.config) if getattr(args, "config", None) else {}
        self.used: dict[str, object] = {}

    def get(self, key: str, default=None, cast=None):
        value = getattr(self.args, key.replace("-", "_"), None)
        if value is None:
            value = self.config.get(key, default)
        if value is not None and cast is not None:
            value = cast(value)
        self.used[key] = value
        return value

    @property
    def seed(self) -> int:
        return int(self.get("seed", DEFAULT_SEED, int))

    _DESTINATION_KEYS = frozenset({"out", "log", "pred-out"})

    def provenance(self, include_timestamp: bool = False) -> dict:
        # destination paths do not influence results, so the config hash
        # must not depend on them
        effective = {
            k: v for k, v in sorted(self.used.items()) if k not in self._DESTINATION_KEYS
        }
        digest = hashlib.sha256(
            json.dumps(effective, sort_keys=True, default=str).encode("utf-8")
        ).hexdigest()
        prov = {"tool": f"privsense {__version__}", "config_sha256": digest, "seed": self.seed}
        if include_timestamp:
            prov["generated_at"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
        return prov


def _write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _require(settings: Settings, key: str, cast=None):
    value = settings.get(key, None, cast)
    if value is None:
        raise DataError(f"missing required option --{key} (or config key {key})")
    return value


def cmd_ingest(args) -> int:
    settings = Settings(args)
    records = corpus.ingest(
        _require(settings, "input"),
        dataset=_require(settings, "dataset"),
        format=settings.get("format", "jsonl"),
    )
    sample_n = settings.get("sample", None, int)
    if sample_n:
        exclude_path = settings.get("exclude")
        exclude = corpus.read_exclusion_list(exclude_path) if exclude_path else set()
        records = corpus.sample_excluding(records, sample_n, exclude, settings.seed)
    out = _require(settings, "out")
    corpus.write_records(out, records, provenance=settings.provenance())
    print(f"ingested {len(records)} records -> {out}")
    return 0


def cmd_annotate(args) -> int:
    settings = Settings(args)
    records = corpus.read_records(_require(settings, "records"))
    config = annotate.TeacherConfig(
        endpoint_url=_require(settings, "endpoint"),
        model_name=_require(settings, "model"),
        temperature=float(settings.get("temperature", 0.0)),
        max_retries=int(settings.get("max-retries", 3)),
        parallelism=int(settings.get("parallelism", 4)),
        cache_path=settings.get("cache", "teacher_cache.jsonl"),
        api_key_env=settings.get("api-key-env", "TEACHER_API_KEY"),
        response_path=settings.get("response-path", "choices.0.message.content"),
        votes=int(settings.get("votes", 1)),
    )
    results = annotate.annotate_batch(records, config)
    out = _require(settings, "out")
    labeled = annotate.apply_annotations(records, results)
    corpus.write_records(out, labeled, provenance=settings.provenance())
    log_path = settings.get("log", str(out) + ".log.jsonl")
    annotate.write_results(log_path, results, provenance=settings.provenance())
    n_ok = sum(1 for r in results if r.status == annotate.STATUS_OK)
    print(f"annotated {n_ok}/{len(results)} records -> {out} (log: {log_path})")
    return 0 if n_ok else 2


def cmd_stats(args) -> int:
    settings = Settings(args)
    records = corpus.read_records(_require(settings, "records"))
    stats = corpus.compute_stats(records)
    out = _require(settings, "out")
    _write_json(
        out,
        {"_provenance": settings.provenance(), "stats": [s.to_dict() for s in stats]},
    )
    print(corpus.render_stats_table(stats))
    return 0


def cmd_split(args) -> int:
    settings = Settings(args)
    records = corpus.read_records(_require(settings, "records"))
    raw = settings.get("fractions", None)
    fractions = (
        tuple(float(x) for x in str(raw).split(",")) if raw is not None else DEFAULT_FRACTIONS
    )
    assigned = corpus.split(records, fractions, settings.seed)
    out = _require(settings, "out")
    corpus.write_records(out, assigned, provenance=settings.provenance())
    sizes = {name: sum(1 for r in assigned if r.split == name) for name in corpus.SPLITS}
    print(f"split {len(assigned)} records {sizes} -> {out}")
    return 0


def _split_records(records, name):
    return [r for r in records if r.split == name]


def cmd_train_baseline(args) -> int:
    settings = Settings(args)
    records = corpus.read_records(_require(settings, "records"))
    train = _split_records(records, "train")
    val = _split_records(records, "val")
    if not train:
        raise DataError("no records with split=train; run `privsense split` first")
    config = scorer.TrainConfig(
        epochs=int(settings.get("epochs", 10)),
        lr=float(settings.get("lr", 0.5)),
        seed=settings.seed,
        feature_dim=int(settings.get("feature-dim", 2**16)),
    )
    model = scorer.train_baseline(train, val, config)
    out = _require(settings, "out")
    model.save(out)
    best = model.val_macro_f1_[model.best_epoch_] if model.val_macro_f1_ else float("nan")
    print(f"trained on {len(train)} records (best val macro F1 {best:.3f}) -> {out}")
    return 0


def cmd_eval_clf(args) -> int:
    settings = Settings(args)
    pred_path = settings.get("pred")
    if pred_path:
        gold, pred = metrics.read_predictions(pred_path)
        ids = None
    else:
        model = scorer.BaselineScorer.load(_require(settings, "model"))
        records = corpus.read_records(_require(settings, "records"))
        eval_split = settings.get("eval-split", "test")
        subset = _split_records(records, eval_split) or records
        missing = [r.id for r in subset if r.teacher_rating is None]
        if missing:
            raise DataError(f"{len(missing)} records lack gold ratings (e.g. {missing[0]})")
        gold = [int(r.teacher_rating) for r in subset]
        pred = [int(p) for p in model.predict([r.text for r in subset])]
        ids = [r.id for r in subset]

    report = metrics.evaluate(gold, pred)
    shares = [gold.count(c) / len(gold) for c in range(1, 6)]
    payload = {
        "_provenance": settings.provenance(),
        "n": len(gold),
        "evaluated": report.to_dict(),
        "baselines": {
            "majority": metrics.majority_baseline(shares).to_dict(),
            "random": metrics.random_baseline(shares).to_dict(),
        },
    }
    out = _require(settings, "out")
    _write_json(out, payload)
    pred_out = settings.get("pred-out")
    if pred_out and ids is not None:
        with Path(pred_out).open("w", encoding="utf-8") as fh:
            fh.write(json.dumps({"_provenance": settings.provenance()}, sort_keys=True) + "\n")
            for i, g, p in zip(ids, gold, pred):
                fh.write(json.dumps({"id": i, "gold": g, "pred": p}, sort_keys=True) + "\n")
    print(
        metrics.render_report_table(
            {
                "evaluated": report,
                "majority": metrics.majority_baseline(shares),
                "random": metrics.random_baseline(shares),
            }
        )
    )
    return 0


def cmd_agreement(args) -> int:
    settings = Settings(args)
    matrix = agreement.read_matrix_csv(_require(settings, "matrix"))
    metric = settings.get("metric")
    vs_rater = settings.get("vs-rater")
    vs_average = settings.get("vs-average")
    out = _require(settings, "out")

    if vs_average:
        # averaged references are non-integer, so default to interval here
        metric = metric or "interval"
        model_col = {
            item: v
            for item, v in zip(matrix.item_ids, matrix.column(vs_average))
            if v == v  # drop NaN
        }
        others = [r for r in matrix.rater_ids if r != vs_average]
        reference = {}
        for i, item in enumerate(matrix.item_ids):
            vals = [matrix.values[i, matrix.rater_ids.index(r)] for r in others]
            vals = [v for v in vals if v == v]
            if vals:
                reference[item] = sum(vals) / len(vals)
        result = agreement.alpha_vs_reference(model_col, reference, metric=metric)
        agreement.write_alpha_json(out, result, provenance=settings.provenance())
        print(f"alpha[{result.metric}] vs average of others = {result.alpha:.4f}")
    elif vs_rater:
        metric = metric or "ordinal"
        model_col = {
            item: v for item, v in zip(matrix.item_ids, matrix.column(vs_rater)) if v == v
        }
        rest = agreement.RatingMatrix(
            item_ids=matrix.item_ids,
            rater_ids=[r for r in matrix.rater_ids if r != vs_rater],
            values=matrix.values[:, [j for j, r in enumerate(matrix.rater_ids) if r != vs_rater]],
        )
        suite = agreement.pairwise_alpha_suite(model_col, rest, metric=metric)
        payload = {"_provenance": settings.provenance(), "metric": metric, **suite.to_dict()}
        _write_json(out, payload)
        print(
            f"pairwise alpha[{metric}] vs {len(suite.per_rater)} raters: "
            f"mean {suite.mean:.4f} (std {suite.std:.4f}, skipped {len(suite.skipped)})"
        )
    else:
        metric = metric or "ordinal"
        result = agreement.krippendorff_alpha(matrix, metric=metric)
        agreement.write_alpha_json(out, result, provenance=settings.provenance())
        print(f"alpha[{result.metric}] = {result.alpha:.4f} (n_pairable {result.n_pairable})")
    return 0


def _build_scorer(settings: Settings):
    choice = str(_require(settings, "scorer"))
    if choice == "baseline":
        return scorer.BaselineScorer.load(_require(settings, "model"))
    if choice.startswith("remote:"):
        return scorer.RemoteScorer(choice.split(":", 1)[1])
    raise DataError(f"unknown scorer {choice!r}; use baseline or remote:URL")


def cmd_deid(args) -> int:
    settings = Settings(args)
    docs = deid.read_standoff(_require(settings, "docs"))
    sc = _build_scorer(settings)
    reports = deid.evaluate_conditions(
        docs,
        sc,
        fraction=float(settings.get("fraction", 0.3)),
        seed=settings.seed,
    )
    out = _require(settings, "out")
    _write_json(
        out,
        {"_provenance": settings.provenance(), "reports": [r.to_dict() for r in reports]},
    )
    print(deid.render_deid_table(reports))
    return 0


def cmd_report(args) -> int:
    settings = Settings(args)
    sections = []
    stats_path = settings.get("stats")
    if stats_path:
        payload = json.loads(Path(stats_path).read_text(encoding="utf-8"))
        stats = [
            corpus.DatasetStats(**{**s, "class_shares": tuple(s["class_shares"])})
            for s in payload["stats"]
        ]
        sections.append("## Corpus statistics\n\n" + corpus.render_stats_table(stats))
    clf_path = settings.get("clf")
    if clf_path:
        payload = json.loads(Path(clf_path).read_text(encoding="utf-8"))
        reports = {"evaluated": _report_from_dict(payload["evaluated"])}
        for name, d in payload.get("baselines", {}).items():
            reports[name] = _report_from_dict(d)
        sections.append("## Classification\n\n" + metrics.render_report_table(reports))
    deid_path = settings.get("deid")
    if deid_path:
        payload = json.loads(Path(deid_path).read_text(encoding="utf-8"))
        reports = [deid.DeidReport(**r) for r in payload["reports"]]
        sections.append("## De-identification\n\n" + deid.render_deid_table(reports))
    if not sections:
        raise DataError("nothing to report: pass --stats, --clf, and/or --deid")
    prov = settings.provenance(include_timestamp=True)
    header = f"<!-- {prov['tool']} config={prov['config_sha256'][:12]} seed={prov['seed']} generated={prov['generated_at']} -->"
    text = "\n\n".join([header, "# Privacy evaluation report"] + sections) + "\n"
    out = _require(settings, "out")
    Path(out).write_text(text, encoding="utf-8")
    print(f"report -> {out}")
    return 0


def _report_from_dict(d: dict) -> metrics.MetricReport:
    return metrics.MetricReport(
        accuracy=d["accuracy"],
        macro_f1=d["macro_f1"],
        per_class_f1=d["per_class_f1"],
        mae=d["mae"],
        adjacent_error_share=d["adjacent_error_share"],
    )


def build_parser() -> _Parser:
    parser = _Parser(prog="privsense", description=__doc__)
    parser.add_argument("--version", action="version", version=f"privsense {__version__}")

    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="random seed (default 0)")
    common.add_argument("--config", default=None, help="flat key = value config file")
    common.add_argument("--out", default=None, help="output path")

    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("ingest", parents=[common], help="read raw text into the record format")
    p.add_argument("--input")
    p.add_argument("--dataset")
    p.add_argument("--format", choices=["jsonl", "csv", "plain-lines", "lines"], default=None)
    p.add_argument("--sample", type=int, default=None, help="sample N records after ingest")
    p.add_argument("--exclude", default=None, help="file of normalized-text hashes to skip")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("annotate", parents=[common], help="teacher-annotate records")
    p.add_argument("--records")
    p.add_argument("--endpoint", help="chat-completion URL, or stub: for the local stub")
    p.add_argument("--model")
    p.add_argument("--cache", default=None)
    p.add_argument("--parallelism", type=int, default=None)
    p.add_argument("--max-retries", type=int, default=None)
    p.add_argument("--temperature", type=float, default=None)
    p.add_argument("--api-key-env", default=None)
    p.add_argument("--response-path", default=None)
    p.add_argument("--votes", type=int, default=None)
    p.add_argument("--log", default=None, help="annotation results log (JSONL)")
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("stats", parents=[common], help="per-dataset privacy statistics")
    p.add_argument("--records")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("split", parents=[common], help="assign train/val/test splits")
    p.add_argument("--records")
    p.add_argument("--fractions", default=None, help="e.g. 0.9,0.05,0.05")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train-baseline", parents=[common], help="train the native scorer")
    p.add_argument("--records", help="records with split assignments and ratings")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--feature-dim", type=int, default=None)
    p.set_defaults(func=cmd_train_baseline)

    p = sub.add_parser("eval-clf", parents=[common], help="ordinal classification metrics")
    p.add_argument("--pred", default=None, help="JSONL of {id, gold, pred}")
    p.add_argument("--model", default=None, help="model file (to generate predictions)")
    p.add_argument("--records", default=None)
    p.add_argument("--eval-split", default=None)
    p.add_argument("--pred-out", default=None)
    p.set_defaults(func=cmd_eval_clf)

    p = sub.add_parser("agreement", parents=[common], help="Krippendorff's alpha")
    p.add_argument("--matrix", help="long-form CSV: item_id,rater_id,value")
    p.add_argument("--metric", choices=list(agreement.METRICS), default=None)
    p.add_argument("--vs-rater", default=None, help="pairwise suite: this rater vs all others")
    p.add_argument("--vs-average", default=None, help="this rater vs the average of the others")
    p.set_defaults(func=cmd_agreement)

    p = sub.add_parser("deid", parents=[common], help="masking-condition privacy reduction")
    p.add_argument("--docs", help="standoff JSON (native or TAB export)")
    p.add_argument("--scorer", help="baseline or remote:URL")
    p.add_argument("--model", default=None, help="baseline model file")
    p.add_argument("--fraction", type=float, default=None)
    p.set_defaults(func=cmd_deid)

    p = sub.add_parser("report", parents=[common], help="render Markdown tables")
    p.add_argument("--stats", default=None)
    p.add_argument("--clf", default=None)
    p.add_argument("--deid", default=None)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if not getattr(args, "command", None):
        parser.print_help(sys.stderr)
        return 1
    try:
        return args.func(args)
    except EndpointError as e:
        print(f"endpoint error: {e}", file=sys.stderr)
        return 3
    except (PrivsenseError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
