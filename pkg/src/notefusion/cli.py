"""Command-line entry point: synth, describe, train, evaluate, predict, explain."""

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import evaluation, explain, synth
from ._io import dump_json, write_atomic
from .config import DEFAULT_METHODS, FORMAT_VERSION, RunConfig
from .corpus import NOTE_TYPES, CorpusConfig, load_data_dir
from .errors import DataError
from .pipeline import METHODS, TrainedPipeline, train

log = logging.getLogger("notefusion")


def _add_common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("pipeline options")
    g.add_argument("--run-config", help="JSON file holding a resolved config (or any output file embedding one)")
    g.add_argument("--seed", type=int)
    g.add_argument("--stopwords", help="stopword file, one word per line")
    g.add_argument("--no-cutoff", dest="apply_cutoff", action="store_const", const=False,
                   help="keep notes dated after the discharge date")
    g.add_argument("--cutoff-note-types", nargs="+", choices=NOTE_TYPES)
    g.add_argument("--lda-topics", type=int)
    g.add_argument("--lda-alpha", type=float, help="default 5 / topics")
    g.add_argument("--lda-beta", type=float)
    g.add_argument("--lda-iterations", type=int)
    g.add_argument("--lda-infer-iterations", type=int)
    g.add_argument("--tfidf-min-df", type=int)
    g.add_argument("--tfidf-max-df", type=float)
    g.add_argument("--lambda", dest="lam", type=float, help="L2 strength")
    g.add_argument("--tol", type=float)
    g.add_argument("--max-iter", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="notefusion", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--config", help="synth config JSON")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--n-patients", type=int)

    p = sub.add_parser("describe", help="modality coverage table")
    p.add_argument("--data", required=True)
    p.add_argument("--out")

    p = sub.add_parser("train", help="fit one method on a whole dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--method", choices=sorted(METHODS), default="tfidf_lda_avgsig")
    p.add_argument("--out", required=True, help="model file to write")
    _add_common(p)

    p = sub.add_parser("evaluate", help="k-fold cross-validated c-statistics")
    p.add_argument("--data", required=True)
    p.add_argument("--methods", nargs="+", choices=sorted(METHODS))
    p.add_argument("--k", dest="k_folds", type=int)
    p.add_argument("--unstratified", dest="stratified", action="store_const", const=False)
    p.add_argument("--jobs", type=int)
    p.add_argument("--out", required=True)
    _add_common(p)

    p = sub.add_parser("predict", help="score patients with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="scores CSV to write")

    p = sub.add_parser("explain", help="discriminative-index feature importance")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--top-k", type=int)
    p.add_argument("--bar-data", action="store_true", help="also write per-modality bar-chart CSVs")
    p.add_argument("--out", required=True)
    return parser


_FLAT = ("seed", "stopwords", "apply_cutoff", "cutoff_note_types", "tfidf_min_df", "tfidf_max_df",
         "k_folds", "stratified", "jobs", "methods", "top_k")
_LDA = {"lda_topics": "topics", "lda_alpha": "alpha", "lda_beta": "beta",
        "lda_iterations": "iterations", "lda_infer_iterations": "infer_iterations"}
_LOGREG = {"lam": "lam", "tol": "tol", "max_iter": "max_iter"}


def resolve_config(args) -> RunConfig:
    """Defaults, then an embedded config file, then explicit flags."""
    cfg = RunConfig()
    path = getattr(args, "run_config", None)
    if path:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        cfg = RunConfig.from_dict(doc.get("config", doc))
    for key in _FLAT:
        val = getattr(args, key, None)
        if val is not None:
            setattr(cfg, key, tuple(val) if key == "cutoff_note_types" else val)
    for key, attr in _LDA.items():
        val = getattr(args, key, None)
        if val is not None:
            setattr(cfg.lda, attr, val)
    for key, attr in _LOGREG.items():
        val = getattr(args, key, None)
        if val is not None:
            setattr(cfg.logreg, attr, val)
    cfg.subcommand = args.subcommand
    for key in ("data", "out", "model"):
        if getattr(args, key, None) is not None:
            setattr(cfg, key, getattr(args, key))
    if cfg.lda.topics < 1:
        raise DataError("--lda-topics must be >= 1")
    return cfg


def _corpus(cfg: RunConfig):
    ccfg = CorpusConfig(stopwords_path=cfg.stopwords, apply_cutoff=cfg.apply_cutoff,
                        cutoff_note_types=tuple(cfg.cutoff_note_types))
    corpus = load_data_dir(cfg.data, ccfg)
    if corpus.dropped_note_patients:
        log.warning("%d patient(s) appear only in the notes file and were dropped",
                    corpus.dropped_note_patients)
    return corpus


def cmd_synth(args) -> None:
    cfg = synth.SynthConfig()
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            cfg = synth.SynthConfig.from_dict(json.load(fh))
    if args.seed is not None:
        cfg.seed = args.seed
    if args.n_patients is not None:
        cfg.n_patients = args.n_patients
    synth.write_dataset(cfg, args.out)
    print(synth.format_describe(synth.describe(args.out)), end="")


def cmd_describe(args) -> None:
    rows = synth.describe(args.data)
    table = synth.format_describe(rows)
    print(table, end="")
    if args.out:
        out = Path(args.out)
        write_atomic(out / "describe.txt", table)
        write_atomic(out / "describe.json", dump_json(
            {"format_version": FORMAT_VERSION, "kind": "notefusion-describe",
             "config": {"subcommand": "describe", "data": args.data, "out": args.out}, "rows": rows}))


def cmd_train(args) -> None:
    cfg = resolve_config(args)
    corpus = _corpus(cfg)
    trained = train(corpus, args.method, cfg)
    trained.save(args.out)
    print(f"trained {args.method} on {len(corpus.patients)} patients -> {args.out}")


def cmd_evaluate(args) -> None:
    cfg = resolve_config(args)
    if not cfg.methods:
        cfg.methods = list(DEFAULT_METHODS)
    corpus = _corpus(cfg)
    result = evaluation.cross_validate(corpus, cfg.methods, cfg)
    table = evaluation.format_table(result.reports)
    out = Path(args.out)
    write_atomic(out / "report.json", dump_json(evaluation.report_document(result, cfg)))
    write_atomic(out / "table.txt", table)
    print(table, end="")


def _check_columns(trained: TrainedPipeline, corpus) -> None:
    enc = trained.featurizer.encoder
    if enc is not None and list(enc.columns) != list(corpus.structured_columns):
        raise DataError("structured columns of the data do not match the model's training columns")


def _pipeline_config(trained: TrainedPipeline, args) -> RunConfig:
    cfg = trained.config
    cfg.subcommand, cfg.data, cfg.out, cfg.model = args.subcommand, args.data, args.out, args.model
    return cfg


def cmd_predict(args) -> None:
    trained = TrainedPipeline.load(args.model)
    cfg = _pipeline_config(trained, args)
    corpus = _corpus(cfg)
    _check_columns(trained, corpus)
    probs = trained.predict(corpus.patients)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["patient_id", "probability"])
    for p, prob in zip(corpus.patients, probs):
        w.writerow([p.patient_id, repr(float(prob))])
    write_atomic(args.out, buf.getvalue())
    write_atomic(f"{args.out}.meta.json", dump_json(
        {"format_version": FORMAT_VERSION, "kind": "notefusion-scores", "method": trained.method,
         "config": cfg.to_dict()}))
    print(f"wrote {len(corpus.patients)} scores -> {args.out}")


def cmd_explain(args) -> None:
    trained = TrainedPipeline.load(args.model)
    cfg = _pipeline_config(trained, args)
    if args.top_k is not None:
        cfg.top_k = args.top_k
    corpus = _corpus(cfg)
    _check_columns(trained, corpus)
    datasets = trained.datasets(corpus.patients)
    reports = explain.explain_ensemble(trained.model, datasets, np.asarray(corpus.labels))
    out = Path(args.out)
    doc = {"format_version": FORMAT_VERSION, "kind": "notefusion-explain", "method": trained.method,
           "config": cfg.to_dict(), "modalities": {}}
    text = []
    for name, rep in reports.items():
        if isinstance(rep, DataError):
            doc["modalities"][name] = {"error": str(rep)}
            text.append(f"[{name}]\nerror: {rep}\n")
            continue
        doc["modalities"][name] = rep.to_dict(cfg.top_k)
        text.append(explain.format_table(rep, cfg.top_k))
        if args.bar_data:
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(["feature", "score"])
            for feat, score in explain.top_features(rep, list(rep.feature_names), cfg.top_k):
                w.writerow([feat, repr(score)])
            write_atomic(out / "bars" / f"{name.replace(':', '_')}.csv", buf.getvalue())
    table = "\n".join(text)
    write_atomic(out / "explain.json", dump_json(doc))
    write_atomic(out / "explain.txt", table)
    print(table, end="")


COMMANDS = {"synth": cmd_synth, "describe": cmd_describe, "train": cmd_train,
            "evaluate": cmd_evaluate, "predict": cmd_predict, "explain": cmd_explain}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.subcommand](args)
    except (DataError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())
