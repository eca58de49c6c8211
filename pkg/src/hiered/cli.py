"""
Command-line entry point.

Every subcommand reads and writes only the paths given on its command line.
Exit codes: 0 success, 1 invalid input, 2 I/O failure, 3 numerical failure;
failures print one JSON object on stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from hiered import pipeline
from hiered.alignment import load_corpus, parse_alignment
from hiered.config import PipelineConfig, load_config, override, to_dict
from hiered.control import apply, load_edits, render
from hiered.errors import NumericalError, ValidationError
from hiered.evalmetrics import REPORT_LEVELS, TargetSpec, control_report
from hiered.features import from_table, load_feature_csv, write_feature_csv
from hiered.hed import load_hed, save_hed
from hiered.predictor import PROSODY_NAMES, load_model, predict_hed, save_model
from hiered.ranking import load_ranker, save_ranker
from hiered.syncorpus import CorpusSpec, generate

EXIT_OK, EXIT_INVALID, EXIT_IO, EXIT_NUMERICAL = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    # usage errors are invalid input, not argparse's default exit 2
    def error(self, message):
        raise ValidationError(f"{self.prog}: {message}")


def _dump(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def _config(args) -> PipelineConfig:
    cfg = load_config(args.config)
    return override(cfg, **{
        "seed": args.seed,
        "features.frame_ms": getattr(args, "frame_ms", None),
        "features.hop_ms": getattr(args, "hop_ms", None),
        "ranking.C": getattr(args, "C", None),
        "ranking.epochs": getattr(args, "ranker_epochs", None),
        "ranking.scope": getattr(args, "scope", None),
        "predictor.lr": getattr(args, "lr", None),
        "predictor.epochs": getattr(args, "epochs", None),
        "predictor.weight_decay": getattr(args, "weight_decay", None),
        "control.n_words": getattr(args, "n_words", None),
        "control.n_phonemes": getattr(args, "n_phonemes", None),
        "control.lo": getattr(args, "lo", None),
        "control.hi": getattr(args, "hi", None),
    })


def _corpus_feats(corpus_dir, features_csv):
    utts = load_corpus(corpus_dir)
    table = load_feature_csv(features_csv)
    return utts, [from_table(u, table) for u in utts]


def _hed_path(hed_dir, uid):
    return Path(hed_dir) / f"{uid}.hed.json"


def _prosody_doc(prosody: np.ndarray) -> dict:
    return {name: [float(f"{v:.9g}") for v in prosody[:, d]] for d, name in enumerate(PROSODY_NAMES)}


def cmd_gen_corpus(args, cfg):
    spec = CorpusSpec(n_per_emotion=args.n_per_emotion, seed=cfg.seed)
    utts = generate(spec, args.out)
    print(f"wrote {len(utts)} utterances to {args.out}")


def cmd_extract_features(args, cfg):
    utts = load_corpus(args.corpus)
    feats = pipeline.corpus_features(utts, cfg.features)
    write_feature_csv(args.out, [kv for f in feats for kv in f.items()])
    print(f"wrote features of {len(feats)} utterances to {args.out}")


def cmd_train_ranker(args, cfg):
    _, feats = _corpus_feats(args.corpus, args.features)
    emotions = args.emotion or list(cfg.emotions)
    rankers = pipeline.train_rankers(feats, emotions, cfg.ranking.C, cfg.ranking.epochs,
                                     cfg.ranking.scope, cfg.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for emotion, r in rankers.items():
        save_ranker(r, out / f"{emotion}.json")
    print(f"wrote {len(rankers)} rankers to {out}")


def cmd_extract_hed(args, cfg):
    utts, feats = _corpus_feats(args.corpus, args.features)
    paths = sorted(Path(args.rankers).glob("*.json"))
    if not paths:
        raise ValidationError(f"no ranker files in {args.rankers}")
    rankers = [load_ranker(p) for p in paths]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for hed in pipeline.extract_heds(utts, feats, rankers):
        save_hed(hed, _hed_path(out, hed.id))
    print(f"wrote {len(utts)} HED files to {out}")


def cmd_train_predictor(args, cfg):
    utts, feats = _corpus_feats(args.corpus, args.features)
    heds = [load_hed(_hed_path(args.hed, u.id)) for u in utts]
    p = cfg.predictor
    model, losses = pipeline.fit_predictor(utts, feats, heds, p.epochs, p.lr, cfg.seed,
                                           p.momentum, p.weight_decay)
    save_model(model, args.out)
    if args.log:
        Path(args.log).write_text("epoch,loss\n" + "".join(f"{i},{v!r}\n" for i, v in enumerate(losses)))
    final = f"{losses[-1]:.6g}" if losses else "n/a"
    print(f"trained {p.epochs} epochs, final loss {final}; wrote {args.out}")


def _predict_doc(m, u, edits=None):
    tokens = m.encode([p.symbol for p in u.phonemes])
    word_of = np.asarray(u.word_index_per_phoneme())
    hed = predict_hed(m, tokens, word_of, u.id)
    doc = {"id": u.id, "phonemes": [p.symbol for p in u.phonemes], "word_of": word_of.tolist(),
           "hed": hed.to_dict(), "prosody": _prosody_doc(render(m, tokens, word_of, hed))}
    if edits is not None:
        edited = apply(hed, edits)
        doc["edits"] = [e.to_dict() for e in edits]
        doc["edited_hed"] = edited.to_dict()
        doc["edited_prosody"] = _prosody_doc(render(m, tokens, word_of, edited))
    return doc


def cmd_predict(args, cfg):
    m = load_model(args.model)
    _dump(_predict_doc(m, parse_alignment(args.alignment)), args.out)
    print(f"wrote {args.out}")


def cmd_control(args, cfg):
    m = load_model(args.model)
    _dump(_predict_doc(m, parse_alignment(args.alignment), load_edits(args.edits)), args.out)
    print(f"wrote {args.out}")


def cmd_report(args, cfg):
    m = load_model(args.model)
    utts = pipeline.labelled(load_corpus(args.corpus)) if args.labelled_only else load_corpus(args.corpus)
    c = cfg.control
    spec = TargetSpec(tuple(args.levels), c.n_words, c.n_phonemes, cfg.seed)
    report = control_report(m, utts, spec, c.lo, c.hi)
    report["config"] = to_dict(cfg)
    _dump(report, args.out)
    print(f"wrote {args.out}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON pipeline config; flags override it")
    common.add_argument("--seed", type=int, help="seed for every random draw")

    parser = _Parser(prog="hiered", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_):
        p = sub.add_parser(name, parents=[common], help=help_, description=help_)
        p.set_defaults(func=func)
        return p

    p = add("gen-corpus", cmd_gen_corpus, "Write a synthetic tone corpus (WAV + alignment JSON).")
    p.add_argument("--out", required=True)
    p.add_argument("--n-per-emotion", type=int, default=20)

    p = add("extract-features", cmd_extract_features, "Write per-segment acoustic features as CSV.")
    p.add_argument("--corpus", required=True, help="directory of alignment JSON files")
    p.add_argument("--out", required=True)
    p.add_argument("--frame-ms", type=float)
    p.add_argument("--hop-ms", type=float)

    p = add("train-ranker", cmd_train_ranker, "Train one ranking function per emotion.")
    p.add_argument("--corpus", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True, help="directory receiving <emotion>.json")
    p.add_argument("--emotion", action="append", help="repeatable; default: config emotions")
    p.add_argument("--C", type=float)
    p.add_argument("--epochs", dest="ranker_epochs", type=int)
    p.add_argument("--scope", help="pooled, phoneme, word or utterance")

    p = add("extract-hed", cmd_extract_hed, "Score every segment with the trained rankers.")
    p.add_argument("--corpus", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--rankers", required=True, help="directory of ranker JSON files")
    p.add_argument("--out", required=True, help="directory receiving <id>.hed.json")

    p = add("train-predictor", cmd_train_predictor, "Train the ED and prosody predictor.")
    p.add_argument("--corpus", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--hed", required=True, help="directory of HED JSON files")
    p.add_argument("--out", required=True)
    p.add_argument("--log", help="optional CSV of per-epoch loss")
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--weight-decay", type=float)

    p = add("predict", cmd_predict, "Predict hierarchical ED and prosody for one alignment.")
    p.add_argument("--model", required=True)
    p.add_argument("--alignment", required=True)
    p.add_argument("--out", required=True)

    p = add("control", cmd_control, "Apply ED edits to a prediction and re-render prosody.")
    p.add_argument("--model", required=True)
    p.add_argument("--alignment", required=True)
    p.add_argument("--edits", required=True)
    p.add_argument("--out", required=True)

    p = add("report", cmd_report, "Average prosody change ratios under intensity sweeps.")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--lo", type=float)
    p.add_argument("--hi", type=float)
    p.add_argument("--n-words", type=int)
    p.add_argument("--n-phonemes", type=int)
    p.add_argument("--levels", nargs="+", choices=REPORT_LEVELS, default=list(REPORT_LEVELS))
    p.add_argument("--labelled-only", action="store_true", help="skip unlabelled utterances")
    return parser


def _fail(code: int, exc: BaseException) -> int:
    print(json.dumps({"error": type(exc).__name__, "exit": code, "message": str(exc)}), file=sys.stderr)
    return code


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        args.func(args, _config(args))
    except SystemExit as e:  # --help
        return int(e.code or 0)
    except NumericalError as e:
        return _fail(EXIT_NUMERICAL, e)
    except (ValidationError, ValueError, KeyError) as e:
        return _fail(EXIT_INVALID, e)
    except OSError as e:
        return _fail(EXIT_IO, e)
    except (FloatingPointError, ArithmeticError) as e:
        return _fail(EXIT_NUMERICAL, e)
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
