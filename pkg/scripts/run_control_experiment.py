"""Train the full pipeline on a synthetic corpus and print the change-ratio table.

    python3 scripts/run_control_experiment.py --n-per-emotion 20 --seed 0 [--config cfg.json] [--json out.json]
"""
import argparse
import json
import tempfile
import time

from hiered import pipeline
from hiered.alignment import load_corpus
from hiered.config import load_config, override, to_dict
from hiered.evalmetrics import TargetSpec, control_report
from hiered.predictor import PROSODY_NAMES
from hiered.syncorpus import CorpusSpec, generate


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--config")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--n-per-emotion", type=int, default=20)
    ap.add_argument("--json", help="also write the full report here")
    args = ap.parse_args()

    cfg = override(load_config(args.config), seed=args.seed)
    t0 = time.perf_counter()
    with tempfile.TemporaryDirectory() as d:
        generate(CorpusSpec(n_per_emotion=args.n_per_emotion, seed=cfg.seed), d)
        utts = load_corpus(d)
        feats = pipeline.corpus_features(utts, cfg.features)
    r = cfg.ranking
    rankers = pipeline.train_rankers(feats, cfg.emotions, r.C, r.epochs, r.scope, cfg.seed)
    heds = pipeline.extract_heds(utts, feats, rankers)
    p = cfg.predictor
    model, losses = pipeline.fit_predictor(utts, feats, heds, p.epochs, p.lr, cfg.seed, p.momentum, p.weight_decay)
    c = cfg.control
    rep = control_report(model, utts, TargetSpec(n_words=c.n_words, n_phonemes=c.n_phonemes, seed=cfg.seed),
                         c.lo, c.hi)
    print(f"{len(utts)} utterances, final loss {losses[-1]:.4f}, {time.perf_counter() - t0:.1f}s")

    head = f"{'emotion':<10}{'level':<14}" + "".join(f"{n:>13}" for n in PROSODY_NAMES)
    print(head)
    print("-" * len(head))
    for emotion, per_level in rep["ratios"].items():
        for level, dims in per_level.items():
            cells = "".join(f"{'n/a':>13}" if dims[n] is None else f"{dims[n]:>+13.4f}" for n in PROSODY_NAMES)
            print(f"{emotion:<10}{level:<14}{cells}")

    if args.json:
        rep["config"] = to_dict(cfg)
        with open(args.json, "w") as fh:
            json.dump(rep, fh, indent=1, sort_keys=True)


if __name__ == "__main__":
    main()
