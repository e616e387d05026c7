"""Command-line driver: harvest -> train -> evaluate -> analyze -> match-idioms.

Exit codes: 0 success, 1 usage error, 2 data error.  All randomness flows
from --seed; per-stage seeds are derived by stable hashing of (seed, stage).
"""

import argparse
import hashlib
import json
import logging
import os
import sys

import numpy as np

from . import analysis, chip, evaluation, probes, store as store_mod, trees
from .errors import FormatError, PhrasecompError

log = logging.getLogger("phrasecomp")

SCORE_COLUMNS = ("phrase_id", "tree_type", "cosine_score", "parent_len")


def stage_seed(seed, stage):
    digest = hashlib.sha256(f"{seed}:{stage}".encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little")


def write_scores(records, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(SCORE_COLUMNS) + "\n")
        for rec in records:
            fh.write(
                f"{rec.phrase_id}\t{rec.tree_type}\t{rec.cosine_score!r}\t{rec.parent_len}\n"
            )


def read_scores(path):
    records = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if tuple(header) != SCORE_COLUMNS:
            raise FormatError(f"unexpected scores header: {header}")
        for line in fh:
            if not line.strip():
                continue
            f = line.rstrip("\n").split("\t")
            score = float(f[2])
            records.append(
                evaluation.ScoreRecord(
                    phrase_id=f[0],
                    tree_type=f[1],
                    cosine_score=score,
                    cosine_distance=1.0 - score,
                    parent_len=int(f[3]),
                    flagged=score != score,
                )
            )
    return records


def write_json(obj, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, ensure_ascii=False)
        fh.write("\n")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def build_parser():
    parser = _Parser(prog="phrasecomp", description=__doc__)
    parser.add_argument("--seed", type=int, default=0, help="master random seed")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("harvest", help="harvest subphrases from bracketed trees")
    p.add_argument("--trees", required=True, help="directory of bracketed-tree files")
    p.add_argument("--out", required=True, help="output catalog TSV")

    p = sub.add_parser("verify-store", help="print dim, count, checksum of a store")
    p.add_argument("--store", required=True)

    p = sub.add_parser("train", help="cross-validate a probe and save fold-0 checkpoint")
    p.add_argument("--probe", required=True, choices=probes.PROBE_KINDS)
    p.add_argument("--store", required=True)
    p.add_argument("--catalog", required=True)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--train-frac", type=float, default=1.0)
    p.add_argument("--out", required=True, help="probe checkpoint path")
    p.add_argument("--summary", help="optional JSON summary path")

    p = sub.add_parser("evaluate", help="score phrases with a trained probe")
    p.add_argument("--probe-file", required=True)
    p.add_argument("--store", required=True)
    p.add_argument("--catalog", required=True)
    p.add_argument("--out", required=True, help="scores TSV path")
    p.add_argument("--control-ratio", action="store_true", help="also print the error ratio")

    p = sub.add_parser("mdl", help="learning curve + AUC for a probe kind")
    p.add_argument("--probe", required=True, choices=probes.PROBE_KINDS)
    p.add_argument("--store", required=True)
    p.add_argument("--catalog", required=True)
    p.add_argument("--out", required=True, help="JSON report path")

    p = sub.add_parser("analyze", help="statistical reports over score files")
    p.add_argument(
        "--report",
        required=True,
        choices=("tree-types", "ne", "length", "human", "subphrase", "idiom"),
    )
    p.add_argument("--scores", help="scores TSV (one or more, comma-separated for human)")
    p.add_argument("--annotations", help="annotation TSV")
    p.add_argument("--ne-labels", help="phrase_id/entity_type TSV")
    p.add_argument("--catalog")
    p.add_argument("--store")
    p.add_argument("--out", required=True, help="JSON output path")

    p = sub.add_parser("match-idioms", help="find frequency-matched phrases per idiom")
    p.add_argument("--idioms", required=True, help="idiom list, one per line")
    p.add_argument("--index", required=True, help="surface/pattern/count TSV")
    p.add_argument("--exclusions", help="surfaces to exclude, one per line")
    p.add_argument("-k", type=int, default=3)
    p.add_argument("--out", required=True, help="matches TSV path")

    p = sub.add_parser("report", help="run the toy pipeline end to end")
    p.add_argument("--trees", required=True)
    p.add_argument("--store", required=True)
    p.add_argument("--probe", default="AFF", choices=probes.PROBE_KINDS)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--out-dir", required=True)

    return parser


def cmd_harvest(args):
    catalog = trees.harvest_directory(args.trees)
    trees.write_catalog(catalog, args.out)
    log.info("harvested %d unique phrases", len(catalog.records))


def cmd_verify_store(args):
    handle = store_mod.read_store(args.store)
    print(f"dim\t{handle.dim}")
    print(f"count\t{len(handle)}")
    print(f"checksum\t{handle.checksum()}")


def _load_triples(args):
    catalog = trees.read_catalog(args.catalog)
    handle = store_mod.read_store(args.store)
    triples = store_mod.assemble_triples(catalog, handle)
    if triples.skipped:
        log.info("skipped %d records missing vectors", triples.skipped)
    return catalog, handle, triples


def cmd_train(args):
    _, _, triples = _load_triples(args)
    cfg = probes.TrainConfig(seed=stage_seed(args.seed, "train"), train_fraction=args.train_frac)
    results = probes.crossvalidate(args.probe, triples, cfg, folds=args.folds)
    probes.save_probe(results[0].probe, cfg, args.out)
    summary = {
        "probe": args.probe,
        "folds": args.folds,
        "test_mean_cosine": [r.test_mean_cosine for r in results],
        "mean": float(np.mean([r.test_mean_cosine for r in results])),
        "std": float(np.std([r.test_mean_cosine for r in results])),
    }
    if args.summary:
        write_json(summary, args.summary)
    log.info("mean test cosine %.6f", summary["mean"])


def cmd_evaluate(args):
    _, _, triples = _load_triples(args)
    probe, _cfg = probes.load_probe(args.probe_file)
    records = evaluation.score_phrases(probe, triples)
    write_scores(records, args.out)
    summary = evaluation.score_summary(records)
    log.info("scored %d phrases, mean %.6f std %.6f", summary["n"], summary["mean"], summary["std"])
    if args.control_ratio:
        ratio = evaluation.control_error_ratio(
            probe, triples, stage_seed(args.seed, "control")
        )
        print(f"error_ratio\t{ratio!r}")


def cmd_mdl(args):
    _, _, triples = _load_triples(args)
    cfg = probes.TrainConfig(seed=stage_seed(args.seed, "train"))
    curve = evaluation.learning_curve(args.probe, triples, cfg)
    write_json(
        {
            "probe": args.probe,
            "fractions": curve.fractions,
            "test_scores": curve.test_scores,
            "skipped_fractions": curve.skipped_fractions,
            "auc": evaluation.curve_auc(curve),
        },
        args.out,
    )


def cmd_analyze(args):
    def need(value, flag):
        if value is None:
            raise SystemExit(f"--{flag} is required for --report {args.report}") from None
        return value

    if args.report == "tree-types":
        scores = read_scores(need(args.scores, "scores"))
        out = {"tree_types": analysis.group_scores_by_tree_type(scores)}
    elif args.report == "ne":
        scores = read_scores(need(args.scores, "scores"))
        labels = analysis.read_ne_labels(need(args.ne_labels, "ne-labels"))
        out = analysis.ne_split(scores, labels)
    elif args.report == "length":
        scores = read_scores(need(args.scores, "scores"))
        res = analysis.feature_correlation(
            scores, "word_length", seed=stage_seed(args.seed, "stats")
        )
        out = {"feature": "word_length", "rho": res.rho, "p_raw": res.p_raw, "n": res.n}
    elif args.report == "human":
        annotations = analysis.read_annotations(need(args.annotations, "annotations"))
        human = analysis.aggregate_human(annotations)
        score_sets = []
        for path in need(args.scores, "scores").split(","):
            score_sets.append((os.path.basename(path), read_scores(path)))
        results = analysis.human_model_correlation(
            human, score_sets, seed=stage_seed(args.seed, "stats")
        )
        out = {
            "families": [
                {"family": name, "rho": r.rho, "p_raw": r.p_raw, "p_adjusted": r.p_adjusted, "n": r.n}
                for name, r in results
            ]
        }
    elif args.report == "subphrase":
        annotations = analysis.read_annotations(need(args.annotations, "annotations"))
        handle = store_mod.read_store(need(args.store, "store"))
        catalog = trees.read_catalog(need(args.catalog, "catalog"))
        out = {"accuracy": analysis.subphrase_contribution_test(annotations, handle, catalog)}
    elif args.report == "idiom":
        annotations = analysis.read_annotations(need(args.annotations, "annotations"))
        scores = read_scores(need(args.scores, "scores"))
        out = {"accuracy": analysis.idiomaticity_test(annotations, scores)}
    write_json(out, args.out)


def cmd_match_idioms(args):
    index = chip.load_index(args.index)
    exclusions = []
    if args.exclusions:
        with open(args.exclusions, encoding="utf-8") as fh:
            exclusions = [line.strip() for line in fh if line.strip()]
    with open(args.idioms, encoding="utf-8") as fh:
        idioms = [line.strip() for line in fh if line.strip()]
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("idiom\tmatch_rank\tmatch_surface\tpattern\tlog_freq_idiom\tlog_freq_match\n")
        for idiom in idioms:
            result = chip.match_idiom(idiom, index, k=args.k, exclusions=exclusions)
            for rank, (surface, _delta, log_freq) in enumerate(result.matches, start=1):
                fh.write(
                    f"{idiom}\t{rank}\t{surface}\t{result.pattern}"
                    f"\t{result.log_freq!r}\t{log_freq!r}\n"
                )


def cmd_report(args):
    os.makedirs(args.out_dir, exist_ok=True)
    catalog = trees.harvest_directory(args.trees)
    catalog_path = os.path.join(args.out_dir, "catalog.tsv")
    trees.write_catalog(catalog, catalog_path)
    handle = store_mod.read_store(args.store)
    triples = store_mod.assemble_triples(catalog, handle)
    cfg = probes.TrainConfig(seed=stage_seed(args.seed, "train"))
    results = probes.crossvalidate(args.probe, triples, cfg, folds=args.folds)
    probe = results[0].probe
    records = evaluation.score_phrases(probe, triples)
    write_scores(records, os.path.join(args.out_dir, "scores.tsv"))
    bundle = {
        "seed": args.seed,
        "probe": args.probe,
        "catalog_size": len(catalog.records),
        "skipped_records": triples.skipped,
        "fold_test_cosine": [r.test_mean_cosine for r in results],
        "score_summary": evaluation.score_summary(records),
        "error_ratio": evaluation.control_error_ratio(
            probe, triples, stage_seed(args.seed, "control")
        ),
        "tree_types": analysis.group_scores_by_tree_type(records),
    }
    write_json(bundle, os.path.join(args.out_dir, "report.json"))


COMMANDS = {
    "harvest": cmd_harvest,
    "verify-store": cmd_verify_store,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "mdl": cmd_mdl,
    "analyze": cmd_analyze,
    "match-idioms": cmd_match_idioms,
    "report": cmd_report,
}


def main(argv=None):
    logging.basicConfig(level=logging.INFO, stream=sys.stderr, format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    try:
        COMMANDS[args.command](args)
    except SystemExit as exc:
        if isinstance(exc.code, str):
            log.error("%s", exc.code)
            return 1
        return exc.code or 0
    except PhrasecompError as exc:
        log.error("%s", exc)
        return 2
    except OSError as exc:
        log.error("%s", exc)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
