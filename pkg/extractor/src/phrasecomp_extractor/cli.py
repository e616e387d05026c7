"""CLI: extract --model <id> --phrases <tsv> --reps cls,avg --out <store>.

The phrases file is a harvest catalog TSV; its parent/left/right text
columns supply the phrase list.
"""

import argparse
import logging
import sys

from phrasecomp.trees import read_catalog

from .extract import ExtractJob, run_job, write_stores

log = logging.getLogger("phrasecomp-extract")


def catalog_texts(path):
    catalog = read_catalog(path)
    texts = []
    for rec in catalog.records:
        texts.extend((rec.parent_text, rec.left_text, rec.right_text))
    return texts


def build_parser():
    parser = argparse.ArgumentParser(prog="phrasecomp-extract", description=__doc__)
    parser.add_argument("--model", required=True, help="checkpoint id or local path")
    parser.add_argument("--phrases", required=True, help="catalog TSV")
    parser.add_argument("--reps", default="cls,avg", help="comma list of cls,last,avg")
    parser.add_argument("--out", required=True, help="output store path")
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument("--device", default="cpu")
    return parser


def main(argv=None):
    logging.basicConfig(level=logging.INFO, stream=sys.stderr, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    reps = tuple(r.strip().upper() for r in args.reps.split(",") if r.strip())
    job = ExtractJob(
        model_id=args.model,
        rep_kinds=reps,
        phrases=catalog_texts(args.phrases),
        batch_size=args.batch_size,
        device=args.device,
    )
    try:
        result = run_job(job)
    except (OSError, ValueError) as exc:
        log.error("%s", exc)
        return 2
    paths = write_stores(result, args.out, reps)
    for rep, path in paths.items():
        log.info("wrote %d %s vectors to %s", len(result.records[rep]), rep, path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
