"""Command-line interface.

    tagtrust ingest    --input FILE --workdir DIR
    tagtrust evaluate  --workdir DIR [--output report.csv]
    tagtrust recommend --workdir DIR --user ID
    tagtrust plot-data --report report.csv --metric recall

Exit codes: 0 success, 1 usage or configuration error, 2 data error.
``TAGTRUST_INPUT`` and ``TAGTRUST_OUTPUT`` supply ``--input`` and
``--output`` when those flags are absent.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
from collections import defaultdict
from pathlib import Path

from . import __version__
from .evaluation import DEFAULT_K_VALUES, default_jobs, run_experiment
from .ingest import (
    TESTING,
    TRAINING,
    FieldLayout,
    ParseError,
    dataset_stats,
    filter_rare_items,
    group_transactions,
    read_corpus,
    read_tag_file,
    split_per_user,
    write_corpus,
)
from .profiles import build_profiles, decode_profile, encode_profile
from .recommend import recommend_top_n
from .scoring import VARIANTS, ScoringConfig
from .store import ShardedStore, user_key

log = logging.getLogger("tagtrust")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2
MANIFEST = "manifest.json"
TRAIN_FILE = "training.tsv"
TEST_FILE = "testing.tsv"
STORE_DIR = "store"
SPLIT_FIELDS = ("min_taggers", "test_fraction", "seed")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    try:
        values = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}") from None
    if not values or any(v < 1 for v in values):
        raise argparse.ArgumentTypeError("values must be positive integers")
    return values


def _variant_list(text: str) -> list[str]:
    names = [x.strip() for x in text.split(",") if x.strip()]
    bad = [x for x in names if x not in VARIANTS]
    if bad or not names:
        raise argparse.ArgumentTypeError(f"unknown variants {bad}; choose from {sorted(VARIANTS)}")
    return names


def _ratio(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError("must be in [0, 1]")
    return value


def _add_scoring_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lambda", dest="lam", type=_ratio, default=0.5)
    p.add_argument("--importance-pool", choices=["reduced", "global"], default="reduced",
                   help="users behind resource importance")
    p.add_argument("--trust-denominator", choices=["count", "importance_sum"], default="count",
                   help="divisor of the weighted trust sum")
    p.add_argument("--similarity-mode", choices=["matrix", "strict"], default="matrix")


def _add_split_check_flags(p: argparse.ArgumentParser) -> None:
    # Only used to verify the workdir was ingested with these settings.
    p.add_argument("--min-taggers", type=int)
    p.add_argument("--test-fraction", type=float)
    p.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tagtrust", description="Trust-aware tag-based collaborative filtering.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="parse, filter, split and build profiles")
    p.add_argument("--input", default=os.environ.get("TAGTRUST_INPUT"))
    p.add_argument("--workdir", required=True)
    p.add_argument("--columns", default="user=0,item=1,tag=2,timestamp=3",
                   help="column layout, e.g. user=0,item=1,tag=2,timestamp=none")
    p.add_argument("--header", choices=["auto", "yes", "no"], default="auto")
    p.add_argument("--min-taggers", type=int, default=2)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shard-count", type=int, default=4)
    p.add_argument("--store-backend", choices=["memory", "file"], default="file")

    p = sub.add_parser("evaluate", help="run the variant x k sweep and print CSV")
    p.add_argument("--workdir", required=True)
    p.add_argument("--k-values", type=_int_list, default=list(DEFAULT_K_VALUES))
    p.add_argument("--top-n", type=int, default=10)
    p.add_argument("--variants", type=_variant_list, default=list(VARIANTS))
    p.add_argument("--precision-denominator", choices=["n", "length"], default="n")
    p.add_argument("--jobs", type=int, default=default_jobs())
    p.add_argument("--output", default=os.environ.get("TAGTRUST_OUTPUT"))
    _add_scoring_flags(p)
    _add_split_check_flags(p)

    p = sub.add_parser("recommend", help="print the top-N list of one user")
    p.add_argument("--workdir", required=True)
    p.add_argument("--user", required=True)
    p.add_argument("--k", type=int, default=10, help="number of neighbors")
    p.add_argument("--top-n", type=int, default=10)
    p.add_argument("--variant", choices=list(VARIANTS), default="weighted_trust")
    _add_scoring_flags(p)

    p = sub.add_parser("plot-data", help="turn a report into gnuplot columns")
    p.add_argument("--report", required=True)
    p.add_argument("--metric", choices=["recall", "precision", "coverage"], default="recall")
    p.add_argument("--output", default=os.environ.get("TAGTRUST_OUTPUT"))
    return parser


def _sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def config_hash(config: dict, input_digest: str) -> str:
    blob = json.dumps({"config": config, "input_sha256": input_digest}, sort_keys=True)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def cmd_ingest(args) -> int:
    if not args.input:
        raise UsageError("--input (or TAGTRUST_INPUT) is required")
    if args.min_taggers < 1 or not 0 <= args.test_fraction < 1 or args.shard_count < 1:
        raise UsageError("need min-taggers >= 1, 0 <= test-fraction < 1, shard-count >= 1")
    try:
        layout = FieldLayout.parse(args.columns)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    layout = FieldLayout(layout.user, layout.item, layout.tag, layout.timestamp, header=args.header)

    path = Path(args.input)
    try:
        assignments = read_tag_file(path, layout)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    except ParseError as exc:
        raise DataError(f"{path}: {exc}") from None
    if not assignments:
        log.warning("%s contains no tag assignments", path)

    transactions = group_transactions(assignments)
    kept = filter_rare_items(transactions, args.min_taggers)
    training, testing = split_per_user(kept, args.test_fraction, args.seed)

    workdir = Path(args.workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    with open(workdir / TRAIN_FILE, "w", encoding="utf-8") as fh:
        write_corpus(training, fh)
    with open(workdir / TEST_FILE, "w", encoding="utf-8") as fh:
        write_corpus(testing, fh)
    if args.store_backend == "file":
        store_dir = workdir / STORE_DIR
        for old in store_dir.glob("shard-*.jsonl"):
            old.unlink()
        store = ShardedStore.open_files(store_dir, args.shard_count, encode_profile, decode_profile)
        build_profiles(training, store)
        store.flush()

    config = {
        "columns": args.columns,
        "header": args.header,
        "min_taggers": args.min_taggers,
        "test_fraction": args.test_fraction,
        "seed": args.seed,
        "shard_count": args.shard_count,
        "store_backend": args.store_backend,
    }
    digest = _sha256_file(path)
    manifest = {
        "input": str(path),
        "input_sha256": digest,
        "config": config,
        "config_hash": config_hash(config, digest),
        "counts": {
            "raw": dataset_stats(assignments),
            "transactions": len(transactions),
            "filtered": {
                "transactions": len(kept),
                "users": len({t.user_id for t in kept}),
                "items": len({t.item_id for t in kept}),
            },
            "training_transactions": len(training),
            "testing_transactions": len(testing),
            "training_users": len(training.users()),
        },
    }
    with open(workdir / MANIFEST, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    raw = manifest["counts"]["raw"]
    log.info(
        "%d tag assignments, %d users, %d items, %d distinct tags; %d/%d transactions kept",
        raw["tag_assignments"], raw["users"], raw["items"], raw["distinct_tags"],
        len(kept), len(transactions),
    )
    print(json.dumps(manifest["counts"], sort_keys=True))
    return EXIT_OK


def _load_workdir(workdir):
    workdir = Path(workdir)
    try:
        with open(workdir / MANIFEST, encoding="utf-8") as fh:
            manifest = json.load(fh)
        with open(workdir / TRAIN_FILE, encoding="utf-8") as fh:
            training = read_corpus(fh, TRAINING)
        with open(workdir / TEST_FILE, encoding="utf-8") as fh:
            testing = read_corpus(fh, TESTING)
    except (OSError, ValueError) as exc:
        raise DataError(f"no usable ingest output in {workdir}: {exc}") from None
    if config_hash(manifest["config"], manifest["input_sha256"]) != manifest["config_hash"]:
        raise DataError(f"{workdir / MANIFEST}: config hash does not match its config")

    cfg = manifest["config"]
    if cfg["store_backend"] == "file":
        store_dir = workdir / STORE_DIR
        if not any(store_dir.glob("shard-*.jsonl")):
            raise DataError(f"missing profile store in {store_dir}")
        store = ShardedStore.open_files(store_dir, cfg["shard_count"], encode_profile, decode_profile)
    else:
        store = ShardedStore.in_memory(cfg["shard_count"])
        build_profiles(training, store)
    return manifest, training, testing, store


def _scoring_config(args, training) -> ScoringConfig:
    return ScoringConfig(
        lam=args.lam,
        pool=args.importance_pool,
        trust_denominator=args.trust_denominator,
        similarity_mode=args.similarity_mode,
        global_user_count=len(training.users()) or None,
    )


def _write_output(text: str, output) -> None:
    if output:
        with open(output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_evaluate(args) -> int:
    manifest, training, testing, store = _load_workdir(args.workdir)
    for name in SPLIT_FIELDS:
        wanted = getattr(args, name)
        if wanted is not None and wanted != manifest["config"][name]:
            raise UsageError(
                f"--{name.replace('_', '-')} {wanted} disagrees with the ingested "
                f"workdir ({manifest['config'][name]}); re-run ingest"
            )
    if args.top_n < 1 or args.jobs < 1:
        raise UsageError("--top-n and --jobs must be >= 1")
    if not len(testing):
        log.warning("test corpus is empty; nothing to evaluate")
    report = run_experiment(
        training,
        testing,
        [VARIANTS[v] for v in args.variants],
        args.k_values,
        args.top_n,
        _scoring_config(args, training),
        jobs=args.jobs,
        precision_denominator=args.precision_denominator,
        store=store,
    )
    log.info(
        "skipped %d users without test items and %d without neighbors",
        report.users_without_test, report.users_without_neighbors,
    )
    _write_output(report.to_csv(), args.output)
    return EXIT_OK


def cmd_recommend(args) -> int:
    _, training, _, store = _load_workdir(args.workdir)
    if args.k < 1 or args.top_n < 1:
        raise UsageError("--k and --top-n must be >= 1")
    if store.get(user_key(args.user)) is None:
        raise UsageError(f"unknown user {args.user!r}")
    recs = recommend_top_n(
        args.user, args.k, args.top_n, VARIANTS[args.variant], _scoring_config(args, training), store
    )
    for item, score in recs.entries:
        sys.stdout.write(f"{item}\t{score:.6f}\n")
    return EXIT_OK


def cmd_plot_data(args) -> int:
    try:
        with open(args.report, encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {args.report}: {exc}") from None
    table: dict[int, dict[str, str]] = defaultdict(dict)
    variants: list[str] = []
    for row in rows:
        if row["variant"] not in variants:
            variants.append(row["variant"])
        table[int(row["k"])][row["variant"]] = row[args.metric]
    lines = ["# k " + " ".join(variants) + f"   ({args.metric})"]
    for k in sorted(table):
        lines.append(" ".join([str(k)] + [table[k].get(v, "NaN") for v in variants]))
    _write_output("\n".join(lines) + "\n", args.output)
    return EXIT_OK


COMMANDS = {
    "ingest": cmd_ingest,
    "evaluate": cmd_evaluate,
    "recommend": cmd_recommend,
    "plot-data": cmd_plot_data,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"tagtrust: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"tagtrust: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
