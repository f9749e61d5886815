"""Reading tag-assignment files and preparing train/test corpora.

Input rows are HetRec-style ``user<TAB>item<TAB>tag[<TAB>timestamp]`` lines.
Rows are grouped into transactions (one user annotating one item with a set
of tags), items tagged by too few distinct users are dropped, and each user's
transactions are split into training and testing parts.
"""

from __future__ import annotations

import math
import random
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, TextIO

TRAINING = "training"
TESTING = "testing"


class ParseError(ValueError):
    """A data line could not be parsed."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class TagAssignment:
    user_id: str
    item_id: str
    tag: str
    timestamp: Optional[int] = None


@dataclass(frozen=True)
class Transaction:
    user_id: str
    item_id: str
    tags: frozenset

    @property
    def key(self) -> tuple[str, str]:
        return (self.user_id, self.item_id)


@dataclass(frozen=True)
class Corpus:
    transactions: tuple
    role: str = TRAINING

    def __len__(self) -> int:
        return len(self.transactions)

    def __iter__(self) -> Iterator[Transaction]:
        return iter(self.transactions)

    def users(self) -> set[str]:
        return {tx.user_id for tx in self.transactions}

    def items(self) -> set[str]:
        return {tx.item_id for tx in self.transactions}

    def items_by_user(self) -> dict[str, set[str]]:
        out: dict[str, set[str]] = defaultdict(set)
        for tx in self.transactions:
            out[tx.user_id].add(tx.item_id)
        return dict(out)


@dataclass(frozen=True)
class FieldLayout:
    """Column positions of each field in a data line.

    ``header`` is ``"auto"`` (first line is a header when its user field is
    not numeric), ``"yes"`` or ``"no"``.
    """

    user: int = 0
    item: int = 1
    tag: int = 2
    timestamp: Optional[int] = 3
    delimiter: str = "\t"
    header: str = "auto"

    @classmethod
    def parse(cls, text: str) -> "FieldLayout":
        """Build a layout from ``"user=0,item=1,tag=2,timestamp=3"``.

        ``timestamp=none`` disables the timestamp column.
        """
        fields: dict[str, Optional[int]] = {}
        for part in text.split(","):
            part = part.strip()
            if not part:
                continue
            name, sep, value = part.partition("=")
            name = name.strip()
            if not sep or name not in ("user", "item", "tag", "timestamp"):
                raise ValueError(f"bad column spec {part!r}")
            value = value.strip()
            if name == "timestamp" and value.lower() in ("none", "-"):
                fields[name] = None
            else:
                fields[name] = int(value)
        return cls(**fields)

    @property
    def min_fields(self) -> int:
        return max(self.user, self.item, self.tag) + 1


def normalize_tag(tag: str) -> str:
    return tag.strip().lower()


def _looks_numeric(field: str) -> bool:
    try:
        float(field)
    except ValueError:
        return False
    return True


def parse_tag_assignments(
    source: Iterable[str], layout: FieldLayout = FieldLayout()
) -> list[TagAssignment]:
    """Parse tag-assignment rows from any iterable of text lines.

    Blank lines are skipped. A line with fewer fields than the layout needs,
    an empty id, an empty tag, or a non-integer timestamp raises
    :class:`ParseError` carrying the 1-based line number.
    """
    records: list[TagAssignment] = []
    first = True
    for line_no, raw in enumerate(source, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            continue
        fields = line.split(layout.delimiter)
        if first:
            first = False
            if layout.header == "yes":
                continue
            if layout.header == "auto" and not _looks_numeric(fields[layout.user].strip()):
                continue
        if len(fields) < layout.min_fields:
            raise ParseError(
                line_no, f"expected at least {layout.min_fields} fields, got {len(fields)}"
            )
        user = fields[layout.user].strip()
        item = fields[layout.item].strip()
        tag = normalize_tag(fields[layout.tag])
        if not user or not item or not tag:
            raise ParseError(line_no, "empty user, item or tag field")
        timestamp = None
        if layout.timestamp is not None and layout.timestamp < len(fields):
            value = fields[layout.timestamp].strip()
            if value:
                try:
                    timestamp = int(value)
                except ValueError:
                    raise ParseError(line_no, f"timestamp {value!r} is not an integer") from None
        records.append(TagAssignment(user, item, tag, timestamp))
    return records


def read_tag_file(path, layout: FieldLayout = FieldLayout()) -> list[TagAssignment]:
    with open(path, encoding="utf-8") as fh:
        return parse_tag_assignments(fh, layout)


def group_transactions(assignments: Iterable[TagAssignment]) -> list[Transaction]:
    """Collapse assignments into one transaction per (user, item) pair.

    Output order follows the first appearance of each pair.
    """
    tags: dict[tuple[str, str], set[str]] = {}
    for a in assignments:
        tags.setdefault((a.user_id, a.item_id), set()).add(a.tag)
    return [Transaction(u, i, frozenset(ts)) for (u, i), ts in tags.items()]


def filter_rare_items(transactions: list[Transaction], min_taggers: int = 2) -> list[Transaction]:
    """Drop every transaction on an item tagged by fewer than ``min_taggers`` distinct users."""
    if min_taggers < 1:
        raise ValueError("min_taggers must be >= 1")
    taggers: dict[str, set[str]] = defaultdict(set)
    for tx in transactions:
        taggers[tx.item_id].add(tx.user_id)
    return [tx for tx in transactions if len(taggers[tx.item_id]) >= min_taggers]


def split_per_user(
    transactions: list[Transaction], test_fraction: float = 0.2, seed: int = 0
) -> tuple[Corpus, Corpus]:
    """Hold out ``floor(n * test_fraction)`` random transactions of every user.

    Each user's transactions are sorted by item id, then shuffled with a RNG
    seeded from ``seed`` and the user id, so the split depends neither on the
    input order nor on which other users are present.
    """
    if not 0 <= test_fraction < 1:
        raise ValueError("test_fraction must be in [0, 1)")
    by_user: dict[str, list[Transaction]] = defaultdict(list)
    for tx in transactions:
        by_user[tx.user_id].append(tx)

    train: list[Transaction] = []
    test: list[Transaction] = []
    for user in sorted(by_user):
        txs = sorted(by_user[user], key=lambda t: t.item_id)
        random.Random(f"{seed}:{user}").shuffle(txs)
        n_test = math.floor(len(txs) * test_fraction)
        test.extend(txs[:n_test])
        train.extend(txs[n_test:])
    train.sort(key=lambda t: t.key)
    test.sort(key=lambda t: t.key)
    return Corpus(tuple(train), TRAINING), Corpus(tuple(test), TESTING)


def dataset_stats(assignments: list[TagAssignment]) -> dict[str, int]:
    return {
        "tag_assignments": len(assignments),
        "users": len({a.user_id for a in assignments}),
        "items": len({a.item_id for a in assignments}),
        "distinct_tags": len({a.tag for a in assignments}),
    }


def write_corpus(corpus: Corpus, fh: TextIO) -> None:
    """One transaction per line: ``user<TAB>item<TAB>tag1<TAB>tag2...`` with tags sorted."""
    for tx in corpus.transactions:
        fh.write("\t".join([tx.user_id, tx.item_id, *sorted(tx.tags)]) + "\n")


def read_corpus(fh: Iterable[str], role: str = TRAINING) -> Corpus:
    txs = []
    for line_no, line in enumerate(fh, start=1):
        line = line.rstrip("\n")
        if not line:
            continue
        fields = line.split("\t")
        if len(fields) < 3:
            raise ParseError(line_no, "corpus line needs user, item and at least one tag")
        txs.append(Transaction(fields[0], fields[1], frozenset(fields[2:])))
    return Corpus(tuple(txs), role)
