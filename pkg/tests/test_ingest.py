import io
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tagtrust.ingest import (
    FieldLayout,
    ParseError,
    TagAssignment,
    Transaction,
    filter_rare_items,
    group_transactions,
    parse_tag_assignments,
    read_corpus,
    split_per_user,
    write_corpus,
)

from conftest import tx


def test_parse_three_lines():
    text = "1\t10\tSciFi\t1000\n2\t10\t  Dark \t1001\n1\t11\tfun\n"
    recs = parse_tag_assignments(io.StringIO(text))
    assert recs == [
        TagAssignment("1", "10", "scifi", 1000),
        TagAssignment("2", "10", "dark", 1001),
        TagAssignment("1", "11", "fun", None),
    ]


def test_parse_skips_detected_header():
    text = "userID\tmovieID\ttagID\ttimestamp\n75\t353\t5290\t1162160236000\n"
    recs = parse_tag_assignments(io.StringIO(text))
    assert recs == [TagAssignment("75", "353", "5290", 1162160236000)]


def test_parse_missing_tag_reports_line():
    text = "u1\tm1\ta\nu1\tm1\n"
    with pytest.raises(ParseError) as err:
        parse_tag_assignments(io.StringIO(text), FieldLayout(header="no"))
    assert err.value.line_no == 2


def test_parse_empty_stream():
    assert parse_tag_assignments(io.StringIO("")) == []


def test_parse_bad_timestamp():
    with pytest.raises(ParseError):
        parse_tag_assignments(io.StringIO("1\t2\tx\tnoon\n"))


def test_layout_remaps_columns():
    layout = FieldLayout.parse("user=2,item=0,tag=1,timestamp=none")
    recs = parse_tag_assignments(io.StringIO("m1,great,u9\n"), FieldLayout(
        layout.user, layout.item, layout.tag, layout.timestamp, delimiter=",", header="no"))
    assert recs == [TagAssignment("u9", "m1", "great")]


def test_layout_rejects_garbage():
    with pytest.raises(ValueError):
        FieldLayout.parse("user=0,colour=3")


def test_group_union():
    a = [TagAssignment("u1", "m1", "a"), TagAssignment("u1", "m1", "b")]
    assert group_transactions(a) == [tx("u1", "m1", "a", "b")]


def test_group_distinct_users():
    a = [TagAssignment("u1", "m1", "a"), TagAssignment("u2", "m1", "a")]
    assert group_transactions(a) == [tx("u1", "m1", "a"), tx("u2", "m1", "a")]


def test_group_dedup():
    a = [TagAssignment("u1", "m1", "a"), TagAssignment("u1", "m1", "a")]
    assert group_transactions(a) == [tx("u1", "m1", "a")]


def test_filter_single_tagger_removed():
    txs = [tx("u1", "m1", "a"), tx("u1", "m2", "a"), tx("u2", "m2", "b")]
    assert filter_rare_items(txs) == [tx("u1", "m2", "a"), tx("u2", "m2", "b")]


def test_filter_min_one_is_identity():
    txs = [tx("u1", "m1", "a"), tx("u2", "m2", "b")]
    assert filter_rare_items(txs, 1) == txs


def test_filter_rejects_zero():
    with pytest.raises(ValueError):
        filter_rare_items([], 0)


def test_split_ten_transactions():
    txs = [tx("u", f"m{i}", "a") for i in range(10)]
    train, test = split_per_user(txs, 0.2, seed=3)
    assert len(train) == 8 and len(test) == 2


def test_split_single_transaction_stays_in_training():
    train, test = split_per_user([tx("u", "m", "a")], 0.2, seed=1)
    assert len(train) == 1 and len(test) == 0


def test_split_deterministic():
    txs = [tx(f"u{i % 4}", f"m{i}", "a") for i in range(40)]
    a = split_per_user(txs, 0.2, seed=11)
    b = split_per_user(list(reversed(txs)), 0.2, seed=11)
    assert a == b


def test_corpus_roundtrip():
    txs = [tx("u1", "m1", "b", "a"), tx("u2", "m1", "c")]
    train, _ = split_per_user(txs, 0.0)
    buf = io.StringIO()
    write_corpus(train, buf)
    assert read_corpus(io.StringIO(buf.getvalue())) == train


transactions = st.lists(
    st.builds(
        lambda u, i, ts: Transaction(f"u{u}", f"m{i}", frozenset(ts)),
        st.integers(0, 6),
        st.integers(0, 9),
        st.sets(st.sampled_from("abcd"), min_size=1),
    ),
    max_size=60,
).map(lambda txs: list({t.key: t for t in txs}.values()))


@given(transactions, st.floats(0, 0.95), st.integers(0, 1000))
@settings(max_examples=100)
def test_split_partitions_with_floor_counts(txs, fraction, seed):
    train, test = split_per_user(txs, fraction, seed)
    assert sorted(train.transactions + test.transactions, key=lambda t: t.key) == sorted(txs, key=lambda t: t.key)
    per_user = Counter(t.user_id for t in txs)
    test_counts = Counter(t.user_id for t in test)
    for user, n in per_user.items():
        assert test_counts[user] == int(n * fraction)


@given(transactions, st.integers(1, 4))
def test_filter_idempotent(txs, m):
    once = filter_rare_items(txs, m)
    assert filter_rare_items(once, m) == once


@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4), st.sampled_from("abc")), max_size=40))
def test_group_keys_unique(rows):
    recs = [TagAssignment(f"u{u}", f"m{i}", t) for u, i, t in rows]
    grouped = group_transactions(recs)
    keys = [t.key for t in grouped]
    assert len(keys) == len(set(keys))
    brute = {}
    for r in recs:
        brute.setdefault((r.user_id, r.item_id), set()).add(r.tag)
    assert {t.key: set(t.tags) for t in grouped} == brute
