import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tagtrust.profiles import (
    DuplicateTransaction,
    ItemProfile,
    UnknownItem,
    UnknownTag,
    UnknownUser,
    UserProfile,
    apply_transaction,
    item_weight,
    tag_information_value,
    tag_score,
    transaction_trust,
)
from tagtrust.store import ShardedStore, item_key, user_key

from conftest import random_triples, store_from, tx


def user_with(freq, items=None):
    p = UserProfile("u")
    for t, n in freq.items():
        p.tag_freq[t] = n
    p.total_tag_uses = sum(freq.values())
    p.items.update(items or {})
    return p


def item_with(counts, taggers=None):
    p = ItemProfile("r")
    for t, n in counts.items():
        p.tag_user_count[t] = n
    p.total_tag_users = sum(counts.values())
    p.taggers.update(taggers or {})
    return p


def test_first_transaction_weight_one():
    s = ShardedStore.in_memory()
    up, ip = apply_transaction(tx("u", "r", "a"), s)
    assert item_weight(up, "r") == 1.0
    assert transaction_trust(ip, "u") == 1.0


def test_new_item_dilutes_old_weights():
    s = ShardedStore.in_memory()
    for i in range(3):
        apply_transaction(tx("u", f"r{i}", "a"), s)
    before = item_weight(s.get(user_key("u")), "r0")
    up, _ = apply_transaction(tx("u", "r9", "b"), s)
    # hand oracle: freq {a:3, b:1}
    assert item_weight(up, "r9") == pytest.approx(1 / 4)
    assert item_weight(up, "r0") == pytest.approx(3 / 4)
    assert item_weight(up, "r0") < before == 1.0


def test_duplicate_transaction_rejected():
    s = ShardedStore.in_memory()
    apply_transaction(tx("u", "r", "a"), s)
    snapshot = (s.get(user_key("u")).tag_freq.copy(), s.get(item_key("r")).tag_user_count.copy())
    with pytest.raises(DuplicateTransaction):
        apply_transaction(tx("u", "r", "b"), s)
    assert (s.get(user_key("u")).tag_freq, s.get(item_key("r")).tag_user_count) == snapshot


def test_tag_score_examples():
    assert tag_score(user_with({"a": 3, "b": 1}), "a") == 0.75
    assert tag_score(user_with({"a": 5}), "a") == 1.0
    with pytest.raises(UnknownTag):
        tag_score(user_with({"a": 3}), "z")


def test_item_weight_examples():
    p = user_with({"a": 3, "b": 1}, {"both": frozenset("ab"), "just_b": frozenset("b")})
    assert item_weight(p, "both") == 1.0
    assert item_weight(p, "just_b") == 0.25
    with pytest.raises(UnknownItem):
        item_weight(p, "other")


def test_tag_information_value_examples():
    assert tag_information_value(item_with({"a": 3, "b": 1}), "a") == 0.75
    assert tag_information_value(item_with({"a": 1}), "a") == 1.0
    assert tag_information_value(item_with({"a": 2, "b": 1, "c": 1}), "c") == 0.25
    with pytest.raises(UnknownTag):
        tag_information_value(item_with({"a": 1}), "b")


def test_transaction_trust_examples():
    p = item_with({"a": 3, "b": 1}, {"x": frozenset("ab"), "y": frozenset("a")})
    assert transaction_trust(p, "x") == 0.5
    assert transaction_trust(p, "y") == 0.75
    with pytest.raises(UnknownUser):
        transaction_trust(p, "nobody")


def test_freq_counts_one_use_per_item():
    s = store_from([tx("u", "r1", "scifi"), tx("u", "r2", "scifi", "space")])
    up = s.get(user_key("u"))
    assert up.tag_freq == {"scifi": 2, "space": 1}


@pytest.mark.parametrize("seed", range(20))
def test_scores_and_values_sum_to_one(seed):
    s = store_from([tx(u, r, *ts) for u, r, ts in random_triples(seed)])
    for key in s.keys():
        p = s.get(key)
        if isinstance(p, UserProfile):
            assert sum(tag_score(p, t) for t in p.tag_freq) == pytest.approx(1.0, abs=1e-9)
            assert all(0 < w <= 1 for w in p.weights().values())
            assert all(p.tag_freq[t] >= 1 for ts in p.items.values() for t in ts)
        else:
            assert sum(tag_information_value(p, t) for t in p.tag_user_count) == pytest.approx(1.0, abs=1e-9)
            assert all(1 <= c <= len(p.taggers) for c in p.tag_user_count.values())
            assert all(0 < v <= 1 for v in p.trusts().values())


@given(st.integers(0, 10_000), st.randoms(use_true_random=False))
@settings(max_examples=60)
def test_replay_order_does_not_matter(seed, rnd):
    txs = [tx(u, r, *ts) for u, r, ts in random_triples(seed)]
    a = store_from(txs)
    shuffled = list(txs)
    rnd.shuffle(shuffled)
    b = store_from(shuffled, shard_count=3)
    assert a.keys() == b.keys()
    for k in a.keys():
        assert a.get(k) == b.get(k)


@given(st.integers(0, 10_000))
@settings(max_examples=60)
def test_new_tags_strictly_dilute(seed):
    txs = [tx(u, r, *ts) for u, r, ts in random_triples(seed)]
    s = store_from(txs)
    user = txs[0].user_id
    before = s.get(user_key(user)).weights()
    apply_transaction(tx(user, "fresh-item", "never-seen-1", "never-seen-2"), s)
    after = s.get(user_key(user)).weights()
    assert all(after[r] < w for r, w in before.items())


def test_consensus_tagger_trusted_most():
    # Exhaustive: three users on one item, tag sets drawn from {a, b, c}.
    subsets = [frozenset(c) for n in (1, 2, 3) for c in itertools.combinations("abc", n)]
    for sets in itertools.product(subsets, repeat=3):
        item = ItemProfile("r")
        for i, ts in enumerate(sets):
            item.add(f"u{i}", ts)
        counts = item.tag_user_count
        top = max(counts.values())
        consensus = frozenset(t for t, c in counts.items() if c == top)
        for i, ts in enumerate(sets):
            if ts != consensus:
                continue
            for j, other in enumerate(sets):
                lower = all(counts[t] < top for t in other)
                if lower:
                    assert transaction_trust(item, f"u{i}") >= transaction_trust(item, f"u{j}")


def test_trust_exact_fraction():
    item = ItemProfile("r")
    item.add("x", frozenset("ab"))
    item.add("y", frozenset("a"))
    item.add("z", frozenset("ac"))
    # S = {a:3, b:1, c:1}; V(a)=3/5; trust(x) = (3/5 + 1/5)/2
    assert Fraction(transaction_trust(item, "x")).limit_denominator(100) == Fraction(2, 5)
