"""User and item profiles, maintained one transaction at a time.

A user profile counts how often the user applied each tag (one use per
item/tag pair) and remembers the tag set given to every item. Item weights
are derived on read:

    tag_score(u, t)   = freq(u, t) / sum of freq(u, .)
    item_weight(u, r) = sum of tag_score(u, t) over the tags u gave r

An item profile counts, for each tag, how many distinct users put it on the
item. Transaction trust is derived on read as well:

    info_value(r, t)        = S_r(t) / sum of S_r(.)
    transaction_trust(r, u) = mean of info_value(r, t) over the tags u gave r

Since every derived value comes from stored counts, adding a transaction
implicitly refreshes all weights of that user and all trusts on that item.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

from .ingest import Transaction
from .store import ITEM, USER, item_key, user_key


class DuplicateTransaction(ValueError):
    pass


class UnknownTag(KeyError):
    pass


class UnknownItem(KeyError):
    pass


class UnknownUser(KeyError):
    pass


@dataclass
class UserProfile:
    user_id: str
    tag_freq: Counter = field(default_factory=Counter)
    items: dict = field(default_factory=dict)  # item_id -> frozenset of tags
    total_tag_uses: int = 0

    def add(self, item_id: str, tags: frozenset) -> None:
        self.items[item_id] = tags
        for t in tags:
            self.tag_freq[t] += 1
        self.total_tag_uses += len(tags)

    def weights(self) -> dict[str, float]:
        """Item weight of every item in the profile."""
        return {r: item_weight(self, r) for r in self.items}


@dataclass
class ItemProfile:
    item_id: str
    taggers: dict = field(default_factory=dict)  # user_id -> frozenset of tags
    tag_user_count: Counter = field(default_factory=Counter)
    total_tag_users: int = 0

    def add(self, user_id: str, tags: frozenset) -> None:
        self.taggers[user_id] = tags
        for t in tags:
            self.tag_user_count[t] += 1
        self.total_tag_users += len(tags)

    def trusts(self) -> dict[str, float]:
        return {u: transaction_trust(self, u) for u in self.taggers}


def tag_score(profile: UserProfile, tag: str) -> float:
    freq = profile.tag_freq.get(tag, 0)
    if freq == 0:
        raise UnknownTag(f"user {profile.user_id!r} never used tag {tag!r}")
    return freq / profile.total_tag_uses


def item_weight(profile: UserProfile, item_id: str) -> float:
    try:
        tags = profile.items[item_id]
    except KeyError:
        raise UnknownItem(f"user {profile.user_id!r} has not tagged {item_id!r}") from None
    return sum(profile.tag_freq[t] for t in tags) / profile.total_tag_uses


def tag_information_value(profile: ItemProfile, tag: str) -> float:
    count = profile.tag_user_count.get(tag, 0)
    if count == 0:
        raise UnknownTag(f"tag {tag!r} never used on item {profile.item_id!r}")
    return count / profile.total_tag_users


def transaction_trust(profile: ItemProfile, user_id: str) -> float:
    try:
        tags = profile.taggers[user_id]
    except KeyError:
        raise UnknownUser(f"user {user_id!r} has not tagged {profile.item_id!r}") from None
    counts = profile.tag_user_count
    return sum(counts[t] for t in tags) / (len(tags) * profile.total_tag_users)


def apply_transaction(tx: Transaction, store) -> tuple[UserProfile, ItemProfile]:
    """Record ``tx`` in the user's and the item's profile.

    Calls for the same user or item must not run concurrently; the store
    only serializes individual writes.
    """
    if not tx.tags:
        raise ValueError("transaction has no tags")
    ukey, ikey = user_key(tx.user_id), item_key(tx.item_id)
    current = store.get(ukey)
    if current is not None and tx.item_id in current.items:
        raise DuplicateTransaction(f"{tx.user_id!r} already tagged {tx.item_id!r}")
    current_item = store.get(ikey)
    if current_item is not None and tx.user_id in current_item.taggers:
        raise DuplicateTransaction(f"{tx.item_id!r} already tagged by {tx.user_id!r}")

    def add_to_user(p):
        p = p if p is not None else UserProfile(tx.user_id)
        p.add(tx.item_id, tx.tags)
        return p

    def add_to_item(p):
        p = p if p is not None else ItemProfile(tx.item_id)
        p.add(tx.user_id, tx.tags)
        return p

    return store.update(ukey, add_to_user), store.update(ikey, add_to_item)


def build_profiles(transactions: Iterable[Transaction], store) -> None:
    for tx in transactions:
        apply_transaction(tx, store)


def encode_profile(profile) -> dict:
    """JSON-ready record for the file-backed store."""
    if isinstance(profile, UserProfile):
        return {
            "kind": USER,
            "id": profile.user_id,
            "items": {r: sorted(ts) for r, ts in sorted(profile.items.items())},
        }
    return {
        "kind": ITEM,
        "id": profile.item_id,
        "taggers": {u: sorted(ts) for u, ts in sorted(profile.taggers.items())},
    }


def decode_profile(record: dict):
    if record["kind"] == USER:
        p = UserProfile(record["id"])
        for r, ts in record["items"].items():
            p.add(r, frozenset(ts))
        return p
    p = ItemProfile(record["id"])
    for u, ts in record["taggers"].items():
        p.add(u, frozenset(ts))
    return p
