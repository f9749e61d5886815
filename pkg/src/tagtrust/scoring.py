"""Neighbor similarity, tag-behavior trust, and their fused rank value.

All floating sums go through :func:`math.fsum`, so results do not depend on
set iteration order (and therefore not on the process hash seed).
"""

from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Optional

from .neighborhood import CandidateSet, NeighborSet, candidate_items, neighbors_of
from .profiles import UnknownUser, UserProfile, item_weight, transaction_trust
from .store import item_key, user_key

# Spread below which min-max normalization treats all values as equal.
DEGENERATE_RANGE = 1e-12
# Decimal places kept when comparing floats for ordering; finer noise is a tie.
ORDER_DECIMALS = 12


class WeightingScheme(str, enum.Enum):
    BINARY = "binary"
    ITEM_WEIGHT = "item_weight"


MATRIX = "matrix"
STRICT = "strict"
REDUCED_POOL = "reduced"
GLOBAL_POOL = "global"
COUNT = "count"
IMPORTANCE_SUM = "importance_sum"


@dataclass(frozen=True)
class ScoringConfig:
    """Knobs for similarity, trust and rank fusion.

    ``lam`` weights normalized similarity against normalized trust.
    ``pool`` picks the user set behind resource importance: the evaluating
    user's local matrix (``"reduced"``) or every user (``"global"``, needs
    ``global_user_count``). ``trust_denominator`` divides the
    importance-weighted trust sum by the number of transactions
    (``"count"``) or by the summed importances (``"importance_sum"``).
    ``similarity_mode`` is ``"matrix"`` (cosine of full local-matrix rows) or
    ``"strict"`` (cosine restricted to co-tagged items).
    """

    lam: float = 0.5
    pool: str = REDUCED_POOL
    trust_denominator: str = COUNT
    similarity_mode: str = MATRIX
    global_user_count: Optional[int] = None

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lam must be in [0, 1]")
        if self.pool not in (REDUCED_POOL, GLOBAL_POOL):
            raise ValueError(f"unknown pool {self.pool!r}")
        if self.pool == GLOBAL_POOL and not self.global_user_count:
            raise ValueError("global pool needs global_user_count")
        if self.trust_denominator not in (COUNT, IMPORTANCE_SUM):
            raise ValueError(f"unknown trust denominator {self.trust_denominator!r}")
        if self.similarity_mode not in (MATRIX, STRICT):
            raise ValueError(f"unknown similarity mode {self.similarity_mode!r}")


@dataclass(frozen=True)
class Variant:
    id: str
    scheme: WeightingScheme
    trust_enabled: bool


VARIANTS = {
    "basic": Variant("basic", WeightingScheme.BINARY, False),
    "weighted": Variant("weighted", WeightingScheme.ITEM_WEIGHT, False),
    "basic_trust": Variant("basic_trust", WeightingScheme.BINARY, True),
    "weighted_trust": Variant("weighted_trust", WeightingScheme.ITEM_WEIGHT, True),
}


class GlobalPool:
    """Stands for "all users" without enumerating them."""

    def __init__(self, size: int):
        self.size = size

    def __contains__(self, user) -> bool:
        return True

    def __len__(self) -> int:
        return self.size


def cell_values(profile: Optional[UserProfile], scheme: WeightingScheme) -> dict[str, float]:
    """The user's row of the user-item matrix under ``scheme``."""
    if profile is None:
        return {}
    if scheme == WeightingScheme.BINARY:
        return {r: 1.0 for r in profile.items}
    return {r: item_weight(profile, r) for r in profile.items}


def cosine(a: Mapping[str, float], b: Mapping[str, float], mode: str = MATRIX) -> float:
    common = a.keys() & b.keys()
    if not common:
        return 0.0
    dot = math.fsum(a[x] * b[x] for x in common)
    if mode == STRICT:
        na = math.fsum(a[x] ** 2 for x in common)
        nb = math.fsum(b[x] ** 2 for x in common)
    else:
        # Every column of u's local matrix that v touches is one of v's items
        # and vice versa, so the local rows have the same norms as the full ones.
        na = math.fsum(w * w for w in a.values())
        nb = math.fsum(w * w for w in b.values())
    return min(1.0, dot / math.sqrt(na * nb))


def similarity(u: str, v: str, scheme: WeightingScheme, store, mode: str = MATRIX) -> float:
    a = cell_values(store.get(user_key(u)), scheme)
    b = cell_values(store.get(user_key(v)), scheme)
    return cosine(a, b, mode)


def resource_importance(item: str, pool, store) -> float:
    """Share of the pool's users who tagged ``item``."""
    if len(pool) == 0:
        raise ValueError("empty user pool")
    profile = store.get(item_key(item))
    if profile is None:
        return 0.0
    if isinstance(pool, GlobalPool):
        return len(profile.taggers) / len(pool)
    return sum(1 for u in profile.taggers if u in pool) / len(pool)


def user_trust(
    u: str,
    n: str,
    pool,
    store,
    denominator: str = COUNT,
    importance_cache: Optional[dict] = None,
) -> float:
    """Importance-weighted aggregate of ``n``'s transaction trusts, as seen by ``u``.

    ``u`` only matters through ``pool``; importances are memoized in
    ``importance_cache`` when one is given (it must belong to that pool).
    """
    profile = store.get(user_key(n))
    if profile is None or not profile.items:
        raise UnknownUser(f"user {n!r} has no transactions")
    cache = importance_cache if importance_cache is not None else {}
    weighted = []
    importances = []
    for r in profile.items:
        if r not in cache:
            cache[r] = resource_importance(r, pool, store)
        imp = cache[r]
        weighted.append(imp * transaction_trust(store.get(item_key(r)), n))
        importances.append(imp)
    total = math.fsum(weighted)
    if denominator == COUNT:
        return total / len(weighted)
    norm = math.fsum(importances)
    return total / norm if norm > 0 else 0.0


def normalize_minmax(values: Mapping[str, float]) -> dict[str, float]:
    """Min-max scale to [0, 1]; a degenerate range maps everything to 1."""
    if not values:
        raise ValueError("cannot normalize an empty mapping")
    lo, hi = min(values.values()), max(values.values())
    span = hi - lo
    if span <= DEGENERATE_RANGE:
        return {k: 1.0 for k in values}
    return {k: (x - lo) / span for k, x in values.items()}


def rank_value(value: float, trust: float, lam: float) -> float:
    return lam * value + (1.0 - lam) * trust


@dataclass(frozen=True)
class NeighborRecord:
    neighbor_id: str
    similarity: float
    trust: Optional[float]
    value: float
    t: float
    rank: float


@dataclass
class NeighborContext:
    user_id: str
    neighbors: NeighborSet
    candidates: CandidateSet
    records: dict = field(default_factory=dict)  # neighbor_id -> NeighborRecord


class ProfileCache:
    """Memoized rows and transaction trusts derived from a store.

    Entries are computed on first use and never refreshed, so a cache is only
    valid while the store is not written to. Sharing one across users
    saves recomputation but lets one user's lookups serve another's.
    """

    def __init__(self, store):
        self.store = store
        self._profiles: dict[str, Optional[UserProfile]] = {}
        self._rows: dict = {}
        self._trusts: dict[str, dict[str, float]] = {}
        self._tagger_counts: dict[str, int] = {}

    def profile(self, user: str) -> Optional[UserProfile]:
        if user not in self._profiles:
            self._profiles[user] = self.store.get(user_key(user))
        return self._profiles[user]

    def items(self, user: str):
        p = self.profile(user)
        return p.items.keys() if p is not None else ()

    def row(self, user: str, scheme: WeightingScheme) -> tuple[dict[str, float], float]:
        """(cell values, squared norm) of the user's matrix row."""
        key = (user, scheme)
        if key not in self._rows:
            values = cell_values(self.profile(user), scheme)
            self._rows[key] = (values, math.fsum(w * w for w in values.values()))
        return self._rows[key]

    def transaction_trusts(self, user: str) -> dict[str, float]:
        if user not in self._trusts:
            self._trusts[user] = {
                r: transaction_trust(self.store.get(item_key(r)), user) for r in self.items(user)
            }
        return self._trusts[user]

    def tagger_count(self, item: str) -> int:
        if item not in self._tagger_counts:
            p = self.store.get(item_key(item))
            self._tagger_counts[item] = len(p.taggers) if p is not None else 0
        return self._tagger_counts[item]


def neighbor_similarities(
    user: str,
    neighbors: NeighborSet,
    scheme: WeightingScheme,
    store,
    mode: str = MATRIX,
    cache: Optional[ProfileCache] = None,
) -> dict[str, float]:
    cache = cache if cache is not None else ProfileCache(store)
    mine, my_norm = cache.row(user, scheme)
    out = {}
    for v in neighbors.neighbors:
        theirs, their_norm = cache.row(v, scheme)
        if mode == MATRIX:
            common = mine.keys() & theirs.keys()
            if not common:
                out[v] = 0.0
                continue
            dot = math.fsum(mine[x] * theirs[x] for x in common)
            out[v] = min(1.0, dot / math.sqrt(my_norm * their_norm))
        else:
            out[v] = cosine(mine, theirs, mode)
    return out


def trust_pool(user: str, neighbors: NeighborSet, config: ScoringConfig):
    if config.pool == GLOBAL_POOL:
        return GlobalPool(config.global_user_count)
    return neighbors.neighbors | {user}


def neighbor_trusts(
    user: str,
    neighbors: NeighborSet,
    store,
    config: ScoringConfig,
    cache: Optional[ProfileCache] = None,
) -> dict[str, float]:
    """:func:`user_trust` of every neighbor, sharing the importance computation."""
    cache = cache if cache is not None else ProfileCache(store)
    pool = trust_pool(user, neighbors, config)
    size = len(pool)
    if isinstance(pool, GlobalPool):
        def importance(r):
            return cache.tagger_count(r) / size
    else:
        # Every pool member's items are columns of the local matrix, so
        # counting over the pool's rows gives |taggers(r) & pool| for all r.
        counts: Counter = Counter()
        for w in pool:
            counts.update(cache.items(w))

        def importance(r):
            return counts[r] / size

    out = {}
    for n in neighbors.neighbors:
        trusts = cache.transaction_trusts(n)
        if not trusts:
            raise UnknownUser(f"user {n!r} has no transactions")
        imps = {r: importance(r) for r in trusts}
        total = math.fsum(imps[r] * v for r, v in trusts.items())
        if config.trust_denominator == COUNT:
            out[n] = total / len(trusts)
        else:
            norm = math.fsum(imps.values())
            out[n] = total / norm if norm > 0 else 0.0
    return out


def fuse(
    user: str,
    neighbors: NeighborSet,
    candidates: CandidateSet,
    sims: Mapping[str, float],
    trusts: Optional[Mapping[str, float]],
    lam: float,
) -> NeighborContext:
    """Assemble a context from raw values. ``trusts=None`` ranks by similarity alone."""
    ctx = NeighborContext(user, neighbors, candidates)
    if not sims:
        return ctx
    values = normalize_minmax(sims)
    if trusts is None:
        for n, s in sims.items():
            ctx.records[n] = NeighborRecord(n, s, None, values[n], 0.0, values[n])
        return ctx
    ts = normalize_minmax(trusts)
    for n, s in sims.items():
        ctx.records[n] = NeighborRecord(
            n, s, trusts[n], values[n], ts[n], rank_value(values[n], ts[n], lam)
        )
    return ctx


def build_context(
    user: str,
    store,
    scheme: WeightingScheme,
    config: ScoringConfig = ScoringConfig(),
    trust_enabled: bool = True,
    cache: Optional[ProfileCache] = None,
) -> NeighborContext:
    cache = cache if cache is not None else ProfileCache(store)
    neighbors = neighbors_of(user, store)
    candidates = candidate_items(user, neighbors, store)
    sims = neighbor_similarities(user, neighbors, scheme, store, config.similarity_mode, cache)
    trusts = neighbor_trusts(user, neighbors, store, config, cache) if trust_enabled else None
    return fuse(user, neighbors, candidates, sims, trusts, config.lam)
