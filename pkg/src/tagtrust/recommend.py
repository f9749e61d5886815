"""Top-k neighbor selection and top-N item scoring."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Optional

from .profiles import item_weight
from .scoring import (
    ORDER_DECIMALS,
    NeighborContext,
    ProfileCache,
    ScoringConfig,
    Variant,
    WeightingScheme,
    build_context,
)
from .store import user_key


@dataclass(frozen=True)
class RecommendationList:
    user_id: str
    entries: tuple = ()  # ((item_id, score), ...) best first

    def items(self) -> list[str]:
        return [item for item, _ in self.entries]

    def __len__(self) -> int:
        return len(self.entries)


def rank_order(context: NeighborContext) -> list[str]:
    """All neighbor ids by descending rank value, ties by ascending id."""
    ordered = sorted(
        context.records.values(),
        key=lambda rec: (-round(rec.rank, ORDER_DECIMALS), rec.neighbor_id),
    )
    return [rec.neighbor_id for rec in ordered]


def select_top_k_neighbors(context: NeighborContext, k: int) -> list[str]:
    if k < 1:
        raise ValueError("k must be >= 1")
    return rank_order(context)[:k]


def _cell(profile, item: str, scheme: WeightingScheme) -> float:
    if item not in profile.items:
        return 0.0
    if scheme == WeightingScheme.BINARY:
        return 1.0
    return item_weight(profile, item)


def score_item(
    u: str,
    item: str,
    top: list[str],
    context: NeighborContext,
    store,
    scheme: WeightingScheme = WeightingScheme.ITEM_WEIGHT,
) -> float:
    """Mean over ``top`` of (neighbor's cell value for ``item``) x (raw similarity to ``u``)."""
    if not top:
        raise ValueError("empty neighbor list")
    terms = [
        _cell(store.get(user_key(v)), item, scheme) * context.records[v].similarity
        for v in top
    ]
    return math.fsum(terms) / len(top)


def score_candidates(
    context: NeighborContext,
    top: list[str],
    store,
    scheme: WeightingScheme,
    cache: Optional[ProfileCache] = None,
) -> dict[str, float]:
    """Scores of every candidate tagged by at least one of ``top``.

    Candidates no top neighbor tagged score 0 and are left out.
    """
    if not top:
        return {}
    cache = cache if cache is not None else ProfileCache(store)
    terms: dict[str, list[float]] = defaultdict(list)
    candidates = context.candidates.candidates
    for v in top:
        row, _ = cache.row(v, scheme)
        sim = context.records[v].similarity
        for r, cell in row.items():
            if r in candidates:
                terms[r].append(cell * sim)
    return {r: math.fsum(ts) / len(top) for r, ts in terms.items()}


def top_n(scores: dict[str, float], n: int) -> tuple:
    """Positive scores only, best first, ties by ascending item id."""
    ranked = sorted(
        ((r, s) for r, s in scores.items() if s > 0),
        key=lambda rs: (-round(rs[1], ORDER_DECIMALS), rs[0]),
    )
    return tuple(ranked[:n])


def recommend_from_context(
    context: NeighborContext,
    k: int,
    n: int,
    scheme: WeightingScheme,
    store,
    cache: Optional[ProfileCache] = None,
    order: Optional[list[str]] = None,
) -> RecommendationList:
    """Top-``n`` list from the ``k`` best-ranked neighbors.

    ``order`` may carry a precomputed :func:`rank_order` of ``context``.
    """
    if n < 1:
        raise ValueError("N must be >= 1")
    if k < 1:
        raise ValueError("k must be >= 1")
    if not context.records:
        return RecommendationList(context.user_id)
    top = (order if order is not None else rank_order(context))[:k]
    scores = score_candidates(context, top, store, scheme, cache)
    return RecommendationList(context.user_id, top_n(scores, n))


def recommend_top_n(
    u: str,
    k: int,
    n: int,
    variant: Variant,
    config: ScoringConfig,
    store,
) -> RecommendationList:
    cache = ProfileCache(store)
    context = build_context(u, store, variant.scheme, config, variant.trust_enabled, cache)
    return recommend_from_context(context, k, n, variant.scheme, store, cache)
