"""Offline evaluation: recall, precision and coverage over a k sweep."""

from __future__ import annotations

import csv
import io
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

from .ingest import Corpus
from .neighborhood import candidate_items, neighbors_of
from .profiles import build_profiles
from .recommend import RecommendationList, rank_order, recommend_from_context
from .scoring import (
    GLOBAL_POOL,
    VARIANTS,
    ProfileCache,
    ScoringConfig,
    Variant,
    fuse,
    neighbor_similarities,
    neighbor_trusts,
)
from .store import ShardedStore

log = logging.getLogger(__name__)

DEFAULT_K_VALUES = tuple(range(5, 55, 5))
CSV_HEADER = ["variant", "k", "recall", "precision", "coverage", "users_evaluated"]

# Alias kept for callers thinking in terms of experiment variants.
ExperimentVariant = Variant


def recall_precision_at_n(
    recommendations: RecommendationList | Sequence[str],
    test_items: set,
    n: int,
    precision_denominator: str = "n",
) -> tuple[float, float]:
    """Hit-based recall and precision of one user's list.

    ``precision_denominator="n"`` divides hits by ``n`` even for short lists;
    ``"length"`` divides by the actual list length (0 for an empty list).
    """
    items = recommendations.items() if isinstance(recommendations, RecommendationList) else list(recommendations)
    hits = len(set(items) & set(test_items))
    recall = hits / len(test_items)
    if precision_denominator == "n":
        precision = hits / n
    elif precision_denominator == "length":
        precision = hits / len(items) if items else 0.0
    else:
        raise ValueError(f"unknown precision denominator {precision_denominator!r}")
    return recall, precision


def coverage(all_recommendations: Iterable, test_corpus: Corpus) -> float:
    """Fraction of distinct test items recommended to at least one user."""
    test_items = test_corpus.items()
    if not test_items:
        raise ValueError("empty test corpus")
    recommended: set[str] = set()
    for rec in all_recommendations:
        recommended.update(rec.items() if isinstance(rec, RecommendationList) else rec)
    return len(recommended & test_items) / len(test_items)


@dataclass(frozen=True)
class ReportRow:
    variant: str
    k: int
    recall: float
    precision: float
    coverage: float
    users_evaluated: int


@dataclass
class EvaluationReport:
    rows: list = field(default_factory=list)
    users_without_test: int = 0
    users_without_neighbors: int = 0

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in self.rows:
            writer.writerow(
                [r.variant, r.k, f"{r.recall:.6f}", f"{r.precision:.6f}", f"{r.coverage:.6f}", r.users_evaluated]
            )
        return buf.getvalue()

    def row(self, variant: str, k: int) -> ReportRow:
        for r in self.rows:
            if r.variant == variant and r.k == k:
                return r
        raise KeyError((variant, k))

    def series(self, variant: str, metric: str) -> dict[int, float]:
        return {r.k: getattr(r, metric) for r in self.rows if r.variant == variant}


def evaluate_user(
    user: str,
    test_items: set,
    store,
    variants: Sequence[Variant],
    k_values: Sequence[int],
    n: int,
    config: ScoringConfig,
    precision_denominator: str = "n",
    cache: Optional[ProfileCache] = None,
) -> Optional[dict]:
    """Per-(variant, k) ``(recall, precision, recommended items)`` for one user.

    Returns ``None`` when the user has no neighbors. A ``cache`` shared
    across calls must not outlive any change to ``store``.
    """
    cache = cache if cache is not None else ProfileCache(store)
    neighbors = neighbors_of(user, store)
    if not neighbors.neighbors:
        return None
    candidates = candidate_items(user, neighbors, store)
    sims = {
        scheme: neighbor_similarities(user, neighbors, scheme, store, config.similarity_mode, cache)
        for scheme in {v.scheme for v in variants}
    }
    trusts = None
    if any(v.trust_enabled for v in variants):
        trusts = neighbor_trusts(user, neighbors, store, config, cache)
    out = {}
    for variant in variants:
        ctx = fuse(
            user, neighbors, candidates, sims[variant.scheme],
            trusts if variant.trust_enabled else None, config.lam,
        )
        order = rank_order(ctx)
        for k in k_values:
            rec = recommend_from_context(ctx, k, n, variant.scheme, store, cache, order)
            recall, precision = recall_precision_at_n(rec, test_items, n, precision_denominator)
            out[(variant.id, k)] = (recall, precision, tuple(rec.items()))
    return out


_worker_state: dict = {}


def _init_worker(store, args) -> None:
    # Profiles are read-only during an experiment, so derived rows and
    # trusts can be shared by every user this worker evaluates.
    _worker_state["store"] = store
    _worker_state["args"] = args
    _worker_state["cache"] = ProfileCache(store)


def _evaluate_chunk(chunk):
    store = _worker_state["store"]
    args = _worker_state["args"]
    cache = _worker_state["cache"]
    return [(user, evaluate_user(user, test_items, store, *args, cache=cache)) for user, test_items in chunk]


def run_experiment(
    training: Corpus,
    testing: Corpus,
    variants: Sequence[Variant] = tuple(VARIANTS.values()),
    k_values: Sequence[int] = DEFAULT_K_VALUES,
    n: int = 10,
    config: ScoringConfig = ScoringConfig(),
    jobs: int = 1,
    precision_denominator: str = "n",
    store=None,
) -> EvaluationReport:
    """Evaluate every variant at every neighborhood size.

    Profiles are built from ``training`` unless a populated ``store`` is
    passed. Users are averaged only if they have test items and at least one
    neighbor; results do not depend on ``jobs``.
    """
    if not k_values:
        raise ValueError("k_values must be non-empty")
    if store is None:
        store = ShardedStore.in_memory()
        build_profiles(training, store)
    if config.pool == GLOBAL_POOL and config.global_user_count is None:
        config = replace(config, global_user_count=len(training.users()))

    test_by_user = testing.items_by_user()
    train_users = training.users()
    users = sorted(test_by_user)
    work = [(u, test_by_user[u]) for u in users]
    args = (tuple(variants), tuple(k_values), n, config, precision_denominator)

    if jobs <= 1 or len(work) < 2:
        _init_worker(store, args)
        results = _evaluate_chunk(work)
        _worker_state.clear()
    else:
        if not isinstance(store, ShardedStore) or any(hasattr(s, "flush") for s in store.shards):
            store = store.to_memory()
        size = max(1, math.ceil(len(work) / (jobs * 4)))
        chunks = [work[i : i + size] for i in range(0, len(work), size)]
        with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker, initargs=(store, args)) as pool:
            results = [pair for part in pool.map(_evaluate_chunk, chunks) for pair in part]

    evaluated = [(u, res) for u, res in results if res is not None]
    report = EvaluationReport(
        users_without_test=len(train_users - set(test_by_user)),
        users_without_neighbors=len(results) - len(evaluated),
    )
    for variant in variants:
        for k in k_values:
            recalls, precisions, lists = [], [], []
            for _, res in evaluated:
                recall, precision, items = res[(variant.id, k)]
                recalls.append(recall)
                precisions.append(precision)
                lists.append(items)
            count = len(evaluated)
            report.rows.append(
                ReportRow(
                    variant.id,
                    k,
                    math.fsum(recalls) / count if count else 0.0,
                    math.fsum(precisions) / count if count else 0.0,
                    coverage(lists, testing) if len(testing) else 0.0,
                    count,
                )
            )
    _log_monotone(report, variants, k_values)
    return report


def monotone_recall(report: EvaluationReport, variants: Sequence[Variant], k_values: Sequence[int]) -> dict[str, bool]:
    """Whether recall at the largest k is at least recall at the smallest, per variant."""
    lo, hi = min(k_values), max(k_values)
    return {v.id: report.row(v.id, hi).recall >= report.row(v.id, lo).recall for v in variants}


def _log_monotone(report, variants, k_values) -> None:
    if len(set(k_values)) < 2:
        return
    for variant, ok in monotone_recall(report, variants, k_values).items():
        if not ok:
            log.warning("recall of %s does not grow over the k sweep", variant)


def default_jobs() -> int:
    return os.cpu_count() or 1
