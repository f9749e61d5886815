"""Trust-aware collaborative filtering over social-tagging data."""

__version__ = "0.1.0"

from .ingest import (
    Corpus,
    FieldLayout,
    ParseError,
    TagAssignment,
    Transaction,
    filter_rare_items,
    group_transactions,
    parse_tag_assignments,
    split_per_user,
)
from .profiles import ItemProfile, UserProfile, apply_transaction, build_profiles
from .recommend import RecommendationList, recommend_top_n
from .scoring import VARIANTS, ScoringConfig, Variant, WeightingScheme
from .store import ProfileKey, ShardedStore, ShardMap
from .evaluation import EvaluationReport, run_experiment

__all__ = [
    "Corpus",
    "EvaluationReport",
    "FieldLayout",
    "ItemProfile",
    "ParseError",
    "ProfileKey",
    "RecommendationList",
    "ScoringConfig",
    "ShardMap",
    "ShardedStore",
    "TagAssignment",
    "Transaction",
    "UserProfile",
    "VARIANTS",
    "Variant",
    "WeightingScheme",
    "apply_transaction",
    "build_profiles",
    "filter_rare_items",
    "group_transactions",
    "parse_tag_assignments",
    "recommend_top_n",
    "run_experiment",
    "split_per_user",
]
