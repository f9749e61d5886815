"""Neighbor and candidate-item discovery through item and user profiles.

Nothing here scans the corpus. Neighbors of ``u`` come from the tagger lists
of the items ``u`` tagged; candidates come from the neighbors' own profiles.
"""

from __future__ import annotations

from dataclasses import dataclass

from .store import item_key, user_key


@dataclass(frozen=True)
class NeighborSet:
    user_id: str
    neighbors: frozenset

    def __len__(self) -> int:
        return len(self.neighbors)

    def __iter__(self):
        return iter(sorted(self.neighbors))


@dataclass(frozen=True)
class CandidateSet:
    user_id: str
    candidates: frozenset

    def __len__(self) -> int:
        return len(self.candidates)

    def __iter__(self):
        return iter(sorted(self.candidates))


def user_items(user: str, store) -> frozenset:
    profile = store.get(user_key(user))
    return frozenset(profile.items) if profile is not None else frozenset()


def neighbors_of(user: str, store) -> NeighborSet:
    found: set[str] = set()
    for item in user_items(user, store):
        profile = store.get(item_key(item))
        if profile is not None:
            found.update(profile.taggers)
    found.discard(user)
    return NeighborSet(user, frozenset(found))


def candidate_items(user: str, neighbors: NeighborSet, store) -> CandidateSet:
    found: set[str] = set()
    for v in neighbors.neighbors:
        profile = store.get(user_key(v))
        if profile is not None:
            found.update(profile.items)
    return CandidateSet(user, frozenset(found - user_items(user, store)))


def reduced_matrix_footprint(
    user: str, neighbors: NeighborSet, candidates: CandidateSet, store
) -> tuple[int, int]:
    """(rows, columns) of the user's local matrix: neighbors by (own items + candidates)."""
    return len(neighbors), len(candidates.candidates | user_items(user, store))
