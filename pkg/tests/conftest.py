import os
import random
import sys
from pathlib import Path

import pytest

from tagtrust.ingest import Transaction
from tagtrust.profiles import build_profiles
from tagtrust.store import ShardedStore

sys.path.insert(0, str(Path(__file__).parent))

HETREC_DEFAULT = Path(__file__).resolve().parents[1] / "data" / "hetrec2011-movielens-2k-v2" / "user_taggedmovies-timestamps.dat"


def tx(user, item, *tags):
    return Transaction(user, item, frozenset(tags))


def random_triples(seed, max_users=10, max_items=15, max_tags=8):
    """Small random corpus: list of (user, item, tags)."""
    rng = random.Random(seed)
    n_users = rng.randint(2, max_users)
    n_items = rng.randint(2, max_items)
    n_tags = rng.randint(1, max_tags)
    tags = [f"t{i}" for i in range(n_tags)]
    triples = []
    for u in range(n_users):
        k = rng.randint(1, n_items)
        for r in rng.sample(range(n_items), k):
            ts = rng.sample(tags, rng.randint(1, min(3, n_tags)))
            triples.append((f"u{u}", f"m{r:02d}", frozenset(ts)))
    return triples


def synthetic_transactions(seed=7, n_users=120, n_items=150, n_tags=40):
    """Larger corpus with skewed item popularity and per-user favourite tags."""
    rng = random.Random(seed)
    item_pop = [1.0 / (i + 1) ** 0.8 for i in range(n_items)]
    out = []
    for u in range(n_users):
        favourites = rng.sample(range(n_tags), 4)
        n = rng.randint(3, 25)
        chosen = set()
        while len(chosen) < n:
            chosen.add(rng.choices(range(n_items), weights=item_pop)[0])
        for r in sorted(chosen):
            k = rng.randint(1, 3)
            ts = {
                f"tag{rng.choice(favourites) if rng.random() < 0.7 else (r % n_tags)}"
                for _ in range(k)
            }
            out.append(Transaction(f"u{u:03d}", f"i{r:03d}", frozenset(ts)))
    return out


def store_from(transactions, shard_count=1):
    store = ShardedStore.in_memory(shard_count)
    build_profiles(transactions, store)
    return store


@pytest.fixture
def toy_corpus():
    # u shares m1 with v and m2 with w; x and y are not u's neighbors.
    return [
        tx("u", "m1", "a", "b"),
        tx("u", "m2", "a"),
        tx("v", "m1", "a"),
        tx("v", "m3", "c"),
        tx("w", "m2", "b"),
        tx("w", "m4", "b", "c"),
        tx("w", "m5", "a"),
        tx("x", "m5", "c"),
        tx("x", "m6", "a"),
        tx("y", "m6", "a"),
    ]


@pytest.fixture
def toy_store(toy_corpus):
    return store_from(toy_corpus)


@pytest.fixture(scope="session")
def hetrec_path():
    path = Path(os.environ.get("TAGTRUST_HETREC", HETREC_DEFAULT))
    if not path.exists():
        pytest.fail(
            f"HetRec 2011 MovieLens tag file not found at {path}; "
            "download hetrec2011-movielens-2k-v2 and set TAGTRUST_HETREC"
        )
    return path


# One summary line per acceptance criterion, whatever the failure mode.
_criteria: list = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): an acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        status = "PASS" if rep.passed else ("SKIP" if rep.skipped else "FAIL")
        _criteria.append(f"[{status}] {marker.args[0]}")


def pytest_terminal_summary(terminalreporter):
    if _criteria:
        terminalreporter.section("acceptance criteria")
        for line in _criteria:
            terminalreporter.write_line(line)
