"""Key-addressed profile storage split over independent shards.

Profiles are reachable only through their :class:`ProfileKey`. A
:class:`ShardMap` routes each key to one shard; shards never share state, so
they stand in for separate profile servers.
"""

from __future__ import annotations

import json
import threading
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Iterator, Optional

USER = "user"
ITEM = "item"

FILE_FORMAT_HEADER = "#tagtrust-shard v1"


@dataclass(frozen=True, order=True)
class ProfileKey:
    kind: str
    id: str

    def __post_init__(self):
        if self.kind not in (USER, ITEM):
            raise ValueError(f"unknown profile kind {self.kind!r}")
        if not self.id:
            raise ValueError("profile id must be non-empty")

    def __str__(self) -> str:
        return f"{self.kind}:{self.id}"

    @classmethod
    def from_string(cls, text: str) -> "ProfileKey":
        kind, _, ident = text.partition(":")
        return cls(kind, ident)


def user_key(user_id: str) -> ProfileKey:
    return ProfileKey(USER, user_id)


def item_key(item_id: str) -> ProfileKey:
    return ProfileKey(ITEM, item_id)


@dataclass(frozen=True)
class ShardMap:
    shard_count: int = 1

    def __post_init__(self):
        if self.shard_count < 1:
            raise ValueError("shard_count must be >= 1")

    def route(self, key: ProfileKey) -> int:
        return route(key, self)


def route(key: ProfileKey, shards: ShardMap) -> int:
    # crc32 rather than hash(): str hashing is salted per process.
    return zlib.crc32(str(key).encode("utf-8")) % shards.shard_count


class MemoryShard:
    """One in-process partition. Writes are serialized by a lock."""

    def __init__(self):
        self._data: dict[ProfileKey, Any] = {}
        self._lock = threading.Lock()

    def get(self, key: ProfileKey) -> Optional[Any]:
        return self._data.get(key)

    def put(self, key: ProfileKey, profile: Any) -> None:
        with self._lock:
            self._data[key] = profile

    def update(self, key: ProfileKey, fn: Callable[[Optional[Any]], Any]) -> Any:
        with self._lock:
            profile = fn(self._data.get(key))
            self._data[key] = profile
            return profile

    def keys(self) -> Iterator[ProfileKey]:
        return iter(list(self._data))

    def __len__(self) -> int:
        return len(self._data)

    def __getstate__(self):
        return {"_data": self._data}

    def __setstate__(self, state):
        self._data = state["_data"]
        self._lock = threading.Lock()


class FileShard(MemoryShard):
    """A shard persisted as one line-delimited JSON file.

    Records are held in memory and written out by :meth:`flush`. The first
    line of the file is a format header; each following line is
    ``{"key": "kind:id", "profile": ...}``.
    """

    def __init__(self, path, encode: Callable[[Any], Any], decode: Callable[[Any], Any]):
        super().__init__()
        self.path = Path(path)
        self._encode = encode
        self._decode = decode
        if self.path.exists():
            self._load()

    def _load(self) -> None:
        with open(self.path, encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n")
            if header != FILE_FORMAT_HEADER:
                raise ValueError(f"{self.path}: unsupported shard format {header!r}")
            for line in fh:
                if not line.strip():
                    continue
                rec = json.loads(line)
                self._data[ProfileKey.from_string(rec["key"])] = self._decode(rec["profile"])

    def flush(self) -> None:
        with self._lock:
            tmp = self.path.with_suffix(self.path.suffix + ".tmp")
            with open(tmp, "w", encoding="utf-8") as fh:
                fh.write(FILE_FORMAT_HEADER + "\n")
                for key in sorted(self._data):
                    rec = {"key": str(key), "profile": self._encode(self._data[key])}
                    fh.write(json.dumps(rec, sort_keys=True, separators=(",", ":")) + "\n")
            tmp.replace(self.path)

    def __getstate__(self):
        raise TypeError("FileShard cannot be pickled; copy it into a ShardedStore first")


class ShardedStore:
    """Profile store fanning keys out over ``shard_map.shard_count`` shards.

    ``get`` returns ``None`` for unknown keys; it never creates a profile.
    """

    def __init__(self, shard_map: ShardMap = ShardMap(), shards: Optional[list] = None):
        self.shard_map = shard_map
        if shards is None:
            shards = [MemoryShard() for _ in range(shard_map.shard_count)]
        if len(shards) != shard_map.shard_count:
            raise ValueError("number of shards does not match shard_count")
        self.shards = shards

    @classmethod
    def in_memory(cls, shard_count: int = 1) -> "ShardedStore":
        return cls(ShardMap(shard_count))

    @classmethod
    def open_files(cls, directory, shard_count: int, encode, decode) -> "ShardedStore":
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        shards = [
            FileShard(directory / f"shard-{i:04d}.jsonl", encode, decode)
            for i in range(shard_count)
        ]
        return cls(ShardMap(shard_count), shards)

    def shard_for(self, key: ProfileKey):
        return self.shards[route(key, self.shard_map)]

    def get(self, key: ProfileKey) -> Optional[Any]:
        return self.shard_for(key).get(key)

    def put(self, key: ProfileKey, profile: Any) -> bool:
        self.shard_for(key).put(key, profile)
        return True

    def update(self, key: ProfileKey, fn: Callable[[Optional[Any]], Any]) -> Any:
        """Atomically replace the profile at ``key`` with ``fn(current)``."""
        return self.shard_for(key).update(key, fn)

    def keys(self, kind: Optional[str] = None) -> list[ProfileKey]:
        out = [k for shard in self.shards for k in shard.keys()]
        if kind is not None:
            out = [k for k in out if k.kind == kind]
        return sorted(out)

    def flush(self) -> None:
        for shard in self.shards:
            if hasattr(shard, "flush"):
                shard.flush()

    def to_memory(self) -> "ShardedStore":
        """Copy into a picklable in-memory store with the same routing."""
        copy = ShardedStore(self.shard_map)
        for src, dst in zip(self.shards, copy.shards):
            for key in src.keys():
                dst.put(key, src.get(key))
        return copy


class RecordingStore:
    """Read-through wrapper that logs every key passed to :meth:`get`."""

    def __init__(self, inner):
        self.inner = inner
        self.reads: list[ProfileKey] = []

    def get(self, key: ProfileKey):
        self.reads.append(key)
        return self.inner.get(key)

    def put(self, key: ProfileKey, profile) -> bool:
        return self.inner.put(key, profile)

    def update(self, key: ProfileKey, fn):
        return self.inner.update(key, fn)

    def read_set(self) -> set[ProfileKey]:
        return set(self.reads)

    def reset(self) -> None:
        self.reads.clear()
