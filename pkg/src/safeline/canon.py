"""Canonical serialization, content fingerprints, and atomic artifact IO.

Every artifact exchanged between pipeline stages is reduced to a canonical
JSON form (sorted keys, identifier-sorted lists, compact separators) before
hashing or writing, so that digests and diffs are independent of declaration
order in the source files.
"""

from __future__ import annotations

import hashlib
import json
import os
from typing import Any


def canon_dumps(obj: Any) -> str:
    """Serialize a canonical structure to its canonical JSON text."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def fingerprint(obj: Any) -> str:
    """Hex digest of the canonical form of a canonicalizable structure.

    Objects exposing ``to_canon()`` are canonicalized first; plain
    JSON-compatible structures are hashed as-is.
    """
    if hasattr(obj, "to_canon"):
        obj = obj.to_canon()
    return hashlib.sha256(canon_dumps(obj).encode("utf-8")).hexdigest()


def file_fingerprint(path: str | os.PathLike) -> str:
    """Hex digest of a file's raw bytes."""
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def write_artifact(path: str | os.PathLike, obj: Any) -> None:
    """Write an artifact atomically (temp file + rename in the same dir).

    An interrupted write never leaves a partial file at the final path.
    """
    if hasattr(obj, "to_canon"):
        obj = obj.to_canon()
    text = json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
    write_text(path, text)


def write_text(path: str | os.PathLike, text: str) -> None:
    """Atomically write text to ``path``."""
    path = os.fspath(path)
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def read_artifact(path: str | os.PathLike) -> Any:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
