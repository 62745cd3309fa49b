"""Canonical, checksummed, versioned text files.

Every persisted artifact is a single header line
``<magic> format=<version> sha256=<hex>`` followed by canonical JSON
(sorted keys, two-space indent, shortest round-trip float repr).
Equal payloads always serialize to identical bytes, and writes are
atomic (temp file + rename) and fsynced before they are visible.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import Any

from .errors import CorruptFile, IoError, VersionMismatch

BASE_MAGIC = "sprintctl-base"
PROJECT_MAGIC = "sprintctl-project"


def canonical_dumps(payload: Any) -> str:
    """Serialize a JSON-able payload to its unique canonical text form."""
    return json.dumps(payload, sort_keys=True, indent=2, allow_nan=False)


def checksum(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def render(magic: str, version: int, payload: Any) -> str:
    body = canonical_dumps(payload)
    return f"{magic} format={version} sha256={checksum(body)}\n{body}\n"


def write_file(path: str | Path, magic: str, version: int, payload: Any) -> None:
    """Atomically write one canonical file (write temp, fsync, rename)."""
    path = Path(path)
    text = render(magic, version, payload)
    try:
        fd, tmp_name = tempfile.mkstemp(
            dir=str(path.parent) or ".", prefix=path.name + ".", suffix=".tmp"
        )
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp_name, path)
        except BaseException:
            try:
                os.unlink(tmp_name)
            except OSError:
                pass
            raise
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_file(path: str | Path, magic: str, version: int) -> Any:
    """Read and verify a canonical file; returns the decoded payload."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc

    header, _, body = text.partition("\n")
    fields = header.split()
    if len(fields) != 3 or fields[0] != magic:
        raise CorruptFile(f"{path}: not a {magic} file")
    if not fields[1].startswith("format=") or not fields[2].startswith("sha256="):
        raise CorruptFile(f"{path}: malformed header {header!r}")
    try:
        found_version = int(fields[1][len("format="):])
    except ValueError as exc:
        raise CorruptFile(f"{path}: malformed format version in header") from exc
    if found_version != version:
        raise VersionMismatch(
            f"{path}: format version {found_version}, expected {version}"
        )
    if not body.endswith("\n"):
        raise CorruptFile(f"{path}: truncated payload")
    body = body[:-1]
    expected = fields[2][len("sha256="):]
    if checksum(body) != expected:
        raise CorruptFile(f"{path}: checksum mismatch")
    try:
        return json.loads(body)
    except json.JSONDecodeError as exc:
        raise CorruptFile(f"{path}: invalid payload: {exc}") from exc
