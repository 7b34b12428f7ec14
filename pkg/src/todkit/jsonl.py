"""Line-delimited JSON helpers used by every on-disk format in the toolkit."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterable, Iterator

from .errors import SchemaError


def read_records(path: str | Path) -> Iterator[tuple[int, dict[str, Any]]]:
    """Yield (line_number, record) pairs; blank lines are skipped."""
    path = Path(path)
    with path.open("r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"invalid JSON: {exc}", path=str(path), line=lineno) from exc
            if not isinstance(record, dict):
                raise SchemaError("record is not an object", path=str(path), line=lineno)
            yield lineno, record


def dump_record(record: dict[str, Any]) -> str:
    """Serialize one record deterministically (insertion key order, UTF-8)."""
    return json.dumps(record, ensure_ascii=False)


def write_records(path: str | Path, records: Iterable[dict[str, Any]]) -> int:
    """Write records one per line; returns the number of records written."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        for record in records:
            handle.write(dump_record(record))
            handle.write("\n")
            count += 1
    return count


def require_keys(
    record: dict[str, Any],
    required: Iterable[str],
    optional: Iterable[str] = (),
    *,
    path: str | None = None,
    line: int | None = None,
    what: str = "record",
) -> None:
    """Reject records with missing required keys or any unknown key."""
    required = set(required)
    allowed = required | set(optional)
    keys = set(record)
    missing = required - keys
    unknown = keys - allowed
    if missing:
        raise SchemaError(
            f"{what} is missing required fields: {sorted(missing)}", path=path, line=line
        )
    if unknown:
        raise SchemaError(
            f"{what} has unknown fields: {sorted(unknown)}", path=path, line=line
        )
