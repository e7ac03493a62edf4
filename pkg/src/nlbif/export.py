"""Deterministic CSV/JSON writers and the artifact manifest."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from pathlib import Path

import numpy as np

__all__ = ["to_jsonable", "dumps_json", "write_json", "write_csv", "write_text", "ArtifactWriter"]


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dumps_json(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return repr(v) if math.isfinite(v) else "nan"
    return str(v)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="\n")


def write_json(path: Path, obj) -> None:
    write_text(path, dumps_json(obj))


def write_csv(path: Path, header, rows) -> None:
    write_text(path, csv_text(header, rows))


class ArtifactWriter:
    """Writes files under one directory and remembers them for the manifest."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.files: list[str] = []

    def _track(self, rel: str) -> Path:
        if rel not in self.files:
            self.files.append(rel)
        return self.root / rel

    def json(self, rel: str, obj) -> None:
        write_json(self._track(rel), obj)

    def csv(self, rel: str, header, rows) -> None:
        write_csv(self._track(rel), header, rows)

    def text(self, rel: str, text: str) -> None:
        write_text(self._track(rel), text)

    def manifest(self, tasks: dict, status: int) -> dict:
        entries = []
        for rel in sorted(self.files):
            data = (self.root / rel).read_bytes()
            entries.append({"path": rel, "sha256": hashlib.sha256(data).hexdigest(), "bytes": len(data)})
        man = {"status": status, "tasks": tasks, "artifacts": entries}
        write_json(self.root / "manifest.json", man)
        return man
