"""Comma-separated output tables and the run manifest."""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Iterable, Sequence


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    if hasattr(v, "item"):  # numpy scalar
        return _cell(v.item())
    return str(v)


def write_table(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """One header line, then one line per row; floats keep full precision."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])
    return path


def read_table(path: Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path: Path, scenario: str, sections: dict, seed: int, version: str,
                   duration: float, outputs: Sequence[Path]) -> dict:
    manifest = {
        "scenario": scenario,
        "config": sections,
        "seed": seed,
        "version": version,
        "duration_s": round(duration, 3),
        "outputs": [{"file": Path(p).name, "sha256": sha256(p)} for p in outputs],
    }
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest
