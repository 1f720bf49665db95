"""Reader for the dataset manifest interchange format.

The manifest is JSON lines: one header object, then one record object per
line. Records are orderd and unique by path; the path may carry two
fragment suffixes, ``#sN`` (N-th one-second segment of the source file)
and a trailing ``#aug`` (noise-mixed copy described by the record's
``augmentation`` block). This module implements the format from its
written description, independent of the reference implementation.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

from .errors import ManifestError

_FRAGMENT = re.compile(r"^(?P<base>[^#]+)(?:#s(?P<seg>\d+))?(?P<aug>#aug)?$")

_SPLITS = ("train", "val")
_KINDS = ("none", "noise_mixed")


@dataclass(frozen=True)
class Augmentation:
    kind: str = "none"
    snr_db: float | None = None
    noise_path: str | None = None


@dataclass(frozen=True)
class Record:
    path: str
    label: str
    split: str
    augmentation: Augmentation
    duration_s: float


@dataclass(frozen=True)
class Manifest:
    root: str
    seed: int
    classes: tuple[str, ...]
    records: tuple[Record, ...]


def parse_fragments(path: str) -> tuple[str, int]:
    """Strip fragment suffixes: 'a.wav#s2#aug' -> ('a.wav', 2)."""
    m = _FRAGMENT.match(path)
    if m is None or not m.group("base"):
        raise ManifestError(f"unparseable record path: {path!r}")
    return m.group("base"), int(m.group("seg") or 0)


def _record_from_line(obj: dict, line_no: int) -> Record:
    try:
        aug_obj = obj["augmentation"]
        aug = Augmentation(
            kind=aug_obj["kind"],
            snr_db=aug_obj.get("snr_db"),
            noise_path=aug_obj.get("noise_path"),
        )
        rec = Record(
            path=obj["path"],
            label=obj["label"],
            split=obj["split"],
            augmentation=aug,
            duration_s=float(obj["duration_s"]),
        )
    except (KeyError, TypeError) as exc:
        raise ManifestError(f"line {line_no}: malformed record: {exc}") from exc
    if rec.split not in _SPLITS:
        raise ManifestError(f"line {line_no}: unknown split {rec.split!r}")
    if aug.kind not in _KINDS:
        raise ManifestError(f"line {line_no}: unknown augmentation kind {aug.kind!r}")
    if aug.kind == "noise_mixed" and (aug.snr_db is None or aug.noise_path is None):
        raise ManifestError(f"line {line_no}: noise_mixed record lacks snr_db/noise_path")
    parse_fragments(rec.path)  # rejects malformed fragments early
    return rec


def read_manifest(path: str | Path) -> Manifest:
    with open(path, encoding="utf-8") as f:
        lines = [ln for ln in f.read().splitlines() if ln.strip()]
    if not lines:
        raise ManifestError(f"{path}: empty manifest")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: header is not valid JSON: {exc}") from exc
    if not isinstance(header, dict) or header.get("version") != 1:
        raise ManifestError(f"{path}: unsupported manifest version {header.get('version')!r}")
    for key in ("root", "seed", "classes"):
        if key not in header:
            raise ManifestError(f"{path}: header lacks {key!r}")

    records = []
    seen = set()
    for i, line in enumerate(lines[1:], start=2):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"{path}: line {i} is not valid JSON: {exc}") from exc
        rec = _record_from_line(obj, i)
        if rec.path in seen:
            raise ManifestError(f"{path}: line {i}: duplicate path {rec.path!r}")
        if rec.label not in header["classes"]:
            raise ManifestError(f"{path}: line {i}: label {rec.label!r} not in header classes")
        seen.add(rec.path)
        records.append(rec)
    return Manifest(
        root=str(header["root"]),
        seed=int(header["seed"]),
        classes=tuple(header["classes"]),
        records=tuple(records),
    )
