"""The export pass: manifest in, EMB1 plus provenance sidecar out.

Row i of the output always corresponds to record i of the manifest. A
clip that cannot be decoded contributes an all-zero row and is listed in
the sidecar's ``excluded`` array, so alignment survives bad files. The
sidecar also carries the count-and-checksum handshake consumers use to
verify they pair the right files.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio import record_waveform
from .backbones import load_backbone
from .emb1 import write_embeddings
from .errors import BackboneError, ExporterError, ManifestError
from .manifest import read_manifest

log = logging.getLogger("speechcmd_exporter")

POOLINGS = ("mean", "first")


@dataclass(frozen=True)
class ExporterConfig:
    manifest: Path
    model_ref: str
    out: Path
    pooling: str = "mean"
    root: Path | None = None  # overrides the manifest header's root

    def __post_init__(self):
        if self.pooling not in POOLINGS:
            raise ExporterError(f"pooling must be one of {POOLINGS}, got {self.pooling!r}")


@dataclass
class ExportResult:
    matrix: np.ndarray
    excluded: list[str]
    checksum: str
    out: Path
    provenance: Path


def provenance_sidecar(out: Path) -> Path:
    return Path(str(out) + ".provenance.json")


def _pool(frames: np.ndarray, pooling: str) -> np.ndarray:
    return frames.mean(axis=0) if pooling == "mean" else frames[0]


def export(cfg: ExporterConfig) -> ExportResult:
    manifest = read_manifest(cfg.manifest)
    backbone = load_backbone(cfg.model_ref)
    root = Path(cfg.root) if cfg.root is not None else Path(manifest.root)

    rows: list[np.ndarray | None] = []
    excluded: list[str] = []
    dim = getattr(backbone, "dim", None)
    for rec in manifest.records:
        try:
            wave = record_waveform(rec, root)
        except (OSError, ManifestError) as exc:
            log.warning("zero row for %s: %s", rec.path, exc)
            excluded.append(rec.path)
            rows.append(None)  # widened once the dimension is known
            continue
        pooled = _pool(backbone.embed(wave), cfg.pooling)
        dim = len(pooled)
        rows.append(pooled)
    if dim is None:
        raise BackboneError("every clip failed to decode; embedding width is undetermined")

    matrix = np.stack([np.zeros(dim) if r is None else r for r in rows]).astype("<f4")
    write_embeddings(matrix, cfg.out)
    checksum = hashlib.sha256(Path(cfg.out).read_bytes()).hexdigest()

    sidecar = provenance_sidecar(cfg.out)
    payload = {
        "version": 1,
        "model_ref": backbone.describe(),
        "pooling": cfg.pooling,
        "n_rows": int(matrix.shape[0]),
        "dim": int(matrix.shape[1]),
        "checksum": f"sha256:{checksum}",
        "excluded": excluded,
    }
    with open(sidecar, "w", encoding="utf-8", newline="\n") as f:
        json.dump(payload, f, separators=(",", ":"))
        f.write("\n")
    return ExportResult(
        matrix=matrix, excluded=excluded, checksum=checksum, out=Path(cfg.out), provenance=sidecar
    )
