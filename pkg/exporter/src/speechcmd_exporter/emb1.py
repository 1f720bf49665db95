"""EMB1 writer: the embedding interchange format, implemented from its spec.

Layout, little-endian throughout: 4 magic bytes ``EMB1``, uint32 row count,
uint32 embedding width, then rows * width float32 values in row-major
order. Written independently of the consumer so the round-trip test proves
the format description, not shared code.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"EMB1"


def write_embeddings(matrix: np.ndarray, path: str | Path) -> None:
    m = np.ascontiguousarray(matrix, dtype="<f4")
    if m.ndim != 2:
        raise ValueError(f"embedding matrix must be 2-D, got shape {m.shape}")
    if not np.isfinite(m).all():
        raise ValueError("embedding matrix contains non-finite values")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", m.shape[0], m.shape[1]))
        f.write(m.tobytes())
