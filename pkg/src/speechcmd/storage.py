"""Bit-exact binary interchange formats.

All files are little-endian regardless of host, with a 4-byte magic and
u32 header fields:

  FPZ1  feature patches   "FPZ1" | n_patches | n_frames | n_bands | f32 body
  EMB1  embedding matrix  "EMB1" | n_rows    | dim               | f32 body
  HDP1  head checkpoint   "HDP1" | n_layers  | per layer: out,in | f32 tensors

Bodies are IEEE-754 float32 row-major. HDP1 tensors follow the header as
weight[0], bias[0], weight[1], bias[1], ...
"""

from __future__ import annotations

import csv
import struct

import numpy as np

from .errors import FormatError, InvalidInputError

_U32 = struct.Struct("<I")


def _read_exact(f, n: int, what: str, offset: int) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise FormatError(
            f"truncated file: expected {n} more bytes for {what}, found {len(data)}",
            offset=offset,
        )
    return data


def _check_magic(f, expected: bytes):
    got = f.read(4)
    if got != expected:
        raise FormatError(f"bad magic {got!r}, expected {expected!r}", offset=0)


def _write_matrix_file(path, magic: bytes, dims: tuple[int, ...], body: np.ndarray):
    if not np.all(np.isfinite(body)):
        raise InvalidInputError("refusing to write non-finite values")
    with open(path, "wb") as f:
        f.write(magic)
        for d in dims:
            f.write(_U32.pack(d))
        f.write(np.ascontiguousarray(body, dtype="<f4").tobytes())


def write_embeddings(matrix: np.ndarray, path) -> None:
    """EMB1: one float32 row per manifest record."""
    matrix = np.asarray(matrix)
    if matrix.ndim != 2:
        raise InvalidInputError(f"embedding matrix must be 2-D, got shape {matrix.shape}")
    _write_matrix_file(path, b"EMB1", matrix.shape, matrix)


def read_embeddings(path) -> np.ndarray:
    with open(path, "rb") as f:
        _check_magic(f, b"EMB1")
        n_rows = _U32.unpack(_read_exact(f, 4, "n_rows", 4))[0]
        dim = _U32.unpack(_read_exact(f, 4, "dim", 8))[0]
        body = _read_exact(f, n_rows * dim * 4, f"{n_rows}x{dim} float32 body", 12)
        if f.read(1):
            raise FormatError("trailing bytes after body", offset=12 + len(body))
    return np.frombuffer(body, dtype="<f4").reshape(n_rows, dim).copy()


def write_patches(patches: np.ndarray, path) -> None:
    """FPZ1: stack of [n_frames x n_bands] float32 feature patches."""
    patches = np.asarray(patches)
    if patches.ndim != 3:
        raise InvalidInputError(f"patch stack must be 3-D, got shape {patches.shape}")
    _write_matrix_file(path, b"FPZ1", patches.shape, patches)


def read_patches(path) -> np.ndarray:
    with open(path, "rb") as f:
        _check_magic(f, b"FPZ1")
        n_patches = _U32.unpack(_read_exact(f, 4, "n_patches", 4))[0]
        n_frames = _U32.unpack(_read_exact(f, 4, "n_frames", 8))[0]
        n_bands = _U32.unpack(_read_exact(f, 4, "n_bands", 12))[0]
        body = _read_exact(f, n_patches * n_frames * n_bands * 4, "float32 body", 16)
        if f.read(1):
            raise FormatError("trailing bytes after body", offset=16 + len(body))
    return np.frombuffer(body, dtype="<f4").reshape(n_patches, n_frames, n_bands).copy()


def write_checkpoint(layers: list[tuple[np.ndarray, np.ndarray]], path) -> None:
    """HDP1: per-layer (weight [out x in], bias [out]) as float32."""
    with open(path, "wb") as f:
        f.write(b"HDP1")
        f.write(_U32.pack(len(layers)))
        for w, b in layers:
            if w.ndim != 2 or b.ndim != 1 or w.shape[0] != b.shape[0]:
                raise InvalidInputError(f"bad layer shapes {w.shape} / {b.shape}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise InvalidInputError("refusing to write non-finite parameters")
            f.write(_U32.pack(w.shape[0]))
            f.write(_U32.pack(w.shape[1]))
        for w, b in layers:
            f.write(np.ascontiguousarray(w, dtype="<f4").tobytes())
            f.write(np.ascontiguousarray(b, dtype="<f4").tobytes())


def read_checkpoint(path) -> list[tuple[np.ndarray, np.ndarray]]:
    """Returns per-layer (weight, bias) as float64 for further computation."""
    with open(path, "rb") as f:
        _check_magic(f, b"HDP1")
        n_layers = _U32.unpack(_read_exact(f, 4, "layer count", 4))[0]
        shapes = []
        offset = 8
        for _ in range(n_layers):
            out = _U32.unpack(_read_exact(f, 4, "out dim", offset))[0]
            inp = _U32.unpack(_read_exact(f, 4, "in dim", offset + 4))[0]
            shapes.append((out, inp))
            offset += 8
        layers = []
        for out, inp in shapes:
            wb = _read_exact(f, out * inp * 4, "weight tensor", offset)
            offset += len(wb)
            bb = _read_exact(f, out * 4, "bias tensor", offset)
            offset += len(bb)
            w = np.frombuffer(wb, dtype="<f4").reshape(out, inp).astype(np.float64)
            b = np.frombuffer(bb, dtype="<f4").astype(np.float64)
            layers.append((w, b))
        if f.read(1):
            raise FormatError("trailing bytes after tensors", offset=offset)
    return layers


HISTORY_COLUMNS = ["epoch", "train_loss", "train_acc", "val_loss", "val_acc", "seconds"]


def write_history(rows: list[dict], path) -> None:
    """Per-epoch training curve as CSV."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(HISTORY_COLUMNS)
        for r in rows:
            writer.writerow(
                [
                    r["epoch"],
                    f"{r['train_loss']:.9f}",
                    f"{r['train_acc']:.6f}",
                    f"{r['val_loss']:.9f}",
                    f"{r['val_acc']:.6f}",
                    f"{r['seconds']:.3f}",
                ]
            )


def read_history(path) -> list[dict]:
    rows = []
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != HISTORY_COLUMNS:
            raise FormatError(f"unexpected history columns {reader.fieldnames}")
        for r in reader:
            rows.append(
                {
                    "epoch": int(r["epoch"]),
                    "train_loss": float(r["train_loss"]),
                    "train_acc": float(r["train_acc"]),
                    "val_loss": float(r["val_loss"]),
                    "val_acc": float(r["val_acc"]),
                    "seconds": float(r["seconds"]),
                }
            )
    return rows
