"""Backbone registry: model references resolve to embedding producers.

A backbone consumes a mono 16 kHz waveform and returns a frame of
embeddings per analysis window, shape [n_frames x dim]. Two reference
forms are supported:

- ``stub:<dim>[:<seed>]``: a self-contained deterministic backbone for
  offline runs and tests. It summarizes each 0.5 s window (hop 0.25 s)
  into 64 log-energy bands and projects them through a fixed seeded
  random matrix. No external weights, bit-stable across runs.
- anything else is treated as a TensorFlow SavedModel directory and
  loaded lazily; a missing runtime or unloadable model raises
  BackboneError (the CLI turns that into exit code 3).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BackboneError

STUB_FRAME = 8000
STUB_HOP = 4000
STUB_BANDS = 64


@dataclass(frozen=True)
class StubBackbone:
    dim: int
    seed: int = 0
    # fixed projection, derived once from the seed
    _proj: np.ndarray = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self):
        if self.dim < 1:
            raise BackboneError(f"stub dimension must be >= 1, got {self.dim}")
        proj = np.random.default_rng(self.seed).standard_normal((self.dim, STUB_BANDS))
        object.__setattr__(self, "_proj", proj / np.sqrt(STUB_BANDS))

    def describe(self) -> str:
        return f"stub:{self.dim}:{self.seed}"

    def embed(self, wave: np.ndarray) -> np.ndarray:
        wave = np.asarray(wave, dtype=np.float64)
        if wave.ndim != 1:
            raise ValueError(f"backbone input must be 1-D, got shape {wave.shape}")
        if len(wave) < STUB_FRAME:  # short input: one zero-padded window
            wave = np.concatenate([wave, np.zeros(STUB_FRAME - len(wave))])
        starts = range(0, len(wave) - STUB_FRAME + 1, STUB_HOP)
        rows = []
        for s in starts:
            power = np.abs(np.fft.rfft(wave[s : s + STUB_FRAME])) ** 2
            bands = np.array([seg.sum() for seg in np.array_split(power, STUB_BANDS)])
            rows.append(self._proj @ np.log1p(bands))
        return np.stack(rows)


class SavedModelBackbone:
    """Wraps a TF SavedModel that maps waveform -> embeddings.

    Accepts the common output conventions: a bare [frames x dim] tensor,
    or the (scores, embeddings, spectrogram) triple, where index 1 holds
    the embeddings.
    """

    def __init__(self, path: str):
        try:
            import tensorflow as tf  # deferred: heavyweight and optional
        except ImportError as exc:
            raise BackboneError(f"tensorflow is not installed; cannot load {path!r}") from exc
        try:
            self._model = tf.saved_model.load(path)
        except Exception as exc:
            raise BackboneError(f"cannot load SavedModel {path!r}: {exc}") from exc
        self._path = path

    def describe(self) -> str:
        return self._path

    def embed(self, wave: np.ndarray) -> np.ndarray:
        out = self._model(np.asarray(wave, dtype=np.float32))
        if isinstance(out, (tuple, list)) and len(out) >= 2:
            out = out[1]
        arr = np.asarray(out)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2:
            raise BackboneError(f"backbone returned shape {arr.shape}, expected [frames x dim]")
        return arr.astype(np.float64)


def load_backbone(ref: str):
    if ref.startswith("stub:"):
        parts = ref.split(":")
        try:
            dim = int(parts[1])
            seed = int(parts[2]) if len(parts) > 2 else 0
            if len(parts) > 3:
                raise ValueError(ref)
        except (ValueError, IndexError) as exc:
            raise BackboneError(
                f"bad stub reference {ref!r}; expected stub:<dim>[:<seed>]"
            ) from exc
        return StubBackbone(dim=dim, seed=seed)
    return SavedModelBackbone(ref)
