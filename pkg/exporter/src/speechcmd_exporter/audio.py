"""Waveform regeneration for manifest records.

Records name audio by source file plus fragments, so the exporter rebuilds
each one-second waveform itself: decode, resample to 16 kHz, slice the
``#sN`` segment, and apply the ``#aug`` noise mix exactly as the manifest
contract states (gain = rms(clip) / (rms(noise) * 10^(snr/20)), output
clipped to [-1, 1], silent-signal guards). Resampling here uses a plain
polyphase filter; backbones own their input contract, so this front end
does not need to match the toolkit's feature extractor sample for sample.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

from .errors import ManifestError
from .manifest import Record, parse_fragments

TARGET_RATE = 16000
WINDOW = 16000  # samples per one-second record
SILENT_MIX_REF_RMS = 0.1  # noise level substituted when the clip itself is silent

_INT_SCALE = {np.dtype("int16"): 32768.0, np.dtype("int32"): 2147483648.0}


def read_wav_float(path: str | Path) -> tuple[np.ndarray, int]:
    """Mono float64 samples in [-1, 1] plus the file's sample rate."""
    try:
        rate, data = wavfile.read(path)
    except ValueError as exc:
        raise ManifestError(f"not a readable WAV file: {path}: {exc}") from exc
    x = np.asarray(data)
    if x.ndim == 2:
        x = x.mean(axis=1)
    if x.dtype in _INT_SCALE:
        x = x.astype(np.float64) / _INT_SCALE[x.dtype]
    elif x.dtype == np.uint8:
        x = (x.astype(np.float64) - 128.0) / 128.0
    else:
        x = x.astype(np.float64)
    return x, int(rate)


def to_target_rate(x: np.ndarray, rate: int) -> np.ndarray:
    if rate == TARGET_RATE or len(x) == 0:
        return x
    g = math.gcd(TARGET_RATE, rate)
    return resample_poly(x, TARGET_RATE // g, rate // g)


def _window(x: np.ndarray, segment: int) -> np.ndarray:
    """Segment ``segment`` of x as exactly WINDOW samples, zero-padded."""
    piece = x[segment * WINDOW : (segment + 1) * WINDOW]
    if len(piece) < WINDOW:
        piece = np.concatenate([piece, np.zeros(WINDOW - len(piece))])
    return piece


def mix(clip: np.ndarray, noise: np.ndarray, snr_db: float) -> np.ndarray:
    rms_clip = float(np.sqrt(np.mean(clip**2)))
    rms_noise = float(np.sqrt(np.mean(noise**2)))
    if rms_noise == 0.0:
        return clip
    if rms_clip == 0.0:
        return np.clip(noise * (SILENT_MIX_REF_RMS / rms_noise), -1.0, 1.0)
    gain = rms_clip / (rms_noise * 10.0 ** (snr_db / 20.0))
    return np.clip(clip + gain * noise, -1.0, 1.0)


def _load_window(path_with_fragments: str, root: Path) -> np.ndarray:
    base, segment = parse_fragments(path_with_fragments)
    x, rate = read_wav_float(root / base)
    return _window(to_target_rate(x, rate), segment)


def record_waveform(rec: Record, root: str | Path) -> np.ndarray:
    """The one-second 16 kHz waveform a manifest record denotes."""
    root = Path(root)
    wave = _load_window(rec.path, root)
    if rec.augmentation.kind == "noise_mixed":
        noise = _load_window(rec.augmentation.noise_path, root)
        wave = mix(wave, noise, rec.augmentation.snr_db)
    return wave
