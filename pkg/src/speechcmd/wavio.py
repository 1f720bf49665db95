"""WAV file reading/writing for dataset clips (PCM and float formats)."""

from __future__ import annotations

import numpy as np
from scipy.io import wavfile

from .dsp import AudioClip
from .errors import InvalidInputError

_INT_SCALE = {np.dtype(np.int16): 32768.0, np.dtype(np.int32): 2147483648.0}


def read_wav(path) -> AudioClip:
    """Load a WAV file as a mono float clip with amplitudes in [-1, 1]."""
    try:
        rate, data = wavfile.read(path)
    except ValueError as exc:
        raise InvalidInputError(f"not a readable WAV file: {path}: {exc}") from exc
    data = np.asarray(data)
    if data.dtype in _INT_SCALE:
        samples = data.astype(np.float64) / _INT_SCALE[data.dtype]
    elif data.dtype == np.uint8:
        samples = (data.astype(np.float64) - 128.0) / 128.0
    else:
        samples = data.astype(np.float64)
    if samples.ndim == 2:  # average channels down to mono
        samples = samples.mean(axis=1)
    return AudioClip(samples, int(rate))


def write_wav(path, clip: AudioClip) -> None:
    """Write as 16-bit PCM (the Speech Commands distribution format)."""
    scaled = np.clip(clip.samples, -1.0, 1.0) * 32767.0
    wavfile.write(path, clip.sample_rate, scaled.astype(np.int16))
