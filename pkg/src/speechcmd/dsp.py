"""Waveform-to-feature front-end.

Pipeline: resample to 16 kHz -> pad/segment into 1-second clips ->
25 ms / 10 ms framing -> Hanning-windowed power STFT -> 50-band
triangular mel filterbank -> ln(x + 1e-6) compression.  A 1-second
segment becomes one 98x50 log-mel patch.

Everything here is a pure function on immutable inputs; calling the same
function twice on the same clip yields bit-identical output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import upfirdn

from .errors import InvalidInputError

TARGET_RATE = 16000
SEGMENT_DURATION_S = 1.0
N_BANDS = 50
LOG_FLOOR = 1e-6
# Kaiser-windowed sinc anti-aliasing filter for the polyphase resampler.
RESAMPLE_BETA = 8.0
RESAMPLE_TAPS_PER_PHASE = 32  # half-length, per polyphase branch


@dataclass(frozen=True)
class AudioClip:
    """Mono waveform with its sample rate. Amplitudes nominally in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise InvalidInputError(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=np.float64))

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class FrameConfig:
    frame_duration_s: float = 0.025
    hop_duration_s: float = 0.010
    sample_rate: int = TARGET_RATE

    @property
    def frame_len(self) -> int:
        return round(self.frame_duration_s * self.sample_rate)

    @property
    def hop_len(self) -> int:
        return round(self.hop_duration_s * self.sample_rate)

    def __post_init__(self):
        if not (0 < self.hop_len <= self.frame_len):
            raise InvalidInputError(
                f"need 0 < hop_len <= frame_len, got hop={self.hop_len} frame={self.frame_len}"
            )


@dataclass(frozen=True)
class Spectrogram:
    """One-sided power spectrogram: [n_frames x n_bins], bin k at k*bin_hz."""

    values: np.ndarray
    bin_hz: float

    @property
    def n_frames(self) -> int:
        return self.values.shape[0]

    @property
    def n_bins(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class MelFilterbank:
    """Triangular filters, peak value 1, rows = bands, columns = FFT bins."""

    weights: np.ndarray
    centers_hz: np.ndarray
    f_min: float
    f_max: float

    @property
    def n_bands(self) -> int:
        return self.weights.shape[0]

    def apply(self, spec_values: np.ndarray) -> np.ndarray:
        return spec_values @ self.weights.T


@dataclass(frozen=True)
class FeaturePatch:
    """Log-mel matrix [n_frames_per_segment x n_bands] for one 1 s segment."""

    values: np.ndarray
    source_clip_id: str = ""
    segment_index: int = 0


def frames_per_segment(cfg: FrameConfig | None = None, segment_duration_s: float = SEGMENT_DURATION_S) -> int:
    cfg = cfg or FrameConfig()
    seg_len = round(segment_duration_s * cfg.sample_rate)
    return (seg_len - cfg.frame_len) // cfg.hop_len + 1


def hz_to_mel(f):
    """2595 * log10(1 + f/700). Accepts scalars or arrays, f >= 0."""
    f = np.asarray(f, dtype=np.float64)
    if np.any(f < 0):
        raise InvalidInputError("frequency must be nonnegative")
    out = 2595.0 * np.log10(1.0 + f / 700.0)
    return float(out) if out.ndim == 0 else out


def mel_to_hz(m):
    """Inverse of hz_to_mel."""
    m = np.asarray(m, dtype=np.float64)
    out = 700.0 * (10.0 ** (m / 2595.0) - 1.0)
    return float(out) if out.ndim == 0 else out


def _resample_taps(up: int, down: int) -> np.ndarray:
    half = RESAMPLE_TAPS_PER_PHASE * up
    n = np.arange(-half, half + 1, dtype=np.float64)
    fc = 1.0 / (2.0 * max(up, down))  # cycles/sample at the upsampled rate
    taps = 2.0 * fc * np.sinc(2.0 * fc * n) * np.kaiser(2 * half + 1, RESAMPLE_BETA)
    return taps * up  # gain compensation for zero-stuffing


def resample(clip: AudioClip, target_rate: int) -> AudioClip:
    """Rate-convert with a polyphase windowed-sinc filter.

    Equal rates return the samples untouched. Output length is
    round(len * target_rate / sample_rate).
    """
    if len(clip) == 0:
        raise InvalidInputError("cannot resample an empty clip")
    if target_rate <= 0:
        raise InvalidInputError(f"target_rate must be positive, got {target_rate}")
    if target_rate == clip.sample_rate:
        return AudioClip(clip.samples.copy(), clip.sample_rate)

    g = math.gcd(clip.sample_rate, target_rate)
    up, down = target_rate // g, clip.sample_rate // g
    # Output length, rounding half away from zero in exact integer arithmetic.
    out_len = (2 * len(clip) * up + down) // (2 * down)

    taps = _resample_taps(up, down)
    half = RESAMPLE_TAPS_PER_PHASE * up
    # Pre-pad the filter so its group delay is a whole number of output
    # samples, then slice that delay off: y[k] = (h * x_up)[k*down + half].
    lead = (-half) % down
    padded = np.concatenate([np.zeros(lead), taps])
    y = upfirdn(padded, clip.samples, up=up, down=down)
    offset = (half + lead) // down
    y = y[offset : offset + out_len]
    if len(y) < out_len:
        y = np.pad(y, (0, out_len - len(y)))
    return AudioClip(y, target_rate)


def pad_or_trim(clip: AudioClip, segment_duration_s: float = SEGMENT_DURATION_S) -> list[AudioClip]:
    """Cut a clip into fixed-length segments, zero-padding symmetrically.

    Clips shorter than one segment come back as a single centered segment;
    longer clips become consecutive full segments plus a centered-padded
    remainder. A zero-length clip yields one all-zero segment.
    """
    seg_len = round(segment_duration_s * clip.sample_rate)
    x = clip.samples
    if len(x) == 0:
        return [AudioClip(np.zeros(seg_len), clip.sample_rate)]

    segments = []
    for start in range(0, len(x), seg_len):
        piece = x[start : start + seg_len]
        if len(piece) < seg_len:
            pad = seg_len - len(piece)
            lead = pad // 2
            piece = np.pad(piece, (lead, pad - lead))
        segments.append(AudioClip(piece, clip.sample_rate))
    return segments


def frame(clip: AudioClip, cfg: FrameConfig | None = None) -> np.ndarray:
    """Slice into overlapping frames: frame m covers [m*hop, m*hop + frame_len)."""
    cfg = cfg or FrameConfig()
    n_f, n_h = cfg.frame_len, cfg.hop_len
    if len(clip) < n_f:
        raise InvalidInputError(f"clip of {len(clip)} samples is shorter than one frame ({n_f})")
    n_frames = (len(clip) - n_f) // n_h + 1
    idx = np.arange(n_f)[None, :] + n_h * np.arange(n_frames)[:, None]
    return clip.samples[idx]


def hanning_window(n: int) -> np.ndarray:
    """Symmetric Hanning: 0.5 * (1 - cos(2*pi*k / (n-1)))."""
    k = np.arange(n, dtype=np.float64)
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * k / (n - 1)))


def stft_power(frames: np.ndarray, sample_rate: int = TARGET_RATE) -> Spectrogram:
    """Squared-magnitude DFT of Hanning-windowed frames.

    The transform length equals the frame length exactly (no zero padding);
    only the one-sided bins 0..floor(N/2) are kept.
    """
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 2:
        raise InvalidInputError(f"frames must be a 2-D array, got shape {frames.shape}")
    n_f = frames.shape[1]
    win = hanning_window(n_f)
    spectrum = np.fft.rfft(frames * win, n=n_f, axis=1)
    power = spectrum.real**2 + spectrum.imag**2
    return Spectrogram(values=power, bin_hz=sample_rate / n_f)


def build_filterbank(
    n_bands: int = N_BANDS,
    n_bins: int = 201,
    sample_rate: int = TARGET_RATE,
    f_min: float = 0.0,
    f_max: float | None = None,
) -> MelFilterbank:
    """Triangular filters with edges equally spaced on the mel axis.

    The n_bands+2 edge points are placed uniformly in mel between f_min and
    f_max and mapped back to Hz; band b rises linearly (in Hz) from edge b
    to edge b+1 and falls to edge b+2, with peak value 1 at its center.
    """
    if n_bands < 1:
        raise InvalidInputError("need at least one band")
    if n_bins < n_bands + 2:
        raise InvalidInputError(
            f"{n_bins} bins cannot resolve {n_bands} distinct triangles (need >= {n_bands + 2})"
        )
    if f_max is None:
        f_max = sample_rate / 2.0
    if not (0 <= f_min < f_max):
        raise InvalidInputError(f"need 0 <= f_min < f_max, got [{f_min}, {f_max}]")

    edges_hz = mel_to_hz(np.linspace(hz_to_mel(f_min), hz_to_mel(f_max), n_bands + 2))
    bin_hz = sample_rate / (2.0 * (n_bins - 1))
    freqs = np.arange(n_bins) * bin_hz

    lo, mid, hi = edges_hz[:-2, None], edges_hz[1:-1, None], edges_hz[2:, None]
    rising = (freqs[None, :] - lo) / (mid - lo)
    falling = (hi - freqs[None, :]) / (hi - mid)
    weights = np.clip(np.minimum(rising, falling), 0.0, 1.0)
    return MelFilterbank(weights=weights, centers_hz=edges_hz[1:-1], f_min=f_min, f_max=f_max)


def featurize(
    clip: AudioClip,
    clip_id: str = "",
    cfg: FrameConfig | None = None,
    filterbank: MelFilterbank | None = None,
) -> list[FeaturePatch]:
    """Full front-end: one log-mel FeaturePatch per 1-second segment."""
    cfg = cfg or FrameConfig()
    if len(clip) == 0:
        clip = AudioClip(clip.samples, cfg.sample_rate)  # empty is empty at any rate
    elif clip.sample_rate != cfg.sample_rate:
        clip = resample(clip, cfg.sample_rate)
    if filterbank is None:
        filterbank = build_filterbank(n_bins=cfg.frame_len // 2 + 1, sample_rate=cfg.sample_rate)

    patches = []
    for i, segment in enumerate(pad_or_trim(clip)):
        spec = stft_power(frame(segment, cfg), cfg.sample_rate)
        mel = filterbank.apply(spec.values)
        values = np.log(mel + LOG_FLOOR)
        patches.append(FeaturePatch(values=values, source_clip_id=clip_id, segment_index=i))
    return patches
