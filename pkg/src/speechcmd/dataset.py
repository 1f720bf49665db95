"""Speech Commands dataset conditioning.

Ingests the v0.01 directory layout (one subdirectory per word, noise files
under ``_background_noise_``), maps the 30 words onto the 12-class task,
slices noise into 1-second background clips, balances the unknown and
background classes, splits 80/20 stratified per class, and adds one
noise-mixed copy of every training command clip.

Records are addressed by a path with optional fragments:

  word/clip.wav          a clip that fits in one segment
  word/clip.wav#s2       third 1-second segment of a longer clip
  word/clip.wav#aug      noise-mixed copy (mix parameters in the record)
  _background_noise_/f.wav#s17   18th 1-second slice of a noise file

which is enough provenance to regenerate the exact waveform of any record.
"""

from __future__ import annotations

import json
import logging
import math
import wave
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .dsp import AudioClip, TARGET_RATE, pad_or_trim, resample
from .errors import FormatError, InvalidInputError
from .rng import Rng, derive
from .wavio import read_wav

log = logging.getLogger(__name__)

COMMAND_WORDS = ("yes", "no", "up", "down", "left", "right", "on", "off", "stop", "go")
BACKGROUND_DIR = "_background_noise_"
SEGMENT_SAMPLES = TARGET_RATE  # 1-second segments at 16 kHz
DEFAULT_SNR_RANGE_DB = (5.0, 30.0)
SILENT_MIX_REF_RMS = 0.1  # noise level substituted when the clip itself is silent


@dataclass(frozen=True)
class LabelSet:
    """The 12-class task: ten commands, then "unknown", then "background"."""

    commands: tuple[str, ...] = COMMAND_WORDS

    def __post_init__(self):
        if len(self.commands) != len(set(self.commands)):
            raise InvalidInputError("duplicate command words")

    @property
    def names(self) -> tuple[str, ...]:
        return self.commands + ("unknown", "background")

    @property
    def n_classes(self) -> int:
        return len(self.commands) + 2

    @property
    def unknown(self) -> int:
        return len(self.commands)

    @property
    def background(self) -> int:
        return len(self.commands) + 1

    def label_for_word(self, word: str) -> int:
        try:
            return self.commands.index(word)
        except ValueError:
            return self.unknown


LABELS = LabelSet()


@dataclass(frozen=True)
class Augmentation:
    kind: str = "none"  # "none" | "noise_mixed"
    snr_db: float | None = None
    noise_path: str | None = None

    def __post_init__(self):
        if self.kind not in ("none", "noise_mixed"):
            raise InvalidInputError(f"unknown augmentation kind {self.kind!r}")
        if self.kind == "noise_mixed":
            if self.snr_db is None or self.noise_path is None:
                raise InvalidInputError("noise_mixed requires snr_db and noise_path")
        elif self.snr_db is not None or self.noise_path is not None:
            raise InvalidInputError("snr_db/noise_path only valid for noise_mixed")


NO_AUGMENTATION = Augmentation()


@dataclass(frozen=True)
class ManifestRecord:
    path: str  # relative to the dataset root, with optional #sN / #aug fragments
    label: int
    split: str = "train"
    augmentation: Augmentation = NO_AUGMENTATION
    duration_s: float = 0.0


@dataclass
class DatasetManifest:
    records: list[ManifestRecord]
    seed: int
    root: str
    labels: LabelSet = LABELS
    diagnostics: list[str] = field(default_factory=list)

    @property
    def class_counts(self) -> list[int]:
        counts = [0] * self.labels.n_classes
        for r in self.records:
            counts[r.label] += 1
        return counts


def parse_fragments(path: str) -> tuple[str, int]:
    """Split a record path into (base file path, segment index)."""
    base, _, tail = path.partition("#")
    seg = 0
    while tail:
        frag, _, tail = tail.partition("#")
        if frag.startswith("s"):
            seg = int(frag[1:])
        elif frag != "aug":
            raise FormatError(f"unknown path fragment {frag!r} in {path!r}")
    return base, seg


def _wav_duration(path: Path) -> tuple[int, int]:
    """(n_samples, sample_rate) from the WAV header, falling back to a full read."""
    try:
        with wave.open(str(path), "rb") as w:
            return w.getnframes(), w.getframerate()
    except wave.Error:
        clip = read_wav(path)
        return len(clip), clip.sample_rate


def _resampled_len(n_samples: int, rate: int) -> int:
    return (2 * n_samples * TARGET_RATE + rate) // (2 * rate)


def _segment_records(rel_path: str, n_samples: int, rate: int, label: int) -> list[ManifestRecord]:
    """One record per 1-second segment the clip will produce."""
    n16 = _resampled_len(n_samples, rate)
    n_segments = max(1, math.ceil(n16 / SEGMENT_SAMPLES))
    out = []
    for k in range(n_segments):
        content = min(n16 - k * SEGMENT_SAMPLES, SEGMENT_SAMPLES) / TARGET_RATE
        path = rel_path if n_segments == 1 else f"{rel_path}#s{k}"
        out.append(ManifestRecord(path=path, label=label, duration_s=round(max(content, 0.0), 6)))
    return out


def ingest(root_dir, labels: LabelSet = LABELS) -> DatasetManifest:
    """Scan a Speech Commands tree into labeled records.

    Files under command directories keep that command's label, other word
    directories map to "unknown", and noise files contribute one
    "background" record per full 1-second slice.  Unreadable files are
    skipped and noted in the manifest diagnostics.
    """
    root = Path(root_dir)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset root not found: {root}")

    records: list[ManifestRecord] = []
    diagnostics: list[str] = []
    for sub in sorted(p for p in root.iterdir() if p.is_dir()):
        is_noise = sub.name == BACKGROUND_DIR
        for f in sorted(sub.glob("*.wav")):
            rel = f.relative_to(root).as_posix()
            try:
                n_samples, rate = _wav_duration(f)
            except Exception as exc:
                diagnostics.append(f"skipped unreadable file {rel}: {exc}")
                log.warning("skipping unreadable file %s: %s", rel, exc)
                continue
            if is_noise:
                n_slices = _resampled_len(n_samples, rate) // SEGMENT_SAMPLES
                for k in range(n_slices):
                    records.append(
                        ManifestRecord(path=f"{rel}#s{k}", label=labels.background, duration_s=1.0)
                    )
            else:
                if n_samples == 0:
                    diagnostics.append(f"zero-length clip {rel}: kept as an all-zero segment")
                records.extend(
                    _segment_records(rel, n_samples, rate, labels.label_for_word(sub.name))
                )

    records.sort(key=lambda r: r.path)
    return DatasetManifest(
        records=records,
        seed=0,
        root=str(root.resolve()),
        labels=labels,
        diagnostics=diagnostics,
    )


def segment_background(noise_clips: list[AudioClip]) -> list[AudioClip]:
    """Non-overlapping consecutive 1-second slices; sub-second remainders dropped."""
    out = []
    for clip in noise_clips:
        for k in range(len(clip) // SEGMENT_SAMPLES):
            out.append(
                AudioClip(clip.samples[k * SEGMENT_SAMPLES : (k + 1) * SEGMENT_SAMPLES], clip.sample_rate)
            )
    return out


def augment_mix(clip: AudioClip, noise: AudioClip, snr_db: float) -> AudioClip:
    """Add noise scaled so 20*log10(rms(clip)/rms(g*noise)) = snr_db.

    snr_db = +inf is the no-mix sentinel. A silent noise segment leaves the
    clip unchanged; a silent clip returns the noise at a fixed reference
    level instead (flagged in the log). Output is clipped to [-1, 1].
    """
    if len(clip) != len(noise) or clip.sample_rate != noise.sample_rate:
        raise InvalidInputError(
            f"clip and noise must match: {len(clip)}@{clip.sample_rate} vs {len(noise)}@{noise.sample_rate}"
        )
    if math.isinf(snr_db) and snr_db > 0:
        return AudioClip(clip.samples.copy(), clip.sample_rate)

    rms_clip = float(np.sqrt(np.mean(clip.samples**2)))
    rms_noise = float(np.sqrt(np.mean(noise.samples**2)))
    if rms_noise == 0.0:
        return AudioClip(clip.samples.copy(), clip.sample_rate)
    if rms_clip == 0.0:
        log.warning("mixing target is silent; substituting noise at reference RMS %.3f", SILENT_MIX_REF_RMS)
        scaled = noise.samples * (SILENT_MIX_REF_RMS / rms_noise)
        return AudioClip(np.clip(scaled, -1.0, 1.0), clip.sample_rate)

    gain = rms_clip / (rms_noise * 10.0 ** (snr_db / 20.0))
    mixed = np.clip(clip.samples + gain * noise.samples, -1.0, 1.0)
    return AudioClip(mixed, clip.sample_rate)


def split(manifest: DatasetManifest, train_fraction: float, seed: int) -> DatasetManifest:
    """Stratified split: shuffle each class with the seeded generator and cut
    at round(count * train_fraction). Records are canonicalized (sorted by
    path) first so the result does not depend on ingestion order."""
    if not (0.0 < train_fraction < 1.0):
        raise InvalidInputError(f"train_fraction must be in (0, 1), got {train_fraction}")

    records = sorted(manifest.records, key=lambda r: r.path)
    rng = Rng(seed)
    assignment = {}
    for c in range(manifest.labels.n_classes):
        idxs = [i for i, r in enumerate(records) if r.label == c]
        if len(idxs) < 2:
            raise InvalidInputError(
                f"class {manifest.labels.names[c]!r} has {len(idxs)} records; need at least 2 to split"
            )
        rng.shuffle(idxs)
        cut = int(math.floor(len(idxs) * train_fraction + 0.5))
        for rank, i in enumerate(idxs):
            assignment[i] = "train" if rank < cut else "val"

    new_records = [replace(r, split=assignment[i]) for i, r in enumerate(records)]
    return replace_records(manifest, new_records, seed=seed)


def replace_records(manifest: DatasetManifest, records, seed=None, extra_diagnostics=()) -> DatasetManifest:
    return DatasetManifest(
        records=list(records),
        seed=manifest.seed if seed is None else seed,
        root=manifest.root,
        labels=manifest.labels,
        diagnostics=list(manifest.diagnostics) + list(extra_diagnostics),
    )


def _subsample(records, cap: int, rng: Rng):
    """Uniform seeded subsample to at most cap, returned in path order."""
    if len(records) <= cap:
        return list(records)
    pool = sorted(records, key=lambda r: r.path)
    rng.shuffle(pool)
    return sorted(pool[:cap], key=lambda r: r.path)


def prepare(
    root_dir,
    seed: int = 0,
    train_fraction: float = 0.8,
    snr_range_db: tuple[float, float] = DEFAULT_SNR_RANGE_DB,
    augment: bool = True,
    labels: LabelSet = LABELS,
) -> DatasetManifest:
    """Full conditioning pass: ingest, balance, split, augment.

    The unknown class is subsampled to the largest command-class count, as
    is the background class (bounded by the noise material available). One
    noise-mixed copy is added per training command clip, with SNR drawn
    uniformly from snr_range_db.
    """
    manifest = ingest(root_dir, labels)
    diagnostics = []

    commands = [r for r in manifest.records if r.label < labels.unknown]
    unknown = [r for r in manifest.records if r.label == labels.unknown]
    background = [r for r in manifest.records if r.label == labels.background]

    cmd_counts = [0] * labels.unknown
    for r in commands:
        cmd_counts[r.label] += 1
    cap = max(cmd_counts, default=0)

    kept_unknown = _subsample(unknown, cap, Rng(derive(seed, "unknown-subsample")))
    kept_background = _subsample(background, cap, Rng(derive(seed, "background-subsample")))
    if len(kept_unknown) < len(unknown):
        diagnostics.append(f"unknown class subsampled {len(unknown)} -> {len(kept_unknown)}")
    if len(kept_background) < len(background):
        diagnostics.append(f"background class subsampled {len(background)} -> {len(kept_background)}")

    conditioned = replace_records(
        manifest, commands + kept_unknown + kept_background, seed=seed, extra_diagnostics=diagnostics
    )
    conditioned = split(conditioned, train_fraction, derive(seed, "split"))

    if augment:
        noise_pool = sorted(r.path for r in background)
        if noise_pool:
            rng = Rng(derive(seed, "augment"))
            lo, hi = snr_range_db
            copies = []
            for r in sorted(conditioned.records, key=lambda x: x.path):
                if r.split == "train" and r.label < labels.unknown:
                    source = noise_pool[rng.randbelow(len(noise_pool))]
                    snr = round(rng.uniform(lo, hi), 6)
                    copies.append(
                        replace(
                            r,
                            path=f"{r.path}#aug",
                            augmentation=Augmentation("noise_mixed", snr_db=snr, noise_path=source),
                        )
                    )
            conditioned = replace_records(conditioned, list(conditioned.records) + copies)
        else:
            conditioned = replace_records(
                conditioned, conditioned.records, extra_diagnostics=["no noise material: augmentation skipped"]
            )

    final = sorted(conditioned.records, key=lambda r: r.path)
    return replace_records(conditioned, final, seed=seed)


def write_manifest(manifest: DatasetManifest, path) -> None:
    """UTF-8 JSON lines: one header line, then one record per line."""
    names = manifest.labels.names
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        header = {
            "version": 1,
            "seed": manifest.seed,
            "root": manifest.root,
            "classes": list(names),
            "class_counts": manifest.class_counts,
            "diagnostics": manifest.diagnostics,
        }
        f.write(json.dumps(header, separators=(",", ":")) + "\n")
        for r in manifest.records:
            aug = {"kind": r.augmentation.kind}
            if r.augmentation.kind == "noise_mixed":
                aug["snr_db"] = r.augmentation.snr_db
                aug["noise_path"] = r.augmentation.noise_path
            rec = {
                "path": r.path,
                "label": names[r.label],
                "split": r.split,
                "augmentation": aug,
                "duration_s": r.duration_s,
            }
            f.write(json.dumps(rec, separators=(",", ":")) + "\n")


def read_manifest(path) -> DatasetManifest:
    with open(path, encoding="utf-8") as f:
        lines = [ln for ln in f.read().splitlines() if ln.strip()]
    if not lines:
        raise FormatError(f"empty manifest {path}")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise FormatError(f"manifest header is not JSON: {exc}") from exc
    if header.get("version") != 1:
        raise FormatError(f"unsupported manifest version {header.get('version')!r}")

    classes = header.get("classes", [])
    if len(classes) < 3 or classes[-2:] != ["unknown", "background"]:
        raise FormatError(f"malformed class list {classes!r}")
    labels = LabelSet(commands=tuple(classes[:-2]))
    name_to_idx = {n: i for i, n in enumerate(labels.names)}

    records = []
    seen = set()
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            obj = json.loads(line)
            aug_obj = obj["augmentation"]
            aug = Augmentation(
                kind=aug_obj["kind"],
                snr_db=aug_obj.get("snr_db"),
                noise_path=aug_obj.get("noise_path"),
            )
            rec = ManifestRecord(
                path=obj["path"],
                label=name_to_idx[obj["label"]],
                split=obj["split"],
                augmentation=aug,
                duration_s=float(obj["duration_s"]),
            )
        except (KeyError, InvalidInputError, json.JSONDecodeError, TypeError, ValueError) as exc:
            raise FormatError(f"bad manifest record on line {lineno}: {exc}") from exc
        if rec.split not in ("train", "val"):
            raise FormatError(f"bad split {rec.split!r} on line {lineno}")
        if rec.path in seen:
            raise FormatError(f"duplicate record path {rec.path!r} on line {lineno}")
        seen.add(rec.path)
        records.append(rec)

    return DatasetManifest(
        records=records,
        seed=int(header.get("seed", 0)),
        root=header.get("root", "."),
        labels=labels,
        diagnostics=list(header.get("diagnostics", [])),
    )


def load_record_waveform(record: ManifestRecord, root, cache: dict | None = None) -> AudioClip:
    """Regenerate the exact 1-second, 16 kHz waveform behind a record,
    including its noise mix when the record is an augmented copy."""
    clip = _cached_clip(record.path, root, cache)
    base, seg = parse_fragments(record.path)
    segments = pad_or_trim(clip)
    if seg >= len(segments):
        raise InvalidInputError(f"{base} has {len(segments)} segments, record wants #{seg}")
    x = segments[seg]

    if record.augmentation.kind == "noise_mixed":
        nbase, nseg = parse_fragments(record.augmentation.noise_path)
        noise_clip = _cached_clip(record.augmentation.noise_path, root, cache)
        slices = segment_background([noise_clip])
        if nseg >= len(slices):
            raise InvalidInputError(f"{nbase} has {len(slices)} noise slices, record wants #{nseg}")
        x = augment_mix(x, slices[nseg], record.augmentation.snr_db)
    return x


def _cached_clip(path: str, root, cache: dict | None) -> AudioClip:
    base, _ = parse_fragments(path)
    if cache is not None and base in cache:
        return cache[base]
    clip = read_wav(Path(root) / base)
    if len(clip) > 0 and clip.sample_rate != TARGET_RATE:
        clip = resample(clip, TARGET_RATE)
    elif clip.sample_rate != TARGET_RATE:
        clip = AudioClip(clip.samples, TARGET_RATE)
    if cache is not None:
        cache[base] = clip
    return clip
