"""Speech-command recognition toolkit.

Pipeline pieces: a log-mel spectrogram front-end (dsp), dataset
conditioning with noise augmentation (dataset), a trainable softmax
classifier head (head), the evaluation metric suite (metrics), bit-exact
binary artifact formats (storage), and a CLI tying them together (cli).
"""

from .dsp import (
    AudioClip,
    FeaturePatch,
    FrameConfig,
    MelFilterbank,
    Spectrogram,
    build_filterbank,
    featurize,
    frame,
    frames_per_segment,
    hz_to_mel,
    mel_to_hz,
    pad_or_trim,
    resample,
    stft_power,
)
from .dataset import (
    LABELS,
    Augmentation,
    DatasetManifest,
    LabelSet,
    ManifestRecord,
    augment_mix,
    ingest,
    load_record_waveform,
    prepare,
    read_manifest,
    segment_background,
    split,
    write_manifest,
)
from .errors import FormatError, InvalidInputError, SpeechcmdError
from .head import (
    AdamState,
    HeadConfig,
    TrainConfig,
    TrainHistory,
    adam_step,
    backward,
    cross_entropy,
    evaluate,
    forward,
    init_adam,
    init_head,
    predict,
    train,
)
from .metrics import (
    BinaryCounts,
    MetricsReport,
    confusion,
    one_vs_rest,
    per_class_accuracy,
    render_report,
    summarize,
)
from .rng import Rng, derive
from .storage import (
    read_checkpoint,
    read_embeddings,
    read_history,
    read_patches,
    write_checkpoint,
    write_embeddings,
    write_history,
    write_patches,
)
from .wavio import read_wav, write_wav

__version__ = "0.1.0"
