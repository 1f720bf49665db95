"""Fixtures for the exporter: a small tone dataset with a real manifest.

The tree is built with the recognition toolkit on purpose: these tests
prove cross-package interchange, so the manifest must be a genuine one.
The exporter package itself never imports the toolkit.
"""

import logging
from pathlib import Path

import numpy as np
import pytest

import speechcmd as sc


@pytest.fixture(autouse=True)
def _fresh_log_handlers():
    """CLI runs install stderr handlers; drop them so the next test's
    library warnings never write to a stream pytest already closed."""
    yield
    logging.getLogger().handlers[:] = []

WORDS = {w: 300.0 + 320.0 * i for i, w in enumerate(sc.LABELS.commands)}
WORDS["marvin"] = 4500.0  # feeds the unknown class


def build_tree(root: Path, clips_per_word: int = 5, seed: int = 11) -> Path:
    rng = np.random.default_rng(seed)
    for word, freq in WORDS.items():
        d = root / word
        d.mkdir(parents=True)
        n = clips_per_word + (3 if word == "marvin" else 0)
        for j in range(n):
            rate = 22050 if (word == "yes" and j == 0) else 16000
            dur = 2.2 if (word == "go" and j == 0) else 1.0
            t = np.arange(round(rate * dur)) / rate
            x = rng.uniform(0.25, 0.45) * np.sin(2 * np.pi * freq * (1 + rng.uniform(-0.02, 0.02)) * t)
            x += rng.normal(0.0, 0.004, len(x))
            sc.write_wav(d / f"{word}_{j:03d}.wav", sc.AudioClip(np.clip(x, -1, 1), rate))
    noise_dir = root / "_background_noise_"
    noise_dir.mkdir()
    x = rng.normal(0.0, 0.08, 16000 * 9)
    sc.write_wav(noise_dir / "hum.wav", sc.AudioClip(np.clip(x, -1, 1), 16000))
    return root


@pytest.fixture(scope="session")
def tree(tmp_path_factory) -> Path:
    return build_tree(tmp_path_factory.mktemp("exporter-data") / "tones")


@pytest.fixture(scope="session")
def manifest_path(tree, tmp_path_factory) -> Path:
    path = tmp_path_factory.mktemp("exporter-manifests") / "manifest.jsonl"
    sc.write_manifest(sc.prepare(tree, seed=0), path)
    return path
