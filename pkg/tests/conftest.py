"""Shared fixtures: a synthetic tone dataset tree and cluster embeddings.

The tone tree mimics the Speech Commands layout with one pure tone per
word (distinct frequencies, so classes are trivially separable), two
extra words for the unknown class, and white-noise background files. A
few clips deliberately exercise the odd paths: different sample rates,
a short clip, a long clip.
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

TONE_WORDS = {w: 300.0 + 320.0 * i for i, w in enumerate(sc.LABELS.commands)}
UNKNOWN_WORDS = {"tree": 4200.0, "bird": 5000.0}


def build_tone_tree(root: Path, clips_per_word: int = 12, seed: int = 99) -> Path:
    rng = np.random.default_rng(seed)
    for word, freq in {**TONE_WORDS, **UNKNOWN_WORDS}.items():
        d = root / word
        d.mkdir(parents=True)
        n = clips_per_word + (2 if word in UNKNOWN_WORDS else 0)
        for j in range(n):
            rate, dur = 16000, 1.0
            if word == "yes" and j == 0:
                rate = 22050
            elif word == "no" and j == 0:
                rate = 8000
            elif word == "up" and j == 0:
                dur = 0.5
            elif word == "go" and j == 0:
                dur = 2.5
            t = np.arange(round(rate * dur)) / rate
            f = freq * (1.0 + rng.uniform(-0.02, 0.02))
            x = rng.uniform(0.25, 0.45) * np.sin(2 * np.pi * f * t + rng.uniform(0, 2 * np.pi))
            x += rng.normal(0.0, 0.004, len(x))
            sc.write_wav(d / f"{word}_{j:03d}.wav", sc.AudioClip(np.clip(x, -1, 1), rate))
    noise_dir = root / "_background_noise_"
    noise_dir.mkdir()
    for name, secs in (("white_noise.wav", 25.0), ("pink_noise.wav", 13.5)):
        x = rng.normal(0.0, 0.08, round(16000 * secs))
        sc.write_wav(noise_dir / name, sc.AudioClip(np.clip(x, -1, 1), 16000))
    return root


@pytest.fixture(scope="session")
def tone_tree(tmp_path_factory) -> Path:
    return build_tone_tree(tmp_path_factory.mktemp("dataset") / "tones")


@pytest.fixture(scope="session")
def prepared(tone_tree, tmp_path_factory):
    """(manifest object, manifest path) for the tone tree at seed 0."""
    manifest = sc.prepare(tone_tree, seed=0)
    path = tmp_path_factory.mktemp("manifests") / "manifest.jsonl"
    sc.write_manifest(manifest, path)
    return manifest, path


def make_cluster_embeddings(n_per_class=200, dim=16, n_classes=12, sigma=0.05, seed=20260819):
    """Gaussian blobs around well-separated means: linearly separable by
    construction, with an 80/20 split."""
    rng = np.random.default_rng(seed)
    means = rng.normal(0.0, 1.0, size=(n_classes, dim))
    x = np.concatenate([means[c] + rng.normal(0.0, sigma, (n_per_class, dim)) for c in range(n_classes)])
    y = np.concatenate([np.full(n_per_class, c) for c in range(n_classes)])
    order = rng.permutation(len(x))
    x, y = x[order], y[order]
    cut = int(len(x) * 0.8)
    return (x[:cut], y[:cut]), (x[cut:], y[cut:]), means


@pytest.fixture(scope="session")
def cluster_embeddings():
    return make_cluster_embeddings()


@pytest.fixture()
def fresh_tree(tmp_path) -> Path:
    """A small per-test tree for tests that mutate the layout."""
    return build_tone_tree(tmp_path / "tones", clips_per_word=4, seed=7)


def run_cli(*argv) -> int:
    from speechcmd.cli import main

    return main([str(a) for a in argv])


@pytest.fixture(scope="session")
def pipeline_run(prepared, tmp_path_factory):
    """One full prepare->featurize->train->eval pass shared across tests."""
    manifest, manifest_path = prepared
    out = tmp_path_factory.mktemp("pipeline")
    feats = out / "feats.fpz"
    ckpt = out / "head.hdp"
    history = out / "history.csv"
    report = out / "report"
    assert run_cli("featurize", "--manifest", manifest_path, "--out", feats) == 0
    assert (
        run_cli(
            "train",
            "--manifest",
            manifest_path,
            "--features",
            feats,
            "--out-checkpoint",
            ckpt,
            "--out-history",
            history,
        )
        == 0
    )
    assert (
        run_cli(
            "eval",
            "--manifest",
            manifest_path,
            "--features",
            feats,
            "--checkpoint",
            ckpt,
            "--out-dir",
            report,
            "--history",
            history,
        )
        == 0
    )
    return {
        "manifest": manifest,
        "manifest_path": manifest_path,
        "features": feats,
        "checkpoint": ckpt,
        "history": history,
        "report": report,
    }
