"""Acceptance suite: one check per shipping requirement, one printed line each.

Every test exercises a contract end users rely on, at the tolerance the
contract states, and prints a single ``[PASS]``/``[FAIL]`` line with the
measured value so a run log doubles as a conformance report.
"""

import math
import time

import numpy as np

import speechcmd as sc
from speechcmd import dsp, head, metrics, storage
from speechcmd.cli import main as cli_main
from speechcmd.dataset import parse_fragments


def report(ok: bool, line: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {line}", flush=True)
    assert ok, line


def run(*argv) -> int:
    return cli_main([str(a) for a in argv])


def direct_dft_power(frames: np.ndarray) -> np.ndarray:
    """O(N^2) oracle: windowed one-sided DFT power, no FFT anywhere."""
    n = frames.shape[1]
    k = np.arange(n // 2 + 1)
    t = np.arange(n)
    win = dsp.hanning_window(n)
    ang = -2.0 * np.pi * np.outer(k, t) / n
    cos_kt, sin_kt = np.cos(ang), np.sin(ang)
    rows = []
    for f in frames:
        fw = f * win
        re = (fw[None, :] * cos_kt).sum(axis=1)
        im = (fw[None, :] * sin_kt).sum(axis=1)
        rows.append(re**2 + im**2)
    return np.stack(rows)


def test_spectrogram_matches_direct_dft():
    rng = np.random.default_rng(12345)
    frames = rng.uniform(-1.0, 1.0, size=(100, 400))
    t0 = time.perf_counter()
    got = dsp.stft_power(frames).values
    oracle = direct_dft_power(frames)
    elapsed = time.perf_counter() - t0
    rel = float((np.abs(got - oracle) / np.abs(oracle)).max())
    report(
        rel < 1e-6 and elapsed < 5.0,
        f"spectrogram vs direct DFT on 100 random frames: max rel err {rel:.2e}"
        f" (tol 1e-6), {elapsed:.2f}s (limit 5s)",
    )


def test_patch_geometry():
    rng = np.random.default_rng(7)
    one_s = sc.AudioClip(rng.uniform(-0.5, 0.5, 16000), 16000)
    p1 = dsp.featurize(one_s)
    long = sc.AudioClip(rng.uniform(-0.5, 0.5, 40000), 16000)
    p3 = dsp.featurize(long)
    silent = dsp.featurize(sc.AudioClip(np.zeros(16000), 16000))
    floor_err = float(np.abs(silent[0].values - math.log(1e-6)).max())
    ok = (
        len(p1) == 1
        and p1[0].values.shape == (98, 50)
        and len(p3) == 3
        and floor_err < 1e-12
    )
    report(
        ok,
        f"patch geometry: 1s clip -> {len(p1)} patch of {p1[0].values.shape},"
        f" 2.5s clip -> {len(p3)} patches, silence floor off by {floor_err:.1e}",
    )


def test_mel_scale_anchors():
    at_zero = dsp.hz_to_mel(0.0)
    at_700 = float(dsp.hz_to_mel(700.0))
    grid = dsp.hz_to_mel(np.linspace(0.0, 8000.0, 10_000))
    monotone = bool(np.all(np.diff(grid) > 0))
    ok = at_zero == 0.0 and abs(at_700 - 781.17) <= 0.01 and monotone
    report(
        ok,
        f"mel scale: mel(0)={at_zero}, mel(700)={at_700:.4f} (781.17 +/- 0.01),"
        f" strictly increasing over 10^4 points: {monotone}",
    )


def test_gradients_match_finite_differences():
    t0 = time.perf_counter()
    rng = sc.Rng(2024)
    cfg = head.HeadConfig(in_dim=6, n_classes=12, hidden_dims=(5,))
    params = head.init_head(cfg, rng)
    x = rng.uniform_array(4 * 6, -1.0, 1.0).reshape(4, 6)
    labels = np.array([0, 3, 7, 11])

    _, _, grads = head.backward(params, x, labels)

    def loss_at(p):
        return head.cross_entropy(head.forward(p, x), labels)

    h = 1e-4
    worst = 0.0
    for li, (w, b) in enumerate(params):
        for arr, garr in ((w, grads[li][0]), (b, grads[li][1])):
            it = np.nditer(arr, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                orig = arr[idx]
                arr[idx] = orig + h
                up = loss_at(params)
                arr[idx] = orig - h
                down = loss_at(params)
                arr[idx] = orig
                numeric = (up - down) / (2 * h)
                analytic = garr[idx]
                denom = max(abs(analytic), abs(numeric), 1e-6)
                worst = max(worst, abs(analytic - numeric) / denom)
    elapsed = time.perf_counter() - t0
    report(
        worst < 1e-4 and elapsed < 10.0,
        f"analytic vs central-difference gradients (6 -> 5 -> 12):"
        f" max rel err {worst:.2e} (tol 1e-4), {elapsed:.2f}s (limit 10s)",
    )


def test_optimizer_matches_hand_recurrence():
    cfg = head.TrainConfig(learning_rate=0.01)
    params = [(np.array([[0.5]]), np.array([0.5]))]
    state = head.init_adam(params)

    # the same recurrence in plain scalar arithmetic
    p, m, v = 0.5, 0.0, 0.0
    worst = 0.0
    for t, g in enumerate((0.7, -1.3), start=1):
        grads = [(np.array([[g]]), np.array([g]))]
        params, state = head.adam_step(params, grads, state, cfg)
        m = cfg.beta1 * m + (1 - cfg.beta1) * g
        v = cfg.beta2 * v + (1 - cfg.beta2) * g * g
        p = p - cfg.learning_rate * (m / (1 - cfg.beta1**t)) / (
            math.sqrt(v / (1 - cfg.beta2**t)) + cfg.epsilon
        )
        worst = max(worst, abs(float(params[0][0][0, 0]) - p), abs(float(params[0][1][0]) - p))

    frozen = [(w.copy(), b.copy()) for w, b in params]
    zero = [(np.zeros_like(w), np.zeros_like(b)) for w, b in params]
    params2, _ = head.adam_step(params, zero, head.init_adam(params), cfg)
    unchanged = all(
        np.array_equal(w2, w) and np.array_equal(b2, b)
        for (w2, b2), (w, b) in zip(params2, frozen)
    )
    report(
        worst < 1e-12 and unchanged,
        f"optimizer: two hand-computed steps off by {worst:.1e} (tol 1e-12),"
        f" zero-gradient step is an exact no-op: {unchanged}",
    )


def test_trainer_separates_cluster_fixture(cluster_embeddings):
    (x_train, y_train), (x_val, y_val), _ = cluster_embeddings
    t0 = time.perf_counter()
    _, history = head.train(
        x_train, y_train, x_val, y_val, head.HeadConfig(in_dim=x_train.shape[1]), seed=0
    )
    elapsed = time.perf_counter() - t0
    acc = history.final_val_acc
    report(
        acc >= 0.99 and elapsed < 60.0,
        f"trainer on 12-cluster fixture (200/class, dim 16):"
        f" val accuracy {acc:.4f} (need >= 0.99) in {elapsed:.1f}s (limit 60s)",
    )


def test_metric_suite_hand_arithmetic():
    cm = np.zeros((12, 12), dtype=np.int64)
    cm[0, 0], cm[0, 1] = 8, 2
    cm[1, 0], cm[1, 1] = 1, 9
    rep = metrics.summarize(cm, list(sc.LABELS.names))
    hand = {
        ("precision", 0): 8 / 9,
        ("recall", 0): 8 / 10,
        ("f1", 0): 16 / 19,
        ("specificity", 0): 9 / 10,
        ("accuracy", 0): 17 / 20,
        ("precision", 1): 9 / 11,
        ("recall", 1): 9 / 10,
        ("f1", 1): 18 / 21,
    }
    worst = max(abs(rep.per_class[m][c] - v) for (m, c), v in hand.items())
    exact_overall = rep.overall_accuracy == 17 / 20

    probs = np.full((8, 12), 1.0 / 12.0)
    ce_err = abs(head.cross_entropy(probs, np.arange(8) % 12) - math.log(12.0))

    report(
        worst < 1e-12 and exact_overall and ce_err < 1e-12,
        f"metric suite: toy confusion off hand arithmetic by {worst:.1e} (tol 1e-12),"
        f" overall accuracy exact: {exact_overall},"
        f" uniform-predictor cross-entropy off ln 12 by {ce_err:.1e}",
    )


def test_pipeline_is_deterministic(tone_tree, tmp_path):
    outs = []
    for name in ("first", "second"):
        d = tmp_path / name
        d.mkdir()
        assert run("prepare", "--root", tone_tree, "--out", d / "m.jsonl", "--seed", "0") == 0
        assert run("featurize", "--manifest", d / "m.jsonl", "--out", d / "f.fpz") == 0
        assert run(
            "train", "--manifest", d / "m.jsonl", "--features", d / "f.fpz",
            "--out-checkpoint", d / "h.hdp", "--out-history", d / "hist.csv",
            "--epochs", "5",
        ) == 0
        assert run(
            "eval", "--manifest", d / "m.jsonl", "--features", d / "f.fpz",
            "--checkpoint", d / "h.hdp", "--out-dir", d / "rep",
        ) == 0
        outs.append(d)

    a, b = outs
    same = {
        "manifest": (a / "m.jsonl").read_bytes() == (b / "m.jsonl").read_bytes(),
        "features": (a / "f.fpz").read_bytes() == (b / "f.fpz").read_bytes(),
        "checkpoint": (a / "h.hdp").read_bytes() == (b / "h.hdp").read_bytes(),
        "metrics.csv": (a / "rep" / "metrics.csv").read_bytes()
        == (b / "rep" / "metrics.csv").read_bytes(),
        "confusion.csv": (a / "rep" / "confusion.csv").read_bytes()
        == (b / "rep" / "confusion.csv").read_bytes(),
    }
    hist_a = storage.read_history(a / "hist.csv")
    hist_b = storage.read_history(b / "hist.csv")
    same["history (minus wall time)"] = all(
        all(ra[k] == rb[k] for k in ra if k != "seconds")
        for ra, rb in zip(hist_a, hist_b, strict=True)
    )
    report(
        all(same.values()),
        "seeded pipeline run twice, byte-identical artifacts: "
        + ", ".join(f"{k}={v}" for k, v in same.items()),
    )


def test_end_to_end_smoke_learns(pipeline_run):
    rows = storage.read_history(pipeline_run["history"])
    e1, e3 = rows[0]["train_loss"], rows[2]["train_loss"]
    val_acc = rows[-1]["val_acc"]
    n_clips = len(
        {
            parse_fragments(r.path)[0]
            for r in pipeline_run["manifest"].records
            if r.label == 0
        }
    )
    report(
        e3 < e1 and val_acc >= 0.25 and n_clips >= 10,
        f"small-corpus smoke ({n_clips} source clips for class 0): train loss"
        f" epoch3 {e3:.3f} < epoch1 {e1:.3f}, val accuracy {val_acc:.3f} (need >= 0.25)",
    )


def test_artifact_formats_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    emb = rng.normal(0, 1, (7, 1024)).astype(np.float32)
    storage.write_embeddings(emb, tmp_path / "e.emb")
    emb_back = storage.read_embeddings(tmp_path / "e.emb")

    patches = rng.normal(0, 1, (4, 98, 50)).astype(np.float32)
    storage.write_patches(patches, tmp_path / "p.fpz")
    patches_back = storage.read_patches(tmp_path / "p.fpz")

    params = [(rng.normal(0, 1, (5, 9)), rng.normal(0, 1, 5))]
    storage.write_checkpoint(params, tmp_path / "c.hdp")
    params_back = storage.read_checkpoint(tmp_path / "c.hdp")

    ok = (
        np.array_equal(emb, emb_back)
        and np.array_equal(patches, patches_back)
        and all(
            np.array_equal(w.astype(np.float32), wb.astype(np.float32))
            and np.array_equal(bias.astype(np.float32), bb.astype(np.float32))
            for (w, bias), (wb, bb) in zip(params, params_back)
        )
    )
    report(ok, f"embedding/feature/checkpoint files round-trip losslessly: {ok}")
