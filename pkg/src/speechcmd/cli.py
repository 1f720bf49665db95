"""Command-line pipeline: prepare -> featurize -> train -> eval.

Every knob has a documented default; a JSON config file (--config) can
override defaults, and explicit flags override the config file. Each
subcommand logs a banner with its fully resolved settings so any artifact
can be reproduced from its log. Exit codes: 0 success, 2 validation or
format error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import dataset, dsp, head, metrics, storage
from .errors import FormatError, InvalidInputError
from .wavio import read_wav

log = logging.getLogger("speechcmd")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3

# One namespace of tunables shared by the config file and the flags.
CONFIG_DEFAULTS = {
    "seed": 0,
    "train_fraction": 0.8,
    "snr_min_db": 5.0,
    "snr_max_db": 30.0,
    "augment": True,
    "frame_duration_s": 0.025,
    "hop_duration_s": 0.010,
    "sample_rate": 16000,
    "n_bands": 50,
    "f_min_hz": 0.0,
    "f_max_hz": None,  # None = Nyquist of sample_rate
    "epochs": 15,
    "batch_size": 128,
    "learning_rate": 0.0003,
    "hidden": "512",
}

_JSON_LOGS = False


class _JsonLogFormatter(logging.Formatter):
    def format(self, record):
        payload = {
            "event": "log",
            "level": record.levelname.lower(),
            "message": record.getMessage(),
        }
        return json.dumps(payload, separators=(",", ":"))


def _setup_logging(json_mode: bool) -> None:
    global _JSON_LOGS
    _JSON_LOGS = json_mode
    handler = logging.StreamHandler(sys.stderr)
    if json_mode:
        handler.setFormatter(_JsonLogFormatter())
    else:
        handler.setFormatter(logging.Formatter("[%(name)s] %(message)s"))
    root = logging.getLogger()
    root.handlers[:] = [handler]
    root.setLevel(logging.INFO)


def _emit(event: str, payload: dict) -> None:
    """One structured progress event: key=value text or a JSON line."""
    if _JSON_LOGS:
        print(json.dumps({"event": event, **payload}, default=str, separators=(",", ":")), file=sys.stderr)
    else:
        body = " ".join(f"{k}={v}" for k, v in payload.items())
        log.info("%s: %s", event, body)


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as f:
            cfg = json.load(f)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise InvalidInputError("config file must hold a JSON object")
    unknown = sorted(set(cfg) - set(CONFIG_DEFAULTS))
    if unknown:
        raise InvalidInputError(f"unknown config keys: {', '.join(unknown)}")
    return cfg


def _resolve(args, keys) -> dict:
    """defaults < config file < explicit flags, for the listed keys."""
    config = _load_config(getattr(args, "config", None))
    out = {}
    for k in keys:
        flag = getattr(args, k, None)
        out[k] = flag if flag is not None else config.get(k, CONFIG_DEFAULTS[k])
    if "f_max_hz" in out and out["f_max_hz"] is None:
        out["f_max_hz"] = out["sample_rate"] / 2.0
    return out


_FEATURE_KEYS = ("frame_duration_s", "hop_duration_s", "sample_rate", "n_bands", "f_min_hz", "f_max_hz")


def _frontend(resolved):
    cfg = dsp.FrameConfig(
        frame_duration_s=resolved["frame_duration_s"],
        hop_duration_s=resolved["hop_duration_s"],
        sample_rate=resolved["sample_rate"],
    )
    fb = dsp.build_filterbank(
        n_bands=resolved["n_bands"],
        n_bins=cfg.frame_len // 2 + 1,
        sample_rate=cfg.sample_rate,
        f_min=resolved["f_min_hz"],
        f_max=resolved["f_max_hz"],
    )
    return cfg, fb


def _parse_hidden(text: str) -> tuple[int, ...]:
    text = text.strip().lower()
    if text in ("", "none"):
        return ()
    try:
        return tuple(int(p) for p in text.split(","))
    except ValueError as exc:
        raise InvalidInputError(f"--hidden wants comma-separated ints or 'none', got {text!r}") from exc


def _excluded_sidecar(feature_path) -> Path:
    return Path(str(feature_path) + ".excluded.json")


def _read_exclusions(feature_path) -> list[str]:
    sidecar = _excluded_sidecar(feature_path)
    if not sidecar.exists():
        return []
    try:
        with open(sidecar, encoding="utf-8") as f:
            data = json.load(f)
        return list(data["excluded"])
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise FormatError(f"bad exclusion sidecar {sidecar}: {exc}") from exc


def _load_features(args, manifest) -> tuple[np.ndarray, list]:
    """Feature/embedding rows plus the manifest records they align with."""
    src = args.embeddings if args.embeddings else args.features
    excluded = set(_read_exclusions(src))
    kept = [r for r in manifest.records if r.path not in excluded]
    if args.embeddings:
        x = storage.read_embeddings(args.embeddings).astype(np.float64)
    else:
        patches = storage.read_patches(args.features)
        x = patches.reshape(patches.shape[0], -1).astype(np.float64)
    if len(x) != len(kept):
        raise InvalidInputError(
            f"{len(x)} feature rows do not align with {len(kept)} manifest records"
            f" ({len(excluded)} excluded)"
        )
    return x, kept


def _split_xy(x, kept, which: str):
    idx = [i for i, r in enumerate(kept) if r.split == which]
    y = np.array([kept[i].label for i in idx], dtype=np.int64)
    return x[idx], y


def cmd_prepare(args) -> int:
    resolved = _resolve(args, ("seed", "train_fraction", "snr_min_db", "snr_max_db", "augment"))
    _emit("config", {"command": "prepare", **resolved})
    manifest = dataset.prepare(
        args.root,
        seed=resolved["seed"],
        train_fraction=resolved["train_fraction"],
        snr_range_db=(resolved["snr_min_db"], resolved["snr_max_db"]),
        augment=resolved["augment"],
    )
    dataset.write_manifest(manifest, args.out)
    counts = dict(zip(manifest.labels.names, manifest.class_counts))
    _emit("prepared", {"records": len(manifest.records), "out": str(args.out), **counts})
    return EXIT_OK


def cmd_featurize(args) -> int:
    resolved = _resolve(args, ("seed",) + _FEATURE_KEYS)
    _emit("config", {"command": "featurize", **resolved})
    manifest = dataset.read_manifest(args.manifest)
    cfg, fb = _frontend(resolved)

    rows = []
    excluded = []
    cache: dict[str, dsp.AudioClip] = {}
    for rec in manifest.records:
        try:
            clip = dataset.load_record_waveform(rec, manifest.root, cache)
        except (OSError, InvalidInputError) as exc:
            excluded.append(rec.path)
            log.warning("skipping %s: %s", rec.path, exc)
            continue
        patch = dsp.featurize(clip, clip_id=rec.path, cfg=cfg, filterbank=fb)[0]
        rows.append(patch.values.astype("<f4"))
        # keep noise files cached (they back many records), drop one-shot clips
        base, _ = dataset.parse_fragments(rec.path)
        for k in [k for k in cache if not k.startswith(dataset.BACKGROUND_DIR) and k != base]:
            del cache[k]

    n_frames = dsp.frames_per_segment(cfg)
    stack = (
        np.stack(rows) if rows else np.empty((0, n_frames, resolved["n_bands"]), dtype=np.float32)
    )
    storage.write_patches(stack, args.out)
    with open(_excluded_sidecar(args.out), "w", encoding="utf-8", newline="\n") as f:
        json.dump({"version": 1, "excluded": excluded}, f, separators=(",", ":"))
        f.write("\n")
    _emit("featurized", {"patches": len(rows), "excluded": len(excluded), "out": str(args.out)})
    return EXIT_OK


def cmd_train(args) -> int:
    resolved = _resolve(args, ("seed", "epochs", "batch_size", "learning_rate", "hidden"))
    manifest = dataset.read_manifest(args.manifest)
    x, kept = _load_features(args, manifest)
    x_train, y_train = _split_xy(x, kept, "train")
    x_val, y_val = _split_xy(x, kept, "val")

    head_cfg = head.HeadConfig(
        in_dim=x.shape[1],
        n_classes=manifest.labels.n_classes,
        hidden_dims=_parse_hidden(resolved["hidden"]),
    )
    train_cfg = head.TrainConfig(
        epochs=resolved["epochs"],
        batch_size=resolved["batch_size"],
        learning_rate=resolved["learning_rate"],
    )
    _emit(
        "config",
        {
            "command": "train",
            **resolved,
            "in_dim": head_cfg.in_dim,
            "n_classes": head_cfg.n_classes,
            "train_rows": len(x_train),
            "val_rows": len(x_val),
        },
    )

    def on_epoch(epoch, params, row):
        _emit("epoch", {k: (f"{v:.6f}" if isinstance(v, float) else v) for k, v in row.items()})
        if args.checkpoint_every_epoch:
            storage.write_checkpoint(params, Path(f"{args.out_checkpoint}.epoch{epoch:02d}"))

    params, history = head.train(
        x_train, y_train, x_val, y_val, head_cfg, train_cfg, seed=resolved["seed"], on_epoch=on_epoch
    )
    storage.write_checkpoint(params, args.out_checkpoint)
    if args.out_history:
        storage.write_history(history.rows, args.out_history)
    _emit(
        "trained",
        {
            "final_val_acc": f"{history.final_val_acc:.6f}",
            "checkpoint": str(args.out_checkpoint),
        },
    )
    return EXIT_OK


def cmd_eval(args) -> int:
    resolved = _resolve(args, ("seed",))
    _emit("config", {"command": "eval", **resolved, "out_dir": str(args.out_dir)})
    manifest = dataset.read_manifest(args.manifest)
    params = storage.read_checkpoint(args.checkpoint)
    x, kept = _load_features(args, manifest)
    if x.shape[1] != params[0][0].shape[1]:
        raise InvalidInputError(
            f"checkpoint expects width {params[0][0].shape[1]}, features have {x.shape[1]}"
        )
    x_val, y_val = _split_xy(x, kept, "val")
    if len(x_val) == 0:
        raise InvalidInputError("manifest has no validation records")

    preds, _ = head.predict(params, x_val)
    cm = metrics.confusion(y_val, preds, manifest.labels.n_classes)
    report = metrics.summarize(cm, list(manifest.labels.names))
    history_rows = storage.read_history(args.history) if args.history else None
    paths = metrics.render_report(report, args.out_dir, history_rows)
    for flag in report.flags:
        log.warning("metric flag: %s", flag)

    print(f"val_records {len(y_val)}")
    print(f"overall_accuracy {report.overall_accuracy:.6f}")
    for m in ("precision", "recall", "f1", "specificity"):
        print(f"macro_{m} {report.macro[m]:.6f}")
    _emit("evaluated", {"out_dir": str(args.out_dir), "files": len(paths)})
    return EXIT_OK


def cmd_predict(args) -> int:
    resolved = _resolve(args, ("seed",) + _FEATURE_KEYS)
    _emit("config", {"command": "predict", **resolved})
    params = storage.read_checkpoint(args.checkpoint)
    cfg, fb = _frontend(resolved)
    width = dsp.frames_per_segment(cfg) * resolved["n_bands"]
    in_dim = params[0][0].shape[1]
    if width != in_dim:
        raise InvalidInputError(
            f"checkpoint expects input width {in_dim}, but audio patches flatten to {width};"
            " only patch-trained heads can score raw audio"
        )

    clip = read_wav(args.audio)
    patches = dsp.featurize(clip, clip_id=str(args.audio), cfg=cfg, filterbank=fb)
    x = np.stack([p.values.reshape(-1) for p in patches])
    probs = head.forward(params, x).mean(axis=0)  # average over 1 s segments
    names = dataset.LABELS.names
    if len(names) != len(probs):
        names = tuple(str(i) for i in range(len(probs)))
    top = int(np.argmax(probs))
    print(f"predicted {names[top]} p={probs[top]:.6f} segments={len(patches)}")
    for name, p in zip(names, probs):
        print(f"{name} {p:.6f}")
    return EXIT_OK


def cmd_report(args) -> int:
    resolved = _resolve(args, ("seed",))
    _emit("config", {"command": "report", **resolved, "out_dir": str(args.out_dir)})
    cm, names = metrics.read_confusion_csv(args.confusion)
    report = metrics.summarize(cm, names)
    history_rows = storage.read_history(args.history) if args.history else None
    paths = metrics.render_report(report, args.out_dir, history_rows)
    print(f"overall_accuracy {report.overall_accuracy:.6f}")
    _emit("reported", {"out_dir": str(args.out_dir), "files": len(paths)})
    return EXIT_OK


def _add_common(p: argparse.ArgumentParser) -> None:
    # also accepted after the subcommand; SUPPRESS keeps the top-level value
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="run seed (default 0)")
    p.add_argument("--config", type=Path, default=argparse.SUPPRESS, help="JSON config file")
    p.add_argument("--json", action="store_true", default=argparse.SUPPRESS, help="JSON log lines on stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="speechcmd",
        description="Speech-command recognition pipeline: log-mel features, noise-augmented dataset, softmax head.",
    )
    parser.add_argument("--seed", type=int, default=None, help="run seed (default 0)")
    parser.add_argument("--config", type=Path, default=None, help="JSON config file")
    parser.add_argument("--json", action="store_true", default=False, help="JSON log lines on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="scan a dataset tree into a conditioned manifest")
    p.add_argument("--root", type=Path, required=True, help="dataset root directory")
    p.add_argument("--out", type=Path, required=True, help="output manifest (JSON lines)")
    p.add_argument("--train-fraction", dest="train_fraction", type=float, default=None)
    p.add_argument("--snr-min-db", dest="snr_min_db", type=float, default=None)
    p.add_argument("--snr-max-db", dest="snr_max_db", type=float, default=None)
    p.add_argument("--no-augment", dest="augment", action="store_false", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("featurize", help="compute log-mel patches for every manifest record")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="output feature file (.fpz)")
    p.add_argument("--frame-duration-s", dest="frame_duration_s", type=float, default=None)
    p.add_argument("--hop-duration-s", dest="hop_duration_s", type=float, default=None)
    p.add_argument("--sample-rate", dest="sample_rate", type=int, default=None)
    p.add_argument("--n-bands", dest="n_bands", type=int, default=None)
    p.add_argument("--f-min-hz", dest="f_min_hz", type=float, default=None)
    p.add_argument("--f-max-hz", dest="f_max_hz", type=float, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("train", help="train the classifier head")
    p.add_argument("--manifest", type=Path, required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--features", type=Path, help="FPZ1 patch file (fallback mode)")
    src.add_argument("--embeddings", type=Path, help="EMB1 backbone embedding file")
    p.add_argument("--out-checkpoint", dest="out_checkpoint", type=Path, required=True)
    p.add_argument("--out-history", dest="out_history", type=Path, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p.add_argument("--learning-rate", dest="learning_rate", type=float, default=None)
    p.add_argument("--hidden", type=str, default=None, help="comma-separated hidden sizes, or 'none'")
    p.add_argument("--checkpoint-every-epoch", action="store_true", default=False)
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on the validation split")
    p.add_argument("--manifest", type=Path, required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--features", type=Path)
    src.add_argument("--embeddings", type=Path)
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--out-dir", dest="out_dir", type=Path, required=True)
    p.add_argument("--history", type=Path, default=None, help="history CSV for the curves plot")
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="classify one audio file with a patch-trained head")
    p.add_argument("audio", type=Path)
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--n-bands", dest="n_bands", type=int, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("report", help="re-render metric tables and plots from saved CSVs")
    p.add_argument("--confusion", type=Path, required=True, help="confusion.csv from a previous eval")
    p.add_argument("--history", type=Path, default=None)
    p.add_argument("--out-dir", dest="out_dir", type=Path, required=True)
    _add_common(p)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _setup_logging(bool(getattr(args, "json", False)))
    try:
        return args.func(args)
    except (InvalidInputError, FormatError) as exc:
        log.error("%s", exc)
        return EXIT_VALIDATION
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
