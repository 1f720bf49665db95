"""Command line: one export pass per invocation.

Exit codes: 0 success, 2 validation problem (bad manifest, bad reference
grammar), 3 environment problem (unloadable backbone, unreadable paths).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .errors import BackboneError, ExporterError
from .export import ExporterConfig, export

log = logging.getLogger("speechcmd_exporter")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_ENVIRONMENT = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="speechcmd-export",
        description="Run a pretrained audio backbone over every manifest record and write EMB1 embeddings in manifest order.",
    )
    parser.add_argument("--manifest", type=Path, required=True, help="dataset manifest (JSON lines)")
    parser.add_argument(
        "--model", required=True,
        help="backbone reference: stub:<dim>[:<seed>] or a SavedModel directory",
    )
    parser.add_argument("--out", type=Path, required=True, help="output embedding file (.emb1)")
    parser.add_argument("--pooling", choices=("mean", "first"), default="mean",
                        help="combine a record's analysis frames (default mean)")
    parser.add_argument("--root", type=Path, default=None,
                        help="audio root override (default: the manifest header's root)")
    return parser


def _setup_logging() -> None:
    # rebind on every run: long-lived handlers can outlive their stream
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("[%(name)s] %(message)s"))
    root = logging.getLogger()
    root.handlers[:] = [handler]
    root.setLevel(logging.INFO)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _setup_logging()
    cfg_kwargs = dict(
        manifest=args.manifest, model_ref=args.model, out=args.out,
        pooling=args.pooling, root=args.root,
    )
    try:
        result = export(ExporterConfig(**cfg_kwargs))
    except BackboneError as exc:
        log.error("%s", exc)
        return EXIT_ENVIRONMENT
    except ExporterError as exc:
        log.error("%s", exc)
        return EXIT_VALIDATION
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_ENVIRONMENT
    print(
        f"exported rows={result.matrix.shape[0]} dim={result.matrix.shape[1]}"
        f" pooling={args.pooling} excluded={len(result.excluded)} out={result.out}"
    )
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
