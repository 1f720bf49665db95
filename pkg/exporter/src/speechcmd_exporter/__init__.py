"""Embedding exporter: pretrained backbone -> EMB1 rows aligned to a manifest.

This package talks to the recognition toolkit only through files: it reads
the JSON-lines dataset manifest and writes EMB1 embedding matrices plus a
provenance sidecar. It deliberately does not import the toolkit.
"""

from .backbones import StubBackbone, load_backbone
from .emb1 import write_embeddings
from .errors import BackboneError, ExporterError, ManifestError
from .export import ExporterConfig, ExportResult, export
from .manifest import Manifest, Record, parse_fragments, read_manifest

__version__ = "0.1.0"

__all__ = [
    "BackboneError",
    "ExporterConfig",
    "ExporterError",
    "ExportResult",
    "Manifest",
    "ManifestError",
    "Record",
    "StubBackbone",
    "export",
    "load_backbone",
    "parse_fragments",
    "read_manifest",
    "write_embeddings",
]
