"""Error taxonomy: validation problems exit 2, environment problems exit 3."""


class ExporterError(Exception):
    """Base class for everything this package raises on purpose."""


class ManifestError(ExporterError):
    """The manifest file does not follow the published JSON-lines layout."""


class BackboneError(ExporterError):
    """The model reference cannot be resolved into a working backbone."""
