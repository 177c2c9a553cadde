"""Exception types shared across the package."""


class S3IError(Exception):
    """Base class for package-specific errors."""


class MeshParseError(S3IError):
    """Raised when an OFF file cannot be parsed; carries the offending line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)


class EmptyMeshError(S3IError):
    """Mesh has no vertices or no faces."""


class ZeroAreaMeshError(S3IError):
    """Mesh has no triangle with positive area, so it cannot be sampled."""


class DegenerateCloudError(S3IError):
    """All points coincide; the cloud cannot be normalized."""


class ModelFormatError(S3IError):
    """Model file has a bad magic number or an unsupported format version."""


class ChecksumError(S3IError):
    """Model file failed its integrity check (truncated or corrupted)."""


class ConfigError(S3IError):
    """Invalid configuration value or unknown configuration key."""
