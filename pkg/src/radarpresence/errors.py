"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Invalid parameter, shape, or precondition violation."""


class DataFormatError(IOError):
    """Base class for malformed dataset / checkpoint files."""


class BadMagicError(DataFormatError):
    """File does not start with the expected magic bytes."""


class VersionError(DataFormatError):
    """File carries an unsupported format version."""


class TruncatedFileError(DataFormatError):
    """File ends before the declared payload is complete."""


class ChecksumError(DataFormatError):
    """Payload bytes do not match the stored checksum."""


class SchemaError(DataFormatError):
    """File structure is valid but its contents violate the schema."""


class TrainingDivergedError(RuntimeError):
    """Training produced a non-finite loss."""
