"""
Exception hierarchy shared by every ferex module.

Library code raises these; only the CLI layer turns them into exit codes.
"""


class FerexError(Exception):
    pass


class ShapeError(FerexError, ValueError):
    pass


class DataValidationError(FerexError, ValueError):
    pass


class NonFiniteError(FerexError, ArithmeticError):
    pass


class ConfigurationError(FerexError):
    pass


class ImageDecodeError(FerexError):
    def __init__(self, filename: str, reason: str):
        self.filename = filename
        self.reason = reason
        super().__init__(f"{filename}: {reason}")


class ImageFormatError(ImageDecodeError):
    pass


class DatasetLayoutError(FerexError):
    pass


class EmptyDatasetError(FerexError):
    pass


class CheckpointFormatError(FerexError):
    pass


class CheckpointCorruptError(FerexError):
    pass


class TrainingDivergedError(FerexError):
    pass


class UsageError(ConfigurationError):
    """Bad command-line or config-file input; the CLI exits with status 2."""
