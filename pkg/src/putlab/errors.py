"""Exception hierarchy shared across the workbench."""


class PutLabError(Exception):
    """Base class for all workbench errors."""


class DataError(PutLabError):
    """Problems with input data: parsing, validation, cleaning."""


class ArffParseError(DataError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CsvParseError(DataError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyDataError(DataError):
    """File has a header but no data rows, or no rows survived parsing."""


class EmptyAfterCleanError(DataError):
    """Every row was removed by the cleaning pass."""


class ConfigError(PutLabError):
    """Invalid experiment configuration (bad ranges, conflicting options)."""


class OutOfRangeError(ConfigError):
    """A numeric parameter fell outside its documented interval."""


class ClassTooSmallError(PutLabError):
    """A class has fewer instances than the number of CV folds."""

    def __init__(self, label: str, count: int, folds: int):
        self.label = label
        self.count = count
        self.folds = folds
        super().__init__(
            f"class {label!r} has {count} instances, fewer than {folds} folds"
        )


class NoViablePartitionsError(PutLabError):
    """Every candidate attribute set was excluded by privacy exceptions."""


class ForeignCursorError(PutLabError):
    """A generator cursor does not belong to the plan trying to resume it."""


class CheckpointError(PutLabError):
    """Base class for checkpoint load failures."""


class TornCheckpointError(CheckpointError):
    """Checkpoint file is truncated or fails its checksum."""


class DigestMismatchError(CheckpointError):
    """Checkpoint refers to a different spec or dataset than supplied."""


class VersionMismatchError(CheckpointError):
    """Checkpoint was written by an incompatible format version."""
