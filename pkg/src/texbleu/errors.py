"""Exception hierarchy shared by the library and the CLI.

The CLI maps these onto exit codes: data errors exit 1, I/O errors 2,
artifact-consistency errors 3.
"""


class TexbleuError(Exception):
    """Base class for all errors raised by this package."""


class DataError(TexbleuError, ValueError):
    """Invalid input data (malformed records, bad arguments, bad files)."""


class FormatError(DataError):
    """An artifact file (vocab or table) could not be parsed."""


class ArtifactMismatchError(TexbleuError):
    """Vocab, embedding table and positional table do not fit together."""
