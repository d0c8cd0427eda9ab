"""Exception types shared across the pipeline.

Every error raised on a contract violation derives from AffektError so the
CLI can map failures to exit codes in one place. Errors that mean "the caller
handed us unusable input or a missing artifact" additionally derive from
UsageError and exit with status 2; everything else exits 1.
"""

from __future__ import annotations


class AffektError(Exception):
    """Base class for all pipeline errors."""


class UsageError(AffektError):
    """Bad invocation: missing inputs, malformed config, unreadable artifacts."""


# --- signal layer ---

class EdgeOutOfRange(UsageError):
    """Filter band edges violate 0 < lo (< hi) < fs/2."""


class InvalidOrder(UsageError):
    """Filter order must be a positive integer."""


# --- entropy layer ---

class SeriesTooShort(UsageError):
    """Series shorter than the m+2 samples template matching needs."""


class ScaleTooLarge(UsageError):
    """Coarse-graining scale leaves too few points."""


# --- feature layer ---

class WindowTooShort(UsageError):
    """Window shorter than one PSD segment."""


class NyquistExceeded(UsageError):
    """Requested band extends past fs/2."""


# --- dataset layer ---

class MissingFile(UsageError):
    """A required file or directory does not exist."""


class InvalidFormat(UsageError):
    """A binary artifact has a bad magic, version, or truncated payload."""


class ShapeMismatch(AffektError):
    """Array payload size disagrees with its declared shape."""


class MalformedEvent(UsageError):
    """An events table row is unparseable; message names the row."""


class UnknownEmotionName(AffektError):
    """Emotion name not present in a frozen label table."""


class ClassTooSmall(AffektError):
    """A minority class has too few members for k-neighbor interpolation."""


class EmptyClass(AffektError):
    """Split requested over an empty window collection."""


class RecordingTooShort(UsageError):
    """Recording shorter than one analysis window."""


# --- model layer ---

class NonFiniteActivation(AffektError):
    """NaN or inf appeared in a forward pass."""


class NonFiniteGradient(AffektError):
    """NaN or inf appeared in a backward pass."""


class NonFiniteLoss(AffektError):
    """Training loss became NaN or inf; message names the epoch."""


class EmptyEvaluationSet(UsageError):
    """Evaluation requested on zero batches."""
