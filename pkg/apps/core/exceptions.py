"""Exception hierarchy shared by every app."""


class PipelineError(Exception):
    """Base class for all errors raised by the pipeline."""


class ShapeError(PipelineError, ValueError):
    """A tensor shape or dimension contract was violated."""


class InvalidSizeError(PipelineError, ValueError):
    """A requested spatial size is outside the supported range or malformed."""


class ScoreError(PipelineError, ValueError):
    """Probabilities or a split count that cannot be turned into a score."""


class DataError(PipelineError):
    """A dataset or image could not be used."""


class EpochEnd(PipelineError):
    """Every batch of the current epoch has been served."""


class NonFiniteError(PipelineError, FloatingPointError):
    """A loss, input or output contained NaN or infinity."""


class CheckpointError(PipelineError):
    """Base class for checkpoint save/load failures."""


class CheckpointVersionError(CheckpointError):
    """The manifest was written by an unsupported format version."""


class CheckpointCorruptError(CheckpointError):
    """The manifest or blob is truncated, overlapping or incomplete."""


class UnknownParameterError(CheckpointError):
    """The manifest names a parameter the model does not have."""


class VerificationError(PipelineError):
    """A gradient check or acceptance threshold was breached."""
