"""Exception types raised by the toolkit."""


class NyspecError(Exception):
    """Base class for all toolkit errors."""


class DegenerateVector(NyspecError):
    """Cosine similarity requested for a zero-norm vector under the 'error' policy."""


class MemoryBudgetExceeded(NyspecError):
    """A dense similarity block would exceed the configured entry cap."""


class InvalidLandmarkCount(NyspecError):
    """Requested landmark count is outside 2..n."""


class EmptyCandidatePool(NyspecError):
    """Greedy selection found no candidates; cannot occur for valid inputs."""


class DegenerateClustering(NyspecError):
    """k-means asked for more clusters than there are distinct points."""


class RankDeficientLandmarks(NyspecError):
    """Fewer landmark-block eigenvalues above the rank cutoff than the requested rank."""


class SolverFailure(NyspecError):
    """Eigensolver failed to converge."""


class LengthMismatch(NyspecError):
    """Predicted and true label vectors have different lengths."""


class ParseError(NyspecError):
    """Dataset file contains a cell that cannot be parsed; message names row/column."""


class RaggedRows(NyspecError):
    """Dataset file rows have inconsistent lengths."""


class EmptyDataset(NyspecError):
    """Dataset file contains no data rows."""
