"""Exception types shared across the package.

Everything raised on purpose derives from :class:`AsymGCNError` so callers
(and the CLI) can distinguish our diagnostics from genuine bugs.
"""


class AsymGCNError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(AsymGCNError):
    """Operands disagree on a required dimension."""


class InvalidEdge(AsymGCNError):
    """An edge endpoint is out of range, or a duplicate edge was rejected."""


class InvalidNode(AsymGCNError):
    """A node id is outside [0, n)."""


class EmptyMask(AsymGCNError):
    """A training mask selects no nodes."""


class EmptyCandidates(AsymGCNError):
    """A ranking was requested over an empty candidate set."""


class KTooLarge(AsymGCNError):
    """Precision@k was asked for more entries than the ranked list holds."""


class LengthMismatch(AsymGCNError):
    """Two label vectors differ in length."""


class EmptyInput(AsymGCNError):
    """A metric received zero samples."""


class SingleCluster(AsymGCNError):
    """Silhouette needs at least two clusters."""


class TooFewEdges(AsymGCNError):
    """An edge split would leave the test set empty."""


class SingleClassInput(AsymGCNError):
    """The downstream classifier needs at least two classes in its training data."""


class NonFiniteLoss(AsymGCNError):
    """Training produced a NaN/Inf loss; carries the epoch index."""

    def __init__(self, epoch: int, branch: str, value: float):
        self.epoch = epoch
        self.branch = branch
        self.value = value
        super().__init__(f"non-finite {branch} loss ({value!r}) at epoch {epoch}")


class ParseError(AsymGCNError):
    """A data file is malformed; carries the path and 1-based line number."""

    def __init__(self, message: str, path=None, lineno=None):
        self.path = path
        self.lineno = lineno
        where = ""
        if path is not None:
            where = f" [{path}" + (f":{lineno}" if lineno is not None else "") + "]"
        super().__init__(message + where)


class CountMismatch(AsymGCNError):
    """Loaded counts disagree with the manifest's expectations (strict mode)."""

    def __init__(self, what: str, expected, found):
        self.what = what
        self.expected = expected
        self.found = found
        super().__init__(f"{what}: expected {expected}, found {found}")


class IoError(AsymGCNError):
    """A file could not be read or written."""
