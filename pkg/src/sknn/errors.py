"""Exception hierarchy shared across the package."""


class SknnError(Exception):
    """Base class for all domain errors raised by this package."""


class PlaintextOutOfRange(SknnError):
    """Paillier plaintext magnitude is >= n/2 and cannot be encoded."""


class InvalidCiphertext(SknnError):
    """Ciphertext is malformed or shares a factor with the modulus."""


class Singular(SknnError):
    """Matrix has zero determinant."""


class ResampleExhausted(SknnError):
    """Random sampling failed to produce an invertible matrix within the retry budget."""


class InvalidParams(SknnError):
    """Security-parameter constraints violated."""


class CoordinateOutOfBound(SknnError):
    """A plaintext or query coordinate exceeds the declared bound."""


class QueryRefused(SknnError):
    """The data owner's admission policy rejected the query."""


class NormalizerOverflow(SknnError):
    """An intermediate Paillier plaintext could exceed n/2 for the declared bounds."""


class KTooLarge(SknnError):
    """Requested more neighbors than the database holds."""


class AmbiguousBeta(SknnError):
    """Subset GCDs conflict; the blinding factor cannot be determined."""


class NTooSmall(SknnError):
    """Probe magnitude too small to isolate a matrix column."""


class NoUniqueCandidate(SknnError):
    """The collision table did not confirm a unique secret-shift candidate."""


class SingularAfterRetries(SknnError):
    """No non-singular pair selection exists for the query-recovery system."""


class MalformedRow(SknnError):
    """CSV row cannot be parsed or integerized at the declared scale."""


class DimensionMismatch(SknnError):
    """Vector or matrix dimensions do not agree."""
