"""Exception types raised across the package."""


class TrojanDecError(Exception):
    """Base class for every package-specific error."""


class MalformedPngError(TrojanDecError):
    """Input bytes are not a decodable PNG stream."""


class UnsupportedPngVariantError(TrojanDecError):
    """PNG decoded but is not 8-bit grayscale or RGB (16-bit, palette, alpha)."""


class OutOfBoundsError(TrojanDecError):
    """A square region does not fit inside the image."""


class InvalidGeometryError(TrojanDecError):
    """Mask-set parameters are geometrically impossible (e.g. k > t)."""


class GeometryMismatchError(TrojanDecError):
    """Two arrays that must share geometry do not."""


class ServiceUnreachableError(TrojanDecError):
    """Remote endpoint could not be reached or answered with an error."""


class DimensionMismatchError(TrojanDecError):
    """Feature vectors do not have the expected dimensionality."""


class EmptyBatchError(TrojanDecError):
    """A feature query was issued with no images."""


class ZeroVectorError(TrojanDecError):
    """Cosine similarity is undefined for an all-zero vector."""


class TooFewPointsError(TrojanDecError):
    """Clustering was asked for more clusters than points."""


class DegenerateRangeError(TrojanDecError):
    """All values are identical; the uniform reference range is empty."""


class NotTrojanedError(TrojanDecError):
    """Restoration prototype requested for a verdict that is clean."""


class MaskCoversEverythingError(TrojanDecError):
    """No unmasked pixels remain to anchor the harmonic fill."""


class EmptyCorpusError(TrojanDecError):
    """Evaluation requested on a corpus with no items."""


class MissingCentroidError(TrojanDecError):
    """A corpus label has no centroid in the supplied classifier."""
