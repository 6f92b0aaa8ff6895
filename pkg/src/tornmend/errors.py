"""Exception types raised by the reconstruction pipeline."""


class TornMendError(Exception):
    """Base class for every error raised by this package."""


class MalformedFile(TornMendError):
    pass


class UnsupportedFormat(TornMendError):
    pass


class EmptyMask(TornMendError):
    pass


class EmptyBoundary(EmptyMask):
    """Largest component is too small (< 4 pixels) to carry a boundary."""


class DegenerateBoundary(TornMendError):
    pass


class NoText(TornMendError):
    """Too few ink pixels to judge text orientation."""


class ZeroLengthChain(TornMendError):
    pass


class InvalidThresholds(TornMendError):
    pass


class NoCandidate(TornMendError):
    """A fragment offers no non-uniform (torn) side to match."""


class PlacementOutOfRange(TornMendError):
    pass


class LowConfidence(TornMendError):
    def __init__(self, char, score):
        super().__init__(f"best match {char!r} scored {score:.3f}")
        self.char = char
        self.score = score


class NoCompletion(TornMendError):
    pass


class Ambiguous(TornMendError):
    def __init__(self, hits):
        super().__init__(f"{len(hits)} dictionary words match: {', '.join(hits[:8])}")
        self.hits = list(hits)


class TextOverflow(TornMendError):
    pass


class InvalidSpec(TornMendError):
    pass


class ConfigError(TornMendError):
    pass
