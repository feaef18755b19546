"""Exception types raised by the watermarking pipeline."""


class WhstampError(Exception):
    """Base class for all whstamp errors."""


class ContainerFormatError(WhstampError):
    """Malformed, truncated, or inconsistent tensor container file."""


class NonFiniteParameterError(WhstampError):
    """A tensor holds NaN or Inf where the pipeline requires finite values."""


class CapacityExceededError(WhstampError):
    """Framed message does not fit in the n_p * l hiding space."""


class ExponentConvergenceError(WhstampError):
    """Per-block decimal exponent failed to reach a fixed point while hiding."""


class KeyFormatError(WhstampError):
    """Watermark key material is not a valid 256-bit key."""
