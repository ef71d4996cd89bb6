"""Exception types shared across the engine.

Most errors subclass ValueError so that callers embedding the engine in a
larger pipeline can catch them with the native exception hierarchy.
"""


class InvalidSpec(ValueError):
    """Vote-field spec violates its invariants (angle, diameters, regions)."""


class EmptySelection(ValueError):
    """Ring mask selects no regions."""


class ShapeMismatch(ValueError):
    """Array shapes are inconsistent with each other or with a vote field."""


class UnknownBackend(ValueError):
    """Requested voting backend name is not registered."""


class OutOfBounds(ValueError):
    """A map coordinate lies outside the map."""


class NotAPermutation(ValueError):
    """Region remap indices are not a bijection on [0, R)."""


class ImageSizeMismatch(ValueError):
    """Underlay image does not match the heatmap size."""


class TensorFormatError(ValueError):
    """Malformed tensor file."""


class BadMagic(TensorFormatError):
    """Tensor file does not start with the expected magic string."""


class TruncatedFile(TensorFormatError):
    """Tensor file ends before the declared payload is complete."""


class UnsupportedDtype(TensorFormatError):
    """Dtype code in the header (or array dtype on write) is not supported."""
