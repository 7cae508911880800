"""Error exponents of fixed-composition random codes under generalized likelihood decoding."""

__version__ = "0.1.0"
