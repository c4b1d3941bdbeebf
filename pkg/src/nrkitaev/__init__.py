"""Dissipative non-reciprocal Kitaev chain: correlation-matrix dynamics and diagnostics."""

__version__ = "0.1.0"
