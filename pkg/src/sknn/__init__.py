"""Secure k-nearest-neighbor encryption schemes, their cryptanalysis, and a protocol harness."""

__version__ = "0.1.0"
