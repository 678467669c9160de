"""Entanglement criteria built from SIC POVMs and quantum 2-designs."""

__version__ = "0.1.0"
