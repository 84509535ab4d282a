"""Joint user association and resource allocation for multi-cell OFDMA VWNs."""

__version__ = "0.1.0"
