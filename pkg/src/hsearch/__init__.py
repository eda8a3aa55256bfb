"""Entity-aware faceted search over workplace incident reports."""

__version__ = "0.1.0"
