"""Software mention dependency network."""

__version__ = "1.0.0"
