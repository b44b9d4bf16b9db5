"""Speaker classification for multi-party dialog transcripts."""

__version__ = "0.1.0"
