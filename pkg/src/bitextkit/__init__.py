"""Hierarchical parallel-corpus construction from comparable bilingual documents."""

__version__ = "0.1.0"
