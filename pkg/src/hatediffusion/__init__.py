"""Hate diffusion over repost networks: ingestion, belief propagation,
user segmentation and group-level analytics."""

__version__ = "0.1.0"
