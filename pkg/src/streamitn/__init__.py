"""Streaming inverse text normalization: subword tagging with chunked attention
masks, WFST transduction of tagged spans, and incremental chunk inference."""

__version__ = "0.1.0"
