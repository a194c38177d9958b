"""Citation contextualization, facet labeling, and faceted extractive summarization."""

__version__ = "0.1.0"
