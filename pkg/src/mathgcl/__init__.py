"""Formula retrieval with graph contrastive learning over SLT/OPT trees."""

__version__ = "0.1.0"

EMBEDDING_DIM = 100
