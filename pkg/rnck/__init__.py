"""Reversible numeric composite keys: schema codec, VariantKey, NumKey and a sorted key index."""

__version__ = "0.1.0"
