"""dialogforge: build, clean, augment, serialize and evaluate
multi-service medical dialogue corpora."""

__version__ = "0.1.0"
