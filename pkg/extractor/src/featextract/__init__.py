"""Image feature extraction to the FEAT binary interchange format."""

from .extractor import ExtractResult, ExtractSpec, extract, load_backbone, preprocess
from .featfile import write_feat

__version__ = "0.1.0"

__all__ = [
    "ExtractResult",
    "ExtractSpec",
    "extract",
    "load_backbone",
    "preprocess",
    "write_feat",
]
