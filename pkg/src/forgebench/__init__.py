"""forgebench: robustness assessment for media-forensics detectors.

Applies catalogs of parameterized image and video degradations at
controlled severities to labeled test sets, scores an external detector
process through a line-based JSON protocol, aggregates per-operation and
overall ROC-AUC reports, and materializes stochastically degraded
training data.
"""

__version__ = "0.1.0"

from .imaging import CodecParams, ImageBuffer, decode_image, encode_image
from .rng import Rng64, derive_stream

__all__ = [
    "CodecParams",
    "ImageBuffer",
    "Rng64",
    "decode_image",
    "derive_stream",
    "encode_image",
    "__version__",
]
