"""Reference detector adapters for the forgebench sweep protocol."""

__version__ = "0.1.0"

from .detectors import ToyDetector
from .server import serve, serve_model

__all__ = ["ToyDetector", "serve", "serve_model", "__version__"]
