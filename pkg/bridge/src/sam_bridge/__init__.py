__version__ = "0.1.0"

from .fake_model import FakeModel
from .server import Session, serve_stdio, serve_tcp

__all__ = ["FakeModel", "Session", "serve_stdio", "serve_tcp"]
