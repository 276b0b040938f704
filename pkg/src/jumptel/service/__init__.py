"""HTTP front end: a FastAPI app exposing the core library.

The CLI talks to this app in-process by default; ``jumptel serve`` runs it
under uvicorn for remote clients.
"""

from .routes import create_app

__all__ = ["create_app"]
