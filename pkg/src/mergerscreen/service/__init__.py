"""HTTP service wrapping the screening library.

The application instance lives at ``mergerscreen.service.app:app``.
"""

from .app import create_app

__all__ = ["create_app"]
