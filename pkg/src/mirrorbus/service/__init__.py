from .app import LiveSession, create_app

__all__ = ["create_app", "LiveSession"]
