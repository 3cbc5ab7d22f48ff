"""CGLMP Bell-inequality maximization and magic-simplex entanglement geometry."""

from .config import Settings

__version__ = Settings.VERSION

__all__ = ['__version__']
