from .constants import PHI0, TOOLKIT_VERSION

__version__ = TOOLKIT_VERSION

__all__ = ['PHI0', '__version__']
