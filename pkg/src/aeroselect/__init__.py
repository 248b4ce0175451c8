"""Air-selection therapy game: sensing, localization, game engine, analytics."""

__version__ = "0.1.0"
