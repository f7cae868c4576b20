"""Scene-graph construction and procedural QA synthesis for driving scenes."""

__version__ = "0.1.0"
