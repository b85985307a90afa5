"""Simulator for all-optical LEO downlink with elevated ground stations."""

__version__ = "0.1.0"
