"""Particle simulators and verifiers for the grazing-collision limit."""

__version__ = "0.1.0"
