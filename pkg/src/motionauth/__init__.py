"""Forecast-then-authenticate behavioral biometrics for VR controller trajectories."""

__version__ = "0.1.0"
