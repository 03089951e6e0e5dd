"""Gaze-locked region selection, fully local vision-language inference,
streaming speech I/O, and a latency benchmark harness, operable through a
browser HUD simulator."""

__version__ = "0.1.0"
